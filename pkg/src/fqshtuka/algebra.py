"""Finite-dimensional commutative F_q-algebras given by structure constants.

An element is a coordinate vector (numpy int64 array of F_q encodings) with
respect to the basis b_0, ..., b_{k-1}, where b_0 is the unit.  Arrays of
elements carry the coordinate axis last.  Every R-linear problem is solved by
flattening it to an F_q-linear one.
"""
from __future__ import annotations

import itertools
from functools import cached_property

import numpy as np

from . import field as fl
from .errors import (AlgebraMismatch, InvalidAlgebra, NoSolution, NotAUnit,
                     NotLocal, ShtukaError)
from .field import FqField


def apply_linear(F: FqField, M, X):
    """Apply the F_q-matrix M to the coordinate (last) axis of X."""
    X = np.asarray(X, dtype=np.int64)
    shape = X.shape
    flat = X.reshape(-1, shape[-1])
    out = F.matmul(flat, np.asarray(M, dtype=np.int64).T)
    return out.reshape(shape[:-1] + (M.shape[0],))


class ValidationReport:
    """Outcome of checking the algebra axioms; `failures` is a list of
    (axiom, witness) pairs."""

    def __init__(self, failures):
        self.failures = list(failures)

    @property
    def ok(self):
        return not self.failures

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "ValidationReport(ok)"
        return f"ValidationReport({self.failures})"


class FdAlgebra:
    """A local Artinian commutative F_q-algebra with a designated nilpotent
    element zeta.

    `struct` has shape (k, k, k): struct[i, j, l] is the b_l-coordinate of
    b_i * b_j.  Construction validates the axioms unless `check=False`.
    """

    def __init__(self, field: FqField, struct, names=None, zeta=None,
                 check=True, label=None):
        self.field = field
        C = np.asarray(struct, dtype=np.int64) % field.q
        if C.ndim != 3 or C.shape[0] != C.shape[1] or C.shape[1] != C.shape[2]:
            raise InvalidAlgebra("structure constants must have shape (k, k, k)")
        self.C = C
        self.k = C.shape[0]
        self.names = list(names) if names else [f"b{i}" for i in range(self.k)]
        if len(self.names) != self.k:
            raise InvalidAlgebra("one name per basis vector is required")
        self.zeta = (np.zeros(self.k, dtype=np.int64) if zeta is None
                     else np.asarray(zeta, dtype=np.int64) % field.q)
        self.label = label
        # left multiplication matrices: L[i][l, j] = C[i, j, l]
        self._L = np.transpose(C, (0, 2, 1)).copy()
        if check:
            report = validate_algebra(self)
            if not report.ok:
                axiom, witness = report.failures[0]
                cls = NotLocal if axiom == "local" else InvalidAlgebra
                raise cls(f"algebra axiom '{axiom}' fails", witness=witness)

    def __repr__(self):
        return self.label or f"FdAlgebra(q={self.field.q}, dim={self.k})"

    # -- basic elements ----------------------------------------------------
    @property
    def q(self):
        return self.field.q

    def zero(self):
        return np.zeros(self.k, dtype=np.int64)

    def one(self):
        v = np.zeros(self.k, dtype=np.int64)
        v[0] = 1
        return v

    def basis_vector(self, i):
        v = np.zeros(self.k, dtype=np.int64)
        v[i] = 1
        return v

    def scalar(self, a: int):
        v = np.zeros(self.k, dtype=np.int64)
        v[0] = int(a)
        return v

    def elem(self, coords) -> "AlgElem":
        return AlgElem(self, coords)

    def element_by_name(self, name):
        return self.basis_vector(self.names.index(name))

    # -- arithmetic on coordinate arrays -----------------------------------
    def add(self, x, y):
        return self.field.add(np.asarray(x, dtype=np.int64), y)

    def sub(self, x, y):
        return self.field.sub(np.asarray(x, dtype=np.int64), y)

    def neg(self, x):
        return self.field.neg(np.asarray(x, dtype=np.int64))

    def smul(self, a, x):
        """F_q-scalar times element(s)."""
        return self.field.mul(a, np.asarray(x, dtype=np.int64))

    def mul(self, x, y):
        """Product of (broadcastable arrays of) elements."""
        F = self.field
        X = np.asarray(x, dtype=np.int64)
        Y = np.asarray(y, dtype=np.int64)
        if F.e == 1:
            return np.einsum("...i,...j,ijl->...l", X, Y, self.C) % F.p
        T = F.MUL[X[..., :, None], Y[..., None, :]]
        U = F.MUL[T[..., None], self.C]
        shape = U.shape[:-3] + (self.k * self.k, self.k)
        return F.sum(U.reshape(shape), axis=-2)

    def sum(self, X, axis=0):
        X = np.asarray(X, dtype=np.int64)
        if axis < 0:
            axis += X.ndim
        if axis == X.ndim - 1:
            raise ShtukaError("cannot sum over the coordinate axis")
        return self.field.sum(X, axis=axis)

    def mulmat(self, x):
        """F_q-matrix of multiplication by x (column j = x * b_j)."""
        F = self.field
        x = np.asarray(x, dtype=np.int64)
        if F.e == 1:
            return np.einsum("i,ilj->lj", x, self._L) % F.p
        return F.sum(F.MUL[x[:, None, None], self._L], axis=0)

    def pow(self, x, n: int):
        r = self.one()
        x = np.asarray(x, dtype=np.int64)
        while n:
            if n & 1:
                r = self.mul(r, x)
            x = self.mul(x, x)
            n >>= 1
        return r

    @cached_property
    def frobenius_matrix(self):
        """Matrix of the F_q-linear map x -> x^q."""
        cols = [self.pow(self.basis_vector(j), self.q) for j in range(self.k)]
        return np.stack(cols, axis=1)

    def frobenius_power_matrix(self, n: int):
        Fm = self.frobenius_matrix
        M = np.eye(self.k, dtype=np.int64)
        for _ in range(n):
            M = self.field.matmul(Fm, M)
        return M

    def frob(self, X, n: int = 1):
        """Apply x -> x^(q^n) to every element of X."""
        if n == 0:
            return np.asarray(X, dtype=np.int64).copy()
        return apply_linear(self.field, self.frobenius_power_matrix(n), X)

    def is_zero(self, x):
        return not np.any(x)

    def equal(self, x, y):
        return np.array_equal(np.asarray(x) % self.q, np.asarray(y) % self.q)

    def try_invert(self, x):
        try:
            y = fl.solve(self.field, self.mulmat(x), self.one())
        except NoSolution:
            return None
        if not self.equal(self.mul(x, y), self.one()):
            return None
        return y

    def invert(self, x):
        y = self.try_invert(x)
        if y is None:
            raise NotAUnit(f"{self.format(x)} is not a unit", witness=x)
        return y

    def is_unit(self, x):
        return self.try_invert(x) is not None

    # -- structure ---------------------------------------------------------
    @cached_property
    def nilradical(self):
        """F_q-basis (rows) of the nilradical."""
        t = 0
        while self.q ** t < self.k:
            t += 1
        return fl.kernel(self.field, self.frobenius_power_matrix(max(t, 1)))

    @cached_property
    def nilpotency_index(self):
        """Least n with m^n = 0 for every element m of the nilradical (the
        nilradical is an ideal, so this bounds products as well)."""
        rows = self.nilradical
        if rows.shape[0] == 0:
            return 1
        n, cur = 1, rows
        while fl.rank(self.field, cur) > 0:
            prods = self.mul(cur[:, None, :], rows[None, :, :]).reshape(-1, self.k)
            cur = fl.row_space(self.field, prods)
            n += 1
        return n

    @cached_property
    def zeta_index(self):
        """Nilpotency index nu of zeta (least nu >= 1 with zeta^nu = 0)."""
        x = self.zeta.copy()
        n = 1
        while np.any(x):
            x = self.mul(x, self.zeta)
            n += 1
            if n > self.k + 1:
                raise InvalidAlgebra("zeta is not nilpotent", witness=self.zeta)
        return n

    def is_field(self):
        return self.nilradical.shape[0] == 0

    def format(self, x):
        F = self.field
        terms = []
        for i, c in enumerate(np.asarray(x)):
            if c:
                cs = F.format(int(c))
                if i == 0:
                    terms.append(cs)
                elif cs == "1":
                    terms.append(self.names[i])
                else:
                    if "+" in cs:
                        cs = f"({cs})"
                    terms.append(f"{cs}*{self.names[i]}")
        return " + ".join(terms) if terms else "0"

    def same_as(self, other):
        return (self is other or (
            isinstance(other, FdAlgebra) and self.field == other.field
            and self.k == other.k and np.array_equal(self.C, other.C)))

    def require_same(self, other):
        if not self.same_as(other):
            raise AlgebraMismatch(f"{self!r} and {other!r} differ")

    def elements(self):
        """Iterate all q^k elements (only sensible for tiny algebras)."""
        for t in itertools.product(range(self.q), repeat=self.k):
            yield np.array(t, dtype=np.int64)


class AlgElem:
    """Immutable wrapper around a coordinate vector with operator overloads."""

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: FdAlgebra, coords):
        self.algebra = algebra
        c = np.asarray(coords, dtype=np.int64) % algebra.q
        if c.shape != (algebra.k,):
            raise ShtukaError("coordinate vector has the wrong length")
        c.setflags(write=False)
        self.coords = c

    def _other(self, o):
        if isinstance(o, AlgElem):
            self.algebra.require_same(o.algebra)
            return o.coords
        if isinstance(o, int):
            return self.algebra.scalar(o % self.algebra.field.p)
        return NotImplemented

    def __add__(self, o):
        c = self._other(o)
        return AlgElem(self.algebra, self.algebra.add(self.coords, c))

    __radd__ = __add__

    def __sub__(self, o):
        c = self._other(o)
        return AlgElem(self.algebra, self.algebra.sub(self.coords, c))

    def __rsub__(self, o):
        c = self._other(o)
        return AlgElem(self.algebra, self.algebra.sub(c, self.coords))

    def __mul__(self, o):
        c = self._other(o)
        return AlgElem(self.algebra, self.algebra.mul(self.coords, c))

    __rmul__ = __mul__

    def __neg__(self):
        return AlgElem(self.algebra, self.algebra.neg(self.coords))

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        return AlgElem(self.algebra, self.algebra.pow(self.coords, n))

    def inverse(self):
        return AlgElem(self.algebra, self.algebra.invert(self.coords))

    def frobenius(self, n=1):
        return AlgElem(self.algebra, self.algebra.frob(self.coords, n))

    def is_unit(self):
        return self.algebra.is_unit(self.coords)

    def __eq__(self, o):
        if isinstance(o, (AlgElem, int)):
            c = self._other(o)
            return np.array_equal(self.coords, c)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.coords))

    def __bool__(self):
        return bool(np.any(self.coords))

    def __repr__(self):
        return self.algebra.format(self.coords)


def validate_algebra(A: FdAlgebra) -> ValidationReport:
    """Check commutativity, associativity, unit, nilpotence of zeta and
    locality.  Each failure comes with a witness."""
    F, C, k = A.field, A.C, A.k
    fails = []
    for i in range(k):
        for j in range(i + 1, k):
            if not np.array_equal(C[i, j], C[j, i]):
                fails.append(("commutative", (A.names[i], A.names[j])))
                return ValidationReport(fails)
    basis = np.eye(k, dtype=np.int64)
    if not np.array_equal(C[0], basis) or not np.array_equal(C[:, 0], basis):
        fails.append(("unit", A.names[0]))
        return ValidationReport(fails)
    # (b_i b_j) b_l == b_i (b_j b_l)
    left = A.mul(C[:, :, None, :], basis[None, None, :, :])
    right = A.mul(basis[:, None, None, :], C[None, :, :, :])
    bad = np.argwhere(np.any(left != right, axis=-1))
    if len(bad):
        i, j, l = bad[0]
        fails.append(("associative", (A.names[i], A.names[j], A.names[l])))
        return ValidationReport(fails)
    z = A.pow(A.zeta, k + 1)
    if np.any(z):
        fails.append(("zeta nilpotent", A.format(A.zeta)))
    # local: the F_q-points of the reduced quotient, {x : x^q - x in rad},
    # have dimension 1 + dim rad exactly when A/rad is a field.
    rad = A.nilradical
    M = F.sub(A.frobenius_matrix, np.eye(k, dtype=np.int64))
    # x with (Frob - 1)x in rad: solve over [M | rad^T]
    aug = np.concatenate([M, rad.T], axis=1) if rad.shape[0] else M
    ker = fl.kernel(F, aug)[:, :k]
    ker = fl.row_space(F, ker) if ker.shape[0] else ker
    factors = fl.rank(F, ker) - rad.shape[0] if ker.shape[0] else 0
    if factors != 1:
        base = np.vstack([A.one()[None, :], rad]) if rad.shape[0] else A.one()[None, :]
        witness = None
        for v in ker:
            if not fl.in_span(F, base, v):
                witness = A.format(v)
                break
        fails.append(("local", witness))
    return ValidationReport(fails)


class AlgebraHom:
    """F_q-algebra homomorphism source -> target, as a (target.k x source.k)
    matrix over F_q."""

    def __init__(self, source: FdAlgebra, target: FdAlgebra, matrix, check=True):
        self.source, self.target = source, target
        self.matrix = np.asarray(matrix, dtype=np.int64) % source.q
        if self.matrix.shape != (target.k, source.k):
            raise ShtukaError("homomorphism matrix has the wrong shape")
        if check:
            self.validate()

    def __call__(self, X):
        return apply_linear(self.source.field, self.matrix, X)

    def validate(self):
        S, T = self.source, self.target
        if not T.equal(self(S.one()), T.one()):
            raise InvalidAlgebra("homomorphism is not unital")
        basis = np.eye(S.k, dtype=np.int64)
        prod = S.mul(basis[:, None, :], basis[None, :, :])
        lhs = self(prod)
        img = self(basis)
        rhs = T.mul(img[:, None, :], img[None, :, :])
        bad = np.argwhere(np.any(lhs != rhs, axis=-1))
        if len(bad):
            i, j = bad[0]
            raise InvalidAlgebra("homomorphism is not multiplicative",
                                 witness=(S.names[i], S.names[j]))

    def compose(self, first: "AlgebraHom") -> "AlgebraHom":
        """self o first."""
        return AlgebraHom(first.source, self.target,
                          self.source.field.matmul(self.matrix, first.matrix),
                          check=False)

    @staticmethod
    def identity(A: FdAlgebra):
        return AlgebraHom(A, A, np.eye(A.k, dtype=np.int64), check=False)

    def carries_zeta(self):
        return self.target.equal(self(self.source.zeta), self.target.zeta)


# -- presets ------------------------------------------------------------------

def base_algebra(F: FqField) -> FdAlgebra:
    """F_q itself."""
    return FdAlgebra(F, np.ones((1, 1, 1), dtype=np.int64), names=["1"],
                     label=f"F_{F.q}")


def truncated_polynomial(F: FqField, n: int, var="u", zeta=None) -> FdAlgebra:
    """F_q[u]/(u^n) with basis 1, u, ..., u^(n-1).  `zeta` is a coordinate
    vector, a basis name, or None for zeta = 0."""
    C = np.zeros((n, n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if i + j < n:
                C[i, j, i + j] = 1
    names = ["1"] + [var if i == 1 else f"{var}^{i}" for i in range(1, n)]
    A = FdAlgebra(F, C, names, check=False, label=f"F_{F.q}[{var}]/({var}^{n})")
    A.zeta = _resolve_zeta(A, zeta)
    validate_or_raise(A)
    return A


def bivariate_truncated(F: FqField, a: int, b: int, vars=("u", "v"),
                        zeta=None) -> FdAlgebra:
    """F_q[u, v]/(u^a, v^b, uv)."""
    u, v = vars
    names = ["1"] + [u if i == 1 else f"{u}^{i}" for i in range(1, a)] \
        + [v if i == 1 else f"{v}^{i}" for i in range(1, b)]
    k = len(names)
    C = np.zeros((k, k, k), dtype=np.int64)

    def mono(idx):
        if idx == 0:
            return (0, 0)
        if idx < a:
            return (idx, 0)
        return (0, idx - a + 1)

    def index(du, dv):
        if du and dv:
            return None
        if du == 0 and dv == 0:
            return 0
        if du:
            return du if du < a else None
        return a - 1 + dv if dv < b else None

    for i in range(k):
        for j in range(k):
            (ui, vi), (uj, vj) = mono(i), mono(j)
            l = index(ui + uj, vi + vj)
            if l is not None:
                C[i, j, l] = 1
    A = FdAlgebra(F, C, names, check=False,
                  label=f"F_{F.q}[{u},{v}]/({u}^{a},{v}^{b},{u}{v})")
    A.zeta = _resolve_zeta(A, zeta)
    validate_or_raise(A)
    return A


def _resolve_zeta(A, zeta):
    if zeta is None:
        return A.zero()
    if isinstance(zeta, str):
        return A.element_by_name(zeta)
    return np.asarray(zeta, dtype=np.int64) % A.q


def validate_or_raise(A):
    report = validate_algebra(A)
    if not report.ok:
        axiom, witness = report.failures[0]
        cls = NotLocal if axiom == "local" else InvalidAlgebra
        raise cls(f"algebra axiom '{axiom}' fails", witness=witness)
    return A


def with_zeta(A: FdAlgebra, zeta) -> FdAlgebra:
    """Copy of A with a different designated nilpotent."""
    B = FdAlgebra(A.field, A.C, A.names, zeta=_resolve_zeta(A, zeta),
                  check=False, label=A.label)
    return validate_or_raise(B)


# -- polynomials over a field algebra (used to build extensions) -------------

def _ptrim(a):
    while a and not np.any(a[-1]):
        a.pop()
    return a


def _pmod(K, a, g, ginv_lead):
    a = [x.copy() for x in a]
    dg = len(g) - 1
    _ptrim(a)
    while len(a) - 1 >= dg:
        c = K.mul(a[-1], ginv_lead)
        s = len(a) - 1 - dg
        for i, gi in enumerate(g):
            a[s + i] = K.sub(a[s + i], K.mul(c, gi))
        a.pop()
        _ptrim(a)
    return a


def _pmul(K, a, b):
    if not a or not b:
        return []
    out = [K.zero() for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if not np.any(x):
            continue
        for j, y in enumerate(b):
            out[i + j] = K.add(out[i + j], K.mul(x, y))
    return _ptrim(out)


def _psub(K, a, b):
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else K.zero()
        y = b[i] if i < len(b) else K.zero()
        out.append(K.sub(x, y))
    return _ptrim(out)


def _pgcd(K, a, b):
    a, b = _ptrim([x.copy() for x in a]), _ptrim([x.copy() for x in b])
    while b:
        a, b = b, _pmod(K, a, b, K.invert(b[-1]))
    return a


def _ppowmod(K, base, n, g, ginv):
    result = [K.one()]
    base = _pmod(K, base, g, ginv)
    while n:
        if n & 1:
            result = _pmod(K, _pmul(K, result, base), g, ginv)
        base = _pmod(K, _pmul(K, base, base), g, ginv)
        n >>= 1
    return result


def _prime_factors(n):
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible_over(K: FdAlgebra, g) -> bool:
    """Rabin's test for a monic polynomial g over the finite field K."""
    m = len(g) - 1
    if m < 1:
        return False
    Q = K.q ** K.k
    ginv = K.one()
    y = [K.zero(), K.one()]

    def frob_iter(t):
        h = y
        for _ in range(t):
            h = _ppowmod(K, h, Q, g, ginv)
        return h

    if _psub(K, frob_iter(m), _pmod(K, y, g, ginv)):
        return False
    for r in _prime_factors(m):
        h = _psub(K, frob_iter(m // r), y)
        d = _pgcd(K, g, h)
        if len(d) - 1 > 0:
            return False
    return True


_TOWER_CACHE = {}


def extension_tower(K: FdAlgebra, m: int, seed: int = 0):
    """A degree-m field extension L = K[y]/(g) of the finite field K.

    Returns (L, hom K -> L).  The basis of L is b_i * y^j (i over K's basis,
    j < m), ordered with j outermost, so b_0 * y^0 is the unit.
    """
    key = (id(K), m, seed)
    if key in _TOWER_CACHE and _TOWER_CACHE[key][0] is K:
        return _TOWER_CACHE[key][1]
    if not K.is_field():
        raise ShtukaError("extensions are built over fields only")
    F, kk = K.field, K.k
    if m == 1:
        result = (K, AlgebraHom.identity(K))
        _TOWER_CACHE[key] = (K, result)
        return result
    rng = np.random.default_rng(seed)
    while True:
        low = [rng.integers(0, F.q, kk) for _ in range(m)]
        if not np.any(low[0]):
            continue
        g = low + [K.one()]
        if is_irreducible_over(K, g):
            break
    n = kk * m
    C = np.zeros((n, n, n), dtype=np.int64)
    # product of (b_a y^i)(b_c y^j) = (b_a b_c) y^(i+j), reduced by g
    ypow = []  # y^t mod g for t < 2m-1, as lists of K coeffs of length m
    for t in range(2 * m - 1):
        mono = [K.zero() for _ in range(t)] + [K.one()]
        red = _pmod(K, mono, g, K.one())
        red = red + [K.zero() for _ in range(m - len(red))]
        ypow.append(red)
    eye = np.eye(kk, dtype=np.int64)
    for i in range(m):
        for a in range(kk):
            for j in range(m):
                for c in range(kk):
                    bac = K.mul(eye[a], eye[c])
                    vec = np.zeros(n, dtype=np.int64)
                    for t, coeff in enumerate(ypow[i + j]):
                        vec[t * kk:(t + 1) * kk] = K.mul(bac, coeff)
                    C[i * kk + a, j * kk + c] = vec
    names = []
    for j in range(m):
        for a in range(kk):
            bn = K.names[a]
            yn = "" if j == 0 else ("y" if j == 1 else f"y^{j}")
            if not yn:
                names.append(bn)
            elif bn == "1":
                names.append(yn)
            else:
                names.append(f"{bn}*{yn}")
    L = FdAlgebra(F, C, names, check=False,
                  label=f"F_{F.q}^({kk * m})")
    incl = np.zeros((n, kk), dtype=np.int64)
    incl[:kk, :kk] = eye
    hom = AlgebraHom(K, L, incl, check=False)
    L.zeta = hom(K.zeta)
    result = (L, hom)
    _TOWER_CACHE[key] = (K, result)
    return result


def finite_field_algebra(F: FqField, m: int) -> FdAlgebra:
    """F_{q^m} as an F_q-algebra."""
    L, _ = extension_tower(base_algebra(F), m)
    if m > 1:
        L.label = f"F_{F.q}^{m}"
    return L


def tensor(A: FdAlgebra, B: FdAlgebra):
    """A (x)_{F_q} B with the two inclusion homomorphisms."""
    if A.field != B.field:
        raise AlgebraMismatch("tensor factors over different fields")
    F = A.field
    ka, kb = A.k, B.k
    n = ka * kb
    # basis a_i (x) b_j at index i * kb + j
    C = np.zeros((n, n, n), dtype=np.int64)
    for i in range(ka):
        for j in range(kb):
            for s in range(ka):
                for t in range(kb):
                    ca, cb = A.C[i, s], B.C[j, t]
                    C[i * kb + j, s * kb + t] = F.mul(ca[:, None], cb[None, :]).reshape(n)
    names = []
    for i in range(ka):
        for j in range(kb):
            an, bn = A.names[i], B.names[j]
            names.append(an if bn == "1" else (bn if an == "1" else f"{an}*{bn}"))
    T = FdAlgebra(F, C, names, check=False, label=f"{A!r} (x) {B!r}")
    ia = np.zeros((n, ka), dtype=np.int64)
    ib = np.zeros((n, kb), dtype=np.int64)
    for i in range(ka):
        ia[i * kb, i] = 1
    for j in range(kb):
        ib[j, j] = 1
    ha = AlgebraHom(A, T, ia, check=False)
    hb = AlgebraHom(B, T, ib, check=False)
    T.zeta = F.add(ha(A.zeta), hb(B.zeta))
    return T, ha, hb


def quotient(A: FdAlgebra, ideal_rows, label=None):
    """A / I for an ideal I given by F_q-spanning rows.

    Returns (Q, projection hom, section matrix).  The section sends the
    Q-basis vector s to the A-basis vector it came from (not multiplicative).
    """
    F, k = A.field, A.k
    I = np.asarray(ideal_rows, dtype=np.int64).reshape(-1, k)
    # close under multiplication by the basis, so any generating set works
    basis = np.eye(k, dtype=np.int64)
    I = fl.row_space(F, np.vstack([I, A.mul(I[:, None, :], basis[None, :, :]).reshape(-1, k)])) \
        if I.shape[0] else I
    if I.shape[0] and fl.in_span(F, I, A.one()):
        raise ShtukaError("ideal is the whole algebra")
    # keep the unit among the complement indices: eliminate column 0 last
    order = list(range(1, k)) + [0]
    if I.shape[0]:
        R, piv = fl.rref(F, I[:, order])
        piv_cols = [order[c] for c in piv]
        R = R[: len(piv)][:, np.argsort(order)]
    else:
        R, piv_cols = I, []
    comp = [i for i in range(k) if i not in set(piv_cols)]
    m = len(comp)

    def reduce(v):
        v = np.array(v, dtype=np.int64)
        for row, pc in zip(R, piv_cols):
            if v[pc]:
                v = F.sub(v, F.mul(int(v[pc]), row))
        return v[comp]

    proj = np.stack([reduce(basis[j]) for j in range(k)], axis=1)
    C = np.zeros((m, m, m), dtype=np.int64)
    for s, i in enumerate(comp):
        for t, j in enumerate(comp):
            C[s, t] = reduce(A.C[i, j])
    Q = FdAlgebra(F, C, [A.names[i] for i in comp], check=False,
                  label=label or f"{A!r}/I")
    hom = AlgebraHom(A, Q, proj, check=False)
    Q.zeta = hom(A.zeta)
    section = np.zeros((k, m), dtype=np.int64)
    for s, i in enumerate(comp):
        section[i, s] = 1
    return Q, hom, section


class ResidueField:
    """The residue field A/rad(A) of a local algebra."""

    def __init__(self, algebra, projection, section):
        self.algebra = algebra
        self.projection = projection
        self.section = section

    @property
    def degree(self):
        return self.algebra.k

    @property
    def order(self):
        return self.algebra.q ** self.algebra.k

    def fq_field(self):
        F = self.algebra.field
        return FqField(F.p, F.e * self.degree)


def residue_field(A: FdAlgebra) -> ResidueField:
    Q, hom, sec = quotient(A, A.nilradical, label=f"res({A!r})")
    return ResidueField(Q, hom, sec)


# -- linear algebra over R ---------------------------------------------------

def flatten_matrix(A: FdAlgebra, M):
    """F_q-matrix of the R-linear map R^n -> R^m given by M (shape m, n, k)."""
    M = np.asarray(M, dtype=np.int64)
    m, n = M.shape[:2]
    out = np.zeros((m * A.k, n * A.k), dtype=np.int64)
    for i in range(m):
        for j in range(n):
            if np.any(M[i, j]):
                out[i * A.k:(i + 1) * A.k, j * A.k:(j + 1) * A.k] = A.mulmat(M[i, j])
    return out


def matmul(A: FdAlgebra, X, Y):
    """Product of matrices over R (shapes (m, n, k) and (n, p, k))."""
    X = np.asarray(X, dtype=np.int64)
    Y = np.asarray(Y, dtype=np.int64)
    prod = A.mul(X[:, :, None, :], Y[None, :, :, :])
    if X.shape[1] == 0:
        return np.zeros((X.shape[0], Y.shape[1], A.k), dtype=np.int64)
    return A.sum(prod, axis=1)


def matvec(A: FdAlgebra, X, v):
    return matmul(A, X, np.asarray(v)[:, None, :])[:, 0, :]


def identity_matrix(A: FdAlgebra, r: int):
    M = np.zeros((r, r, A.k), dtype=np.int64)
    for i in range(r):
        M[i, i, 0] = 1
    return M


def det(A: FdAlgebra, M):
    """Determinant over R by expansion over column subsets (no division)."""
    M = np.asarray(M, dtype=np.int64)
    r = M.shape[0]
    if M.shape[1] != r:
        raise ShtukaError("determinant of a non-square matrix")
    D = {0: A.one()}
    for row in range(r):
        nxt = {}
        for S, val in D.items():
            for c in range(r):
                if S >> c & 1:
                    continue
                # sign: number of used columns greater than c
                sign = bin(S >> (c + 1)).count("1") % 2
                term = A.mul(val, M[row, c])
                if sign:
                    term = A.neg(term)
                T = S | (1 << c)
                nxt[T] = A.add(nxt[T], term) if T in nxt else term
        D = nxt
    return D[(1 << r) - 1] if r else A.one()


def matrix_inverse(A: FdAlgebra, M):
    r = M.shape[0]
    flat = flatten_matrix(A, M)
    rhs = flatten_matrix(A, identity_matrix(A, r))
    try:
        X = fl.solve(A.field, flat, rhs[:, ::A.k])
    except NoSolution as exc:
        raise NotAUnit("matrix is not invertible over R") from exc
    # columns of X are the solutions for e_j (x) 1
    inv = np.zeros((r, r, A.k), dtype=np.int64)
    for j in range(r):
        inv[:, j, :] = X[:, j].reshape(r, A.k)
    if not np.array_equal(matmul(A, M, inv), identity_matrix(A, r)):
        raise NotAUnit("matrix is not invertible over R")
    return inv


def solve_linear(A: FdAlgebra, M, b):
    """Solve M x = b over R.  Returns (x, kernel rows over F_q of the
    flattened system).  Raises NoSolution on inconsistency."""
    M = np.asarray(M, dtype=np.int64)
    flat = flatten_matrix(A, M)
    rhs = np.asarray(b, dtype=np.int64).reshape(-1)
    x = fl.solve(A.field, flat, rhs)
    return x.reshape(M.shape[1], A.k), fl.kernel(A.field, flat)


def span_over_R(A: FdAlgebra, vectors):
    """F_q-basis of the R-submodule generated by vectors (shape (s, n, k))."""
    V = np.asarray(vectors, dtype=np.int64)
    if V.shape[0] == 0:
        return np.zeros((0, V.shape[1] * A.k), dtype=np.int64)
    basis = np.eye(A.k, dtype=np.int64)
    prods = A.mul(basis[:, None, None, :], V[None, :, :, :])
    return fl.row_space(A.field, prods.reshape(-1, V.shape[1] * A.k))


def minimal_generators(A: FdAlgebra, space, n):
    """A minimal R-generating set of the R-submodule of R^n whose F_q-basis
    is `space` (rows of length n*k).  Returns (generators (s, n, k), free)."""
    F = A.field
    W = fl.row_space(F, space) if len(space) else np.zeros((0, n * A.k), dtype=np.int64)
    if W.shape[0] == 0:
        return np.zeros((0, n, A.k), dtype=np.int64), True
    rad = A.nilradical
    if rad.shape[0]:
        mW = A.mul(rad[:, None, None, :], W.reshape(-1, n, A.k)[None, :, :, :])
        mW = fl.row_space(F, mW.reshape(-1, n * A.k))
    else:
        mW = np.zeros((0, n * A.k), dtype=np.int64)
    gens = []
    cur = mW
    for w in W:
        if fl.in_span(F, cur, w) if cur.shape[0] else not np.any(w):
            continue
        gens.append(w.reshape(n, A.k))
        add = span_over_R(A, w.reshape(1, n, A.k))
        cur = fl.row_space(F, np.vstack([cur, add])) if cur.shape[0] else add
    G = np.array(gens, dtype=np.int64).reshape(-1, n, A.k)
    free = W.shape[0] == len(gens) * A.k
    return G, free
