"""Finite fields F_q and dense linear algebra over them.

Elements of F_q (q = p^e) are encoded as integers 0..q-1: the base-p digits
of the integer are the coefficients of the residue class of a polynomial in
the generator w, lowest degree first.  Arithmetic goes through lookup tables
when e > 1 and plain modular arithmetic when e = 1.  Matrices and vectors are
numpy int64 arrays of such encodings.
"""
from __future__ import annotations

from functools import lru_cache
import itertools

import numpy as np

from .errors import NoSolution, NotSquare, ShtukaError

# Size cap for the table-driven arithmetic (q x q tables).
MAX_Q = 1024

# Built-in irreducible moduli, coefficient lists lowest degree first.
BUILTIN_MODULI = {
    (2, 2): (1, 1, 1),        # w^2 + w + 1
    (2, 3): (1, 1, 0, 1),     # w^3 + w + 1
    (3, 2): (1, 0, 1),        # w^2 + 1
    (2, 4): (1, 1, 0, 0, 1),  # w^4 + w + 1
}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _poly_mod_p(a, b, p):
    """Remainder of a by monic-up-to-unit b over F_p (lists, low degree first)."""
    a = list(a)
    inv_lead = pow(b[-1], p - 2, p)
    db = len(b) - 1
    while len(a) - 1 >= db and any(a):
        while a and a[-1] == 0:
            a.pop()
        if len(a) - 1 < db:
            break
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - db
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        a.pop()
    while a and a[-1] == 0:
        a.pop()
    return a


def is_irreducible_fp(poly, p) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    deg = len(poly) - 1
    if deg <= 0 or poly[-1] % p == 0:
        return False
    for d in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not _poly_mod_p(poly, list(low) + [1], p):
                return False
    return True


def first_irreducible_fp(p, e):
    for low in itertools.product(range(p), repeat=e):
        cand = tuple(reversed(low))
        poly = cand + (1,)
        if cand[0] == 0:
            continue
        if is_irreducible_fp(poly, p):
            return poly
    raise ShtukaError(f"no irreducible polynomial of degree {e} over F_{p}")


class FqField:
    """The finite field F_q with q = p^e, given by an irreducible modulus."""

    def __init__(self, p: int, e: int = 1, modulus=None):
        if not is_prime(p):
            raise ShtukaError(f"{p} is not prime")
        if e < 1:
            raise ShtukaError("degree must be positive")
        q = p ** e
        if q > MAX_Q:
            raise ShtukaError(f"q = {q} exceeds the supported bound {MAX_Q}")
        if modulus is None:
            modulus = BUILTIN_MODULI.get((p, e)) if e > 1 else (0, 1)
            if modulus is None:
                modulus = first_irreducible_fp(p, e)
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != e + 1 or modulus[-1] != 1:
            raise ShtukaError("modulus must be monic of degree e")
        if e > 1 and not is_irreducible_fp(modulus, p):
            raise ShtukaError(f"modulus {modulus} is reducible over F_{p}",
                              witness=modulus)
        self.p, self.e, self.q = p, e, q
        self.modulus = modulus
        self._build_tables()

    def __repr__(self):
        return f"FqField(q={self.q})"

    def __eq__(self, other):
        return (isinstance(other, FqField) and self.q == other.q
                and self.modulus == other.modulus)

    def __hash__(self):
        return hash((self.q, self.modulus))

    # -- tables -----------------------------------------------------------
    def digits(self, a: int):
        return [(a // self.p ** t) % self.p for t in range(self.e)]

    def from_digits(self, ds) -> int:
        return sum((int(d) % self.p) * self.p ** t for t, d in enumerate(ds))

    def _build_tables(self):
        p, e, q = self.p, self.e, self.q
        if e == 1:
            self.INV = np.array([0] + [pow(a, p - 2, p) for a in range(1, p)],
                                dtype=np.int64)
            self.NEG = (-np.arange(p)) % p
            return
        digs = np.array([self.digits(a) for a in range(q)], dtype=np.int64)
        add = np.zeros((q, q), dtype=np.int64)
        sub = np.zeros((q, q), dtype=np.int64)
        weights = p ** np.arange(e)
        for a in range(q):
            add[a] = ((digs[a] + digs) % p) @ weights
            sub[a] = ((digs[a] - digs) % p) @ weights
        # multiply by w: shift digits and reduce with the modulus
        mulw = np.zeros(q, dtype=np.int64)
        for a in range(q):
            d = self.digits(a)
            top = d[-1]
            nd = [0] + d[:-1]
            nd = [(nd[t] - top * self.modulus[t]) % p for t in range(e)]
            mulw[a] = self.from_digits(nd)
        mul = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            # a * b via Horner in the digits of b
            acc = np.zeros(q, dtype=np.int64)  # acc[b] accumulates a*b
            da = self.digits(a)
            for t in reversed(range(e)):
                acc = mulw[acc]
                # add da[t] * b
                for _ in range(da[t]):
                    acc = add[acc, np.arange(q)]
            mul[a] = acc
        self.ADD, self.SUB, self.MUL = add, sub, mul
        self.NEG = sub[0]
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv[a] = int(np.nonzero(mul[a] == 1)[0][0])
        self.INV = inv

    # -- elementwise ------------------------------------------------------
    def add(self, a, b):
        if self.e == 1:
            return (np.asarray(a) + b) % self.p
        return self.ADD[a, b]

    def sub(self, a, b):
        if self.e == 1:
            return (np.asarray(a) - b) % self.p
        return self.SUB[a, b]

    def neg(self, a):
        return self.NEG[a]

    def mul(self, a, b):
        if self.e == 1:
            return (np.asarray(a, dtype=np.int64) * b) % self.p
        return self.MUL[a, b]

    def inv(self, a):
        if np.any(np.asarray(a) == 0):
            raise ZeroDivisionError("inverse of zero in F_q")
        return self.INV[a]

    def pow(self, a: int, n: int) -> int:
        if n < 0:
            a, n = int(self.inv(a)), -n
        r = 1
        a = int(a)
        while n:
            if n & 1:
                r = int(self.mul(r, a))
            a = int(self.mul(a, a))
            n >>= 1
        return r

    def sum(self, arr, axis=0):
        """Field sum along one axis."""
        arr = np.asarray(arr, dtype=np.int64)
        if self.e == 1:
            return arr.sum(axis=axis) % self.p
        if self.p == 2:
            return np.bitwise_xor.reduce(arr, axis=axis)
        arr = np.moveaxis(arr, axis, -1)
        weights = self.p ** np.arange(self.e)
        digs = (arr[..., None] // weights) % self.p
        return (digs.sum(axis=-2) % self.p) @ weights

    def elements(self):
        return range(self.q)

    def element(self, value) -> "FqElem":
        return FqElem(self, int(value))

    def generator(self) -> int:
        """The class of w (or 1 when e = 1)."""
        return self.p if self.e > 1 else 1

    def primitive_element(self) -> int:
        for a in range(1, self.q):
            x, order = a, 1
            while x != 1:
                x = int(self.mul(x, a))
                order += 1
            if order == self.q - 1:
                return a
        raise ShtukaError("no primitive element")  # pragma: no cover

    def format(self, a: int) -> str:
        if self.e == 1:
            return str(int(a))
        terms = []
        for t, d in enumerate(self.digits(int(a))):
            if d:
                mono = "" if t == 0 else ("w" if t == 1 else f"w^{t}")
                coef = "" if (d == 1 and t > 0) else str(d)
                terms.append(coef + ("*" if coef and mono else "") + mono)
        return "+".join(terms) if terms else "0"

    # -- matrices ---------------------------------------------------------
    def matmul(self, A, B):
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if self.e == 1:
            return (A @ B) % self.p
        if A.ndim == 1:
            return self.matmul(A[None, :], B)[0]
        if B.ndim == 1:
            return self.matmul(A, B[:, None])[:, 0]
        if A.shape[1] == 0:
            return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        prod = self.MUL[A[:, :, None], B[None, :, :]]
        return self.sum(prod, axis=1)

    def scale(self, c, A):
        return self.mul(c, np.asarray(A, dtype=np.int64))

    def zeros(self, *shape):
        return np.zeros(shape, dtype=np.int64)

    def identity(self, n):
        return np.eye(n, dtype=np.int64)


class FqElem:
    """A user-facing element of F_q with operator overloads."""

    __slots__ = ("field", "value")

    def __init__(self, field: FqField, value: int):
        self.field = field
        self.value = int(value) % field.q if field.e == 1 else int(value)
        if not 0 <= self.value < field.q:
            raise ShtukaError(f"{value} is not an element of F_{field.q}")

    def _coerce(self, other):
        if isinstance(other, FqElem):
            if other.field != self.field:
                raise ShtukaError("elements of different fields")
            return other.value
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def __add__(self, other):
        b = self._coerce(other)
        return FqElem(self.field, int(self.field.add(self.value, b)))

    __radd__ = __add__

    def __sub__(self, other):
        b = self._coerce(other)
        return FqElem(self.field, int(self.field.sub(self.value, b)))

    def __rsub__(self, other):
        b = self._coerce(other)
        return FqElem(self.field, int(self.field.sub(b, self.value)))

    def __mul__(self, other):
        b = self._coerce(other)
        return FqElem(self.field, int(self.field.mul(self.value, b)))

    __rmul__ = __mul__

    def __neg__(self):
        return FqElem(self.field, int(self.field.neg(self.value)))

    def inverse(self):
        return FqElem(self.field, int(self.field.inv(self.value)))

    def __truediv__(self, other):
        b = self._coerce(other)
        return self * FqElem(self.field, int(self.field.inv(b)))

    def __pow__(self, n):
        return FqElem(self.field, self.field.pow(self.value, n))

    def __eq__(self, other):
        if isinstance(other, FqElem):
            return self.field == other.field and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.field.q
        return NotImplemented

    def __hash__(self):
        return hash((self.field.q, self.value))

    def __repr__(self):
        return self.field.format(self.value)


@lru_cache(maxsize=None)
def field_for(q: int) -> FqField:
    """The field with q elements using the built-in modulus."""
    for p in range(2, q + 1):
        if q % p == 0:
            e = 0
            n = q
            while n % p == 0:
                n //= p
                e += 1
            if n != 1 or not is_prime(p):
                raise ShtukaError(f"{q} is not a prime power")
            return FqField(p, e)
    raise ShtukaError(f"{q} is not a prime power")


# -- Gaussian elimination -------------------------------------------------

def rref(F: FqField, A):
    """Reduced row echelon form. Returns (R, pivot_columns)."""
    A = np.array(A, dtype=np.int64, copy=True)
    if A.ndim != 2:
        raise ShtukaError("rref needs a matrix")
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if len(nz) == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = F.mul(int(F.INV[A[r, c]]), A[r])
        f = A[:, c].copy()
        f[r] = 0
        hit = np.nonzero(f)[0]
        if len(hit):
            A[hit] = F.sub(A[hit], F.mul(f[hit, None], A[r][None, :]))
        pivots.append(c)
        r += 1
    return A, pivots


def rank(F: FqField, A) -> int:
    A = np.asarray(A)
    if A.size == 0:
        return 0
    return len(rref(F, A)[1])


def kernel(F: FqField, A):
    """Basis of the right kernel {x : A x = 0}, as rows of a matrix."""
    A = np.asarray(A, dtype=np.int64)
    rows, cols = A.shape
    if rows == 0:
        return np.eye(cols, dtype=np.int64)
    R, piv = rref(F, A)
    free = [c for c in range(cols) if c not in set(piv)]
    K = np.zeros((len(free), cols), dtype=np.int64)
    for i, fc in enumerate(free):
        K[i, fc] = 1
        for row, pc in enumerate(piv):
            K[i, pc] = F.neg(R[row, fc])
    return K


def solve(F: FqField, A, b):
    """One solution x of A x = b (b may be a matrix of right-hand sides).

    Raises NoSolution when the system is inconsistent; the witness is the
    index of the first inconsistent right-hand side column.
    """
    A = np.asarray(A, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    vec = b.ndim == 1
    B = b[:, None] if vec else b
    rows, cols = A.shape
    aug = np.concatenate([A, B], axis=1)
    R, piv = rref(F, aug)
    bad = [c - cols for c in piv if c >= cols]
    if bad:
        raise NoSolution("linear system is inconsistent", witness=bad[0])
    X = np.zeros((cols, B.shape[1]), dtype=np.int64)
    for row, pc in enumerate(piv):
        X[pc] = R[row, cols:]
    return X[:, 0] if vec else X


def inverse(F: FqField, A):
    A = np.asarray(A, dtype=np.int64)
    n, m = A.shape
    if n != m:
        raise NotSquare("matrix is not square")
    try:
        X = solve(F, A, np.eye(n, dtype=np.int64))
    except NoSolution as exc:
        raise NoSolution("matrix is singular") from exc
    if rank(F, A) != n:
        raise NoSolution("matrix is singular")
    return X


def row_space(F: FqField, A):
    """Basis (rows, reduced echelon) of the row space."""
    A = np.asarray(A, dtype=np.int64)
    if A.size == 0:
        return np.zeros((0, A.shape[1] if A.ndim == 2 else 0), dtype=np.int64)
    R, piv = rref(F, A)
    return R[: len(piv)]


def in_span(F: FqField, basis_rows, v) -> bool:
    basis_rows = np.asarray(basis_rows, dtype=np.int64)
    if basis_rows.shape[0] == 0:
        return not np.any(v)
    return rank(F, np.vstack([basis_rows, v])) == rank(F, basis_rows)


def complement_indices(F: FqField, rows, n):
    """Standard basis indices completing the span of `rows` to F_q^n."""
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, n)
    if rows.shape[0] == 0:
        return list(range(n))
    _, piv = rref(F, rows)
    ps = set(piv)
    return [i for i in range(n) if i not in ps]


def same_span(F: FqField, A, B) -> bool:
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    ra, rb = rank(F, A), rank(F, B)
    if ra != rb:
        return False
    if ra == 0:
        return True
    return rank(F, np.vstack([A, B])) == ra
