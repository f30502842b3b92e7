"""Finite and local shtukas.

Matrix convention: column j of the matrix T holds the coordinates of
F(sigma^* e_j).  On coordinate vectors the semilinear Frobenius is
v -> T v^(q), and a change of basis by an invertible U (new basis = old
basis times U) replaces T by U^{-1} T U^(q).
"""
from __future__ import annotations

import numpy as np

from . import algebra as alg
from . import field as fl
from .algebra import FdAlgebra
from .errors import (AlgebraMismatch, BaseNotField, InsufficientPrecision,
                     NoSolution, NotAnnihilated, NotAUnit, NotDivisible,
                     NotSquare, PrecisionExhausted, ShtukaError)
from .zseries import (ZMatrix, ZSeries, adjugate, det, divide_by_z_minus_zeta,
                      is_unit_series, solve_series)

DEFAULT_EMAX = 16


def _p_power_at_least(p, n):
    P = 1
    while P < n:
        P *= p
    return P


class FiniteShtuka:
    """A locally free R-module of rank r with an R-linear F: sigma^*M -> M."""

    def __init__(self, algebra: FdAlgebra, matrix):
        self.algebra = algebra
        T = np.asarray(matrix, dtype=np.int64) % algebra.q
        if T.ndim != 3 or T.shape[0] != T.shape[1] or T.shape[2] != algebra.k:
            raise NotSquare("shtuka matrix must have shape (r, r, k)")
        self.matrix = T

    @property
    def rank(self):
        return self.matrix.shape[0]

    def __repr__(self):
        A = self.algebra
        rows = [[A.format(self.matrix[i, j]) for j in range(self.rank)]
                for i in range(self.rank)]
        return f"FiniteShtuka({rows} over {A!r})"

    def __eq__(self, other):
        return (isinstance(other, FiniteShtuka)
                and self.algebra.same_as(other.algebra)
                and np.array_equal(self.matrix, other.matrix))

    def twisted(self, n=1):
        """T^(q^n): entrywise Frobenius."""
        return self.algebra.frob(self.matrix, n)

    def apply(self, v):
        """F(sigma^* v) for a coordinate vector v (shape (r, k))."""
        A = self.algebra
        return alg.matvec(A, self.matrix, A.frob(v))

    def conjugate(self, U):
        """The same shtuka in the basis given by the columns of U."""
        A = self.algebra
        Uinv = alg.matrix_inverse(A, U)
        return FiniteShtuka(A, alg.matmul(A, alg.matmul(A, Uinv, self.matrix), A.frob(U)))

    def base_change(self, hom):
        if not hom.source.same_as(self.algebra):
            raise AlgebraMismatch("base change along a map from another algebra")
        return FiniteShtuka(hom.target, hom(self.matrix))


def iterate_frobenius(sh, n: int):
    """Matrix of F^n = T T^(q) ... T^(q^(n-1)) (finite or local shtuka)."""
    if isinstance(sh, LocalShtuka):
        A = sh.algebra
        out = ZMatrix.identity(A, sh.rank, sh.precision)
        for i in range(n):
            out = out @ sh.matrix.frobenius(i)
        return out
    A = sh.algebra
    out = alg.identity_matrix(A, sh.rank)
    for i in range(n):
        out = alg.matmul(A, out, sh.twisted(i))
    return out


class CoLieData:
    """Cokernel (omega) and kernel (n) of the R-linear map F: sigma^*M -> M.

    omega is presented by the standard coordinates `omega_index` of R^r
    (flattened over F_q) that complement the image; `action[l]` is the
    F_q-matrix of multiplication by the basis vector b_l of R on omega.
    """

    def __init__(self, algebra, omega_index, action, kernel_rows, image_rows, rank):
        self.algebra = algebra
        self.omega_index = omega_index
        self.action = action
        self.kernel_rows = kernel_rows
        self.image_rows = image_rows
        self.rank = rank

    @property
    def omega_dim(self):
        """Dimension of omega over F_q."""
        return len(self.omega_index)

    @property
    def kernel_dim(self):
        return self.kernel_rows.shape[0]

    def omega_vectors(self):
        """F_q coordinates (in R^r) of the omega basis representatives."""
        n = self.rank * self.algebra.k
        out = np.zeros((len(self.omega_index), n), dtype=np.int64)
        for s, i in enumerate(self.omega_index):
            out[s, i] = 1
        return out

    def __repr__(self):
        return f"CoLieData(dim omega = {self.omega_dim}, dim n = {self.kernel_dim})"


def colie(sh: "FiniteShtuka") -> CoLieData:
    """omega = coker(F) and n = ker(F) for the R-linear map v -> T v."""
    if isinstance(sh, LocalShtuka):
        raise ShtukaError("use a truncation for local shtukas")
    A, F = sh.algebra, sh.algebra.field
    flat = alg.flatten_matrix(A, sh.matrix)
    n = flat.shape[0]
    image = fl.row_space(F, flat.T)
    comp = fl.complement_indices(F, image, n)
    # reduce a vector modulo the image and read the complement coordinates
    R, piv = (fl.rref(F, image) if image.shape[0] else (image, []))

    def reduce(v):
        v = np.array(v, dtype=np.int64)
        for row, pc in zip(R, piv):
            if v[pc]:
                v = F.sub(v, F.mul(int(v[pc]), row))
        return v[comp]

    action = []
    for l in range(A.k):
        mult = alg.flatten_matrix(A, _scalar_matrix(A, sh.rank, A.basis_vector(l)))
        cols = [reduce(mult[:, c]) for c in comp]
        action.append(np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=np.int64))
    kern = fl.kernel(F, flat)
    return CoLieData(A, comp, action, kern, image, sh.rank)


def _scalar_matrix(A, r, c):
    M = np.zeros((r, r, A.k), dtype=np.int64)
    for i in range(r):
        M[i, i] = c
    return M


class Decomposition:
    """M = M_et (+) M_nil over a perfect field, with the splitting basis."""

    def __init__(self, etale, nilpotent, splitting, et_basis, nil_basis):
        self.etale = etale
        self.nilpotent = nilpotent
        self.splitting = splitting
        self.et_basis = et_basis
        self.nil_basis = nil_basis

    def __repr__(self):
        return (f"Decomposition(rank_et={self.etale.rank}, "
                f"rank_nil={self.nilpotent.rank})")


def _column_space_basis(A, cols_matrix):
    """R-basis (over a field R) of the span of the columns of an (r, c, k)
    matrix, returned as an (r, s, k) matrix."""
    r, c, k = cols_matrix.shape
    vecs = np.transpose(cols_matrix, (1, 0, 2))  # (c, r, k)
    space = alg.span_over_R(A, vecs)
    gens, _ = alg.minimal_generators(A, space, r)
    return np.transpose(gens, (1, 0, 2)) if len(gens) else np.zeros((r, 0, k), dtype=np.int64)


def _restrict(A, T, B):
    """Matrix of F on the F-stable submodule with basis columns B: solve
    B X = T B^(q)."""
    r, s, k = B.shape
    if s == 0:
        return np.zeros((0, 0, k), dtype=np.int64)
    target = alg.matmul(A, T, A.frob(B))
    flat = alg.flatten_matrix(A, B)
    X = np.zeros((s, s, k), dtype=np.int64)
    for j in range(s):
        X[:, j] = fl.solve(A.field, flat, target[:, j].reshape(-1)).reshape(s, k)
    return X


def decompose_etale_nilpotent(sh: FiniteShtuka) -> Decomposition:
    """Split a finite shtuka over a finite field into etale and nilpotent
    parts: M_et = im F^r and M_nil = ker F^r (semilinear powers)."""
    A = sh.algebra
    if not A.is_field():
        raise BaseNotField("decomposition needs a field as base", witness=A.nilradical)
    r = sh.rank
    P = iterate_frobenius(sh, r)
    B_et = _column_space_basis(A, P)
    # v with P v^(q^r) = 0: kernel of P, then undo the q^r power
    flat = alg.flatten_matrix(A, P)
    ker = fl.kernel(A.field, flat)
    space = alg.span_over_R(A, ker.reshape(-1, r, A.k)) if ker.shape[0] else ker
    gens, _ = alg.minimal_generators(A, space, r) if ker.shape[0] else (np.zeros((0, r, A.k), dtype=np.int64), True)
    f = A.k  # R = F_{q^f}, so x^(q^(-r)) = x^(q^(f*r - r))
    back = (-r) % f
    B_nil = np.transpose(A.frob(gens, back), (1, 0, 2)) if len(gens) else np.zeros((r, 0, A.k), dtype=np.int64)
    U = np.concatenate([B_et, B_nil], axis=1)
    if U.shape[1] != r:
        raise ShtukaError("etale and nilpotent parts do not span")  # pragma: no cover
    T_et = _restrict(A, sh.matrix, B_et)
    T_nil = _restrict(A, sh.matrix, B_nil)
    return Decomposition(FiniteShtuka(A, T_et), FiniteShtuka(A, T_nil), U, B_et, B_nil)


class NilpotenceReport:
    def __init__(self, is_etale, is_nilpotent, bound, exponent, topologically_nilpotent=None):
        self.is_etale = is_etale
        self.is_nilpotent = is_nilpotent
        self.bound = bound
        self.exponent = exponent
        self.topologically_nilpotent = topologically_nilpotent

    def as_dict(self):
        d = {"etale": self.is_etale, "nilpotent": self.is_nilpotent,
             "bound": self.bound, "exponent": self.exponent}
        if self.topologically_nilpotent is not None:
            d["topologically_nilpotent"] = self.topologically_nilpotent
        return d

    def __repr__(self):
        return f"NilpotenceReport({self.as_dict()})"


def nilpotence_bound(A: FdAlgebra, r: int):
    """r (n + 1), where q^n-th powers of nilpotent elements vanish."""
    nu = A.nilpotency_index
    n = 0
    while A.q ** n < nu:
        n += 1
    return r * (n + 1), n


def nilpotence_checks(sh) -> NilpotenceReport:
    if isinstance(sh, LocalShtuka):
        level1 = truncate(sh, 1).as_finite()
        rep = nilpotence_checks(level1)
        rep.topologically_nilpotent = rep.is_nilpotent
        return rep
    A = sh.algebra
    r = sh.rank
    etale = A.is_unit(alg.det(A, sh.matrix))
    bound, _ = nilpotence_bound(A, r)
    exponent = None
    P = alg.identity_matrix(A, r)
    for m in range(1, bound + 1):
        P = alg.matmul(A, P, sh.twisted(m - 1))
        if not np.any(P):
            exponent = m
            break
    return NilpotenceReport(etale, exponent is not None, bound, exponent)


def topologically_nilpotent_by_series(sh: "LocalShtuka"):
    """Least n <= bound with F^n(M) inside zM, computed on the series matrix."""
    A = sh.algebra
    bound, _ = nilpotence_bound(A, sh.rank)
    P = ZMatrix.identity(A, sh.rank, 1)
    base = sh.matrix.truncate(1)
    for m in range(1, bound + 1):
        P = P @ base.frobenius(m - 1)
        if P.is_zero():
            return m
    return None


# -- local shtukas -------------------------------------------------------------

class LocalShtuka:
    """Free R[[z]]-module of rank r with F: sigma^*M[1/(z-zeta)] -> M[1/(z-zeta)].

    The structure map is (z - zeta)^twist times `matrix`, a matrix over
    R[[z]] known modulo z^precision.  Construction checks that det(matrix)
    is invertible in R((z)), i.e. its reduction modulo the nilradical has
    some nonzero coefficient of index <= e_max.
    """

    def __init__(self, algebra: FdAlgebra, matrix: ZMatrix, twist: int = 0,
                 e_max=None, check=True):
        if not algebra.same_as(matrix.algebra):
            raise AlgebraMismatch("matrix over a different algebra")
        if matrix.shape[0] != matrix.shape[1]:
            raise NotSquare("shtuka matrix must be square")
        self.algebra = algebra
        self.matrix = matrix
        self.twist = int(twist)
        self.e_max = DEFAULT_EMAX if e_max is None else e_max
        self._det_order = None
        if check:
            d = det(matrix)
            order = d.residue_order()
            if order is None or order > self.e_max:
                raise PrecisionExhausted(
                    "determinant is not invertible after inverting (z - zeta) "
                    f"within e_max = {self.e_max}", witness=d.format())
            self._det_order = order

    @property
    def rank(self):
        return self.matrix.shape[0]

    @property
    def precision(self):
        return self.matrix.precision

    @property
    def is_effective(self):
        return self.twist >= 0

    def __repr__(self):
        tw = f", twist={self.twist}" if self.twist else ""
        return f"LocalShtuka({self.matrix.format()}{tw}, N={self.precision})"

    def effective_matrix(self):
        """(z - zeta)^twist * matrix, for twist >= 0."""
        if self.twist < 0:
            raise ShtukaError("not effective")
        if self.twist == 0:
            return self.matrix
        return self.matrix.scale(ZSeries.z_minus_zeta(self.algebra, self.precision, self.twist))

    def truncate_precision(self, N):
        return LocalShtuka(self.algebra, self.matrix.truncate(N), self.twist,
                           self.e_max, check=False)

    def same_structure(self, other) -> bool:
        """Equal structure maps after clearing the twists."""
        if self.rank != other.rank or not self.algebra.same_as(other.algebra):
            return False
        lo = min(self.twist, other.twist)
        N = min(self.precision, other.precision)
        a = self.matrix.truncate(N).scale(ZSeries.z_minus_zeta(self.algebra, N, self.twist - lo))
        b = other.matrix.truncate(N).scale(ZSeries.z_minus_zeta(self.algebra, N, other.twist - lo))
        return a == b

    def conjugate(self, U: ZMatrix):
        """U^{-1} T U^(q) for an invertible U over R[[z]]."""
        A = self.algebra
        N = min(self.precision, U.precision)
        Uinv, trusted = solve_series(U.truncate(N), ZMatrix.identity(A, self.rank, N))
        if trusted < N or not (U.truncate(N) @ Uinv == ZMatrix.identity(A, self.rank, N)):
            raise NotAUnit("change of basis is not invertible")
        T = Uinv @ self.matrix.truncate(N) @ U.truncate(N).frobenius()
        return LocalShtuka(A, T, self.twist, self.e_max, check=False)


def tate_object(A: FdAlgebra, n: int, N: int) -> LocalShtuka:
    """1(n): rank one with structure map (z - zeta)^n."""
    if n >= 0:
        m = ZMatrix.scalar(ZSeries.z_minus_zeta(A, N, n), 1)
        return LocalShtuka(A, m, 0, check=False)
    return LocalShtuka(A, ZMatrix.identity(A, 1, N), n, check=False)


def tate_twist(sh: LocalShtuka, n: int) -> LocalShtuka:
    if n >= 0:
        m = sh.matrix.scale(ZSeries.z_minus_zeta(sh.algebra, sh.precision, n))
        return LocalShtuka(sh.algebra, m, sh.twist, sh.e_max, check=False)
    return LocalShtuka(sh.algebra, sh.matrix, sh.twist + n, sh.e_max, check=False)


def tensor(a, b):
    if isinstance(a, FiniteShtuka):
        A = a.algebra
        A.require_same(b.algebra)
        r1, r2 = a.rank, b.rank
        M = np.zeros((r1 * r2, r1 * r2, A.k), dtype=np.int64)
        for i in range(r1):
            for j in range(r1):
                for s in range(r2):
                    for t in range(r2):
                        M[i * r2 + s, j * r2 + t] = A.mul(a.matrix[i, j], b.matrix[s, t])
        return FiniteShtuka(A, M)
    return LocalShtuka(a.algebra, a.matrix.kron(b.matrix), a.twist + b.twist,
                       max(a.e_max, b.e_max), check=False)


def dual(sh):
    """Dual shtuka: structure matrix (T^{-1})^t, with a twist recording the
    power of (z - zeta) that had to be inverted."""
    A = sh.algebra
    if isinstance(sh, FiniteShtuka):
        inv = alg.matrix_inverse(A, sh.matrix)
        return FiniteShtuka(A, np.transpose(inv, (1, 0, 2)).copy())
    N = sh.precision
    d = det(sh.matrix)
    dm = ZMatrix.scalar(d, 1)
    for E in range(0, sh.e_max + 1):
        rhs = ZMatrix.scalar(ZSeries.z_minus_zeta(A, N, E), 1)
        try:
            w, trusted = solve_series(dm, rhs)
        except NoSolution:
            continue
        if trusted < 1:
            raise PrecisionExhausted("dual loses all precision", witness=E)
        adj = adjugate(sh.matrix)
        ws = ZSeries(A, w.data[0, 0])
        body = adj.scale(ws).transpose().truncate(trusted)
        return LocalShtuka(A, body, -sh.twist - E, sh.e_max, check=False)
    raise PrecisionExhausted(f"no (z - zeta)^E in det * R[[z]] for E <= {sh.e_max}")


def internal_hom(a, b):
    return tensor(dual(a), b)


class VerschiebungResult:
    def __init__(self, matrix, d, precision):
        self.matrix = matrix
        self.d = d
        self.precision = precision

    def __repr__(self):
        return f"Verschiebung(d={self.d}, {self.matrix})"


def verschiebung(sh, d):
    """The Verschiebung V with F V = V F = (z - zeta)^d (local shtuka) or
    F V = V F = c (finite shtuka, c in R).

    Raises NotAnnihilated with the first basis vector e_j whose multiple is
    not in the image of F.
    """
    A = sh.algebra
    if isinstance(sh, FiniteShtuka):
        c = np.asarray(d, dtype=np.int64)
        target = _scalar_matrix(A, sh.rank, c)
        flat = alg.flatten_matrix(A, sh.matrix)
        S = np.zeros_like(target)
        for j in range(sh.rank):
            try:
                S[:, j] = fl.solve(A.field, flat, target[:, j].reshape(-1)).reshape(sh.rank, A.k)
            except NoSolution:
                raise NotAnnihilated(f"c * e_{j} is not in the image of F", witness=j)
        if not np.array_equal(alg.matmul(A, S, sh.matrix), target) or \
                not np.array_equal(alg.matmul(A, sh.matrix, S), target):
            raise NotAnnihilated("no two-sided Verschiebung for this scalar")
        return VerschiebungResult(S, c, None)
    T = sh.effective_matrix()
    N = sh.precision
    target = ZMatrix.scalar(ZSeries.z_minus_zeta(A, N, d), sh.rank)
    try:
        S, trusted = solve_series(T, target)
    except NoSolution as exc:
        j = exc.witness
        raise NotAnnihilated(f"(z - zeta)^{d} e_{j} is not in the image of F",
                             witness=j) from None
    if trusted < 1:
        raise PrecisionExhausted("Verschiebung is undetermined at this precision")
    S = S.truncate(trusted)
    Tt = T.truncate(trusted)
    tgt = target.truncate(trusted)
    if not (Tt @ S == tgt and S @ Tt == tgt):
        raise NotAnnihilated("F V = (z - zeta)^d holds but V F does not")
    return VerschiebungResult(S, d, trusted)


class BoundednessReport:
    def __init__(self, d, bounded, unit=None, witness=None, kills_coker=None):
        self.d = d
        self.bounded = bounded
        self.unit = unit
        self.witness = witness
        self.kills_coker = kills_coker

    def as_dict(self):
        out = {"d": self.d, "bounded": self.bounded, "kills_coker": self.kills_coker}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.unit is not None:
            out["unit"] = self.unit
        return out

    def __repr__(self):
        return f"BoundednessReport({self.as_dict()})"


def boundedness_check(sh: LocalShtuka, d: int) -> BoundednessReport:
    """Is det F = (z - zeta)^d * unit?  Also records whether (z - zeta)^d
    annihilates coker F."""
    A = sh.algebra
    dt = det(sh.effective_matrix())
    try:
        verschiebung(sh, d)
        kills = True
    except (NotAnnihilated, PrecisionExhausted):
        kills = False
    try:
        u = divide_by_z_minus_zeta(dt, d)
    except NotDivisible as exc:
        w = exc.witness
        return BoundednessReport(d, False, witness={
            "det": dt.format(), "step": w["step"],
            "residual": A.format(w["residual"])}, kills_coker=kills)
    if is_unit_series(u):
        return BoundednessReport(d, True, unit=u.format(), kills_coker=kills)
    return BoundednessReport(d, False, witness={
        "det": dt.format(), "quotient": u.format(),
        "reason": "quotient is not a unit"}, kills_coker=kills)


# -- truncations -------------------------------------------------------------

class TruncatedShtuka:
    """M/z^n M as a finite shtuka of rank r n with its z-action.

    Basis index j * r + i corresponds to e_i z^j.
    """

    def __init__(self, source: LocalShtuka, n: int, matrix, z_action):
        self.source = source
        self.n = n
        self.matrix = matrix
        self.z_action = z_action

    @property
    def algebra(self):
        return self.source.algebra

    @property
    def rank(self):
        return self.matrix.shape[0]

    def as_finite(self):
        return FiniteShtuka(self.algebra, self.matrix)

    def __repr__(self):
        return f"TruncatedShtuka(n={self.n}, rank={self.rank})"


def truncate(sh: LocalShtuka, n: int) -> TruncatedShtuka:
    if n > sh.precision:
        raise InsufficientPrecision(f"truncation level {n} exceeds precision {sh.precision}")
    A = sh.algebra
    T = sh.effective_matrix().data
    r = sh.rank
    M = np.zeros((r * n, r * n, A.k), dtype=np.int64)
    for j in range(n):
        for i in range(r):
            col = j * r + i
            for l in range(n - j):
                # F(sigma^* e_i z^j) = z^j sum_kk T[kk, i] e_kk
                M[(j + l) * r:(j + l + 1) * r, col] = T[:, i, l]
    Z = np.zeros((r * n, r * n, A.k), dtype=np.int64)
    for j in range(n - 1):
        for i in range(r):
            Z[(j + 1) * r + i, j * r + i, 0] = 1
    return TruncatedShtuka(sh, n, M, Z)


class SequenceReport:
    def __init__(self, n, m, ranks, exact, compatible, details=None):
        self.n, self.m = n, m
        self.ranks = ranks
        self.exact = exact
        self.compatible = compatible
        self.details = details or {}

    @property
    def ok(self):
        return self.exact and self.compatible

    def as_dict(self):
        return {"n": self.n, "m": self.m, "ranks": list(self.ranks),
                "exact": self.exact, "compatible": self.compatible}

    def __repr__(self):
        return f"SequenceReport({self.as_dict()})"


def inclusion_map(r, m, n_plus_m, shift):
    """F_q-free 0/1 matrix of multiplication by z^shift: M/z^m -> M/z^(n+m)."""
    out = np.zeros((r * n_plus_m, r * m), dtype=np.int64)
    for j in range(m):
        for i in range(r):
            out[(j + shift) * r + i, j * r + i] = 1
    return out


def projection_map(r, big, small):
    out = np.zeros((r * small, r * big), dtype=np.int64)
    for j in range(small):
        for i in range(r):
            out[j * r + i, j * r + i] = 1
    return out


def sequence_check(sh: LocalShtuka, n: int, m: int) -> SequenceReport:
    """0 -> M/z^m --z^n--> M/z^(n+m) --> M/z^n -> 0 on the module side,
    which is the sequence 0 -> G[z^n] -> G[z^(n+m)] -> G[z^m] -> 0 of the
    associated group schemes (ranks reported in that order)."""
    A = sh.algebra
    F = A.field
    r = sh.rank
    Tm, Tnm, Tn = truncate(sh, m), truncate(sh, n + m), truncate(sh, n)
    inc = inclusion_map(r, m, n + m, n)
    proj = projection_map(r, n + m, n)
    # F_q-level maps between R-modules (entries 0/1, so tensor with R)
    def over_R(M01):
        out = np.zeros(M01.shape + (A.k,), dtype=np.int64)
        out[:, :, 0] = M01
        return out

    inc_R, proj_R = over_R(inc), over_R(proj)
    fi = alg.flatten_matrix(A, inc_R)
    fp = alg.flatten_matrix(A, proj_R)
    injective = fl.rank(F, fi) == fi.shape[1]
    surjective = fl.rank(F, fp) == fp.shape[0]
    comp = F.matmul(fp, fi)
    middle = (not np.any(comp)) and fl.rank(F, fi) + fl.rank(F, fp) == fi.shape[0]
    exact = injective and surjective and middle
    # compatibility with F: f T_src = T_tgt f^(q) (f has F_q entries)
    c1 = np.array_equal(alg.matmul(A, inc_R, Tm.matrix), alg.matmul(A, Tnm.matrix, inc_R))
    c2 = np.array_equal(alg.matmul(A, proj_R, Tnm.matrix), alg.matmul(A, Tn.matrix, proj_R))
    return SequenceReport(n, m, (r * n, r * (n + m), r * m), exact, c1 and c2)
