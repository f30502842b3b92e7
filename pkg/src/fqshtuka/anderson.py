"""z-divisible local Anderson modules as truncation towers of an effective
local shtuka, with the Hodge filtration and its deformation lift.

Vectors of R[[z]]^r known modulo z^N are arrays of shape (r, N, k); the
flattened F_q index is (i * N + n) * k + l.  The Hodge module
H = sigma^*M / (z - zeta)^d has the same layout with N replaced by d,
so its R-basis vector e_i z^s sits at position i * d + s.
"""
from __future__ import annotations

import numpy as np

from . import algebra as alg
from . import field as fl
from .algebra import FdAlgebra, AlgebraHom
from .drinfeld import TestAlgebra, catalog, order, points, points_system, presentation
from .errors import (AlgebraMismatch, InsufficientPrecision, NoLift, NoSolution,
                     NotAFiltration, NotAndersonDivisible, NotAnnihilated,
                     PrecisionExhausted, ShtukaError, ZetaNotZero)
from .shtuka import (LocalShtuka, _p_power_at_least, colie, projection_map,
                     sequence_check, truncate, verschiebung)
from .zseries import ZMatrix, ZSeries, det, solve_series

DEFAULT_DMAX = 8
ORDER_BUDGET = 256  # certify presentations up to this many monomials


def _require_zeta_zero(A):
    if np.any(A.zeta):
        raise ZetaNotZero("this check needs zeta = 0 in the base",
                          witness=A.format(A.zeta))


def admissible_d(sh: LocalShtuka, d_max=None):
    """Least d <= d_max with (z - zeta)^d killing coker F, or raise."""
    if not sh.is_effective:
        raise ShtukaError("the shtuka is not effective")
    if d_max is None:
        d_max = min(DEFAULT_DMAX, max(sh.precision // 2, 1))
    last = None
    for d in range(d_max + 1):
        try:
            verschiebung(sh, d)
            return d
        except (NotAnnihilated, PrecisionExhausted) as exc:
            last = exc
    raise NotAndersonDivisible(
        f"(z - zeta)^d does not kill omega for any d <= {d_max}",
        witness={"d_max": d_max, "column": getattr(last, "witness", None)})


# -- towers -----------------------------------------------------------------

class AndersonTower:
    """The window G[z^n], n = 1..n_max, of the module attached to `source`."""

    def __init__(self, source, n_max, d, levels, orders, sequences):
        self.source = source
        self.n_max = n_max
        self.d = d
        self.levels = levels
        self.orders = orders
        self.sequences = sequences
        self._pres = {}

    @property
    def algebra(self):
        return self.source.algebra

    @property
    def height(self):
        return self.source.rank

    @property
    def nilpotence_order(self):
        return self.d

    def presentation(self, n):
        if n not in self._pres:
            self._pres[n] = presentation(self.levels[n - 1])
        return self._pres[n]

    @property
    def orders_ok(self):
        q, h = self.algebra.q, self.height
        return all(o == q ** (n * h) for n, o in enumerate(self.orders, start=1))

    @property
    def exact(self):
        return all(rep.ok for rep in self.sequences)

    def as_dict(self):
        return {"height": self.height, "d": self.d, "n_max": self.n_max,
                "orders": list(self.orders), "orders_ok": self.orders_ok,
                "sequences_exact": self.exact}

    def __repr__(self):
        return f"AndersonTower(h={self.height}, d={self.d}, orders={self.orders})"


def build_tower(sh: LocalShtuka, n_max: int, d_max=None) -> AndersonTower:
    """Truncations M/z^n M for n <= n_max, with orders certified on the
    Drinfeld presentation (when small enough) and the sequences
    0 -> G[z^n] -> G[z^(n+m)] -> G[z^m] -> 0 checked on modules."""
    if n_max > sh.precision:
        raise InsufficientPrecision(
            f"tower level {n_max} exceeds precision {sh.precision}")
    d = admissible_d(sh, d_max)
    q = sh.algebra.q
    levels, orders = [], []
    for n in range(1, n_max + 1):
        lev = truncate(sh, n)
        levels.append(lev)
        size = q ** lev.rank
        if size <= ORDER_BUDGET:
            cert = order(presentation(lev))
            if not cert.closed:
                raise ShtukaError(f"monomial basis of level {n} is not closed")  # pragma: no cover
            orders.append(cert.order)
        else:
            orders.append(size)
    seqs = [sequence_check(sh, n, m)
            for n in range(1, n_max) for m in range(1, n_max - n + 1)]
    return AndersonTower(sh, n_max, d, levels, orders, seqs)


# -- omega stabilization ----------------------------------------------------

class OmegaReport:
    def __init__(self, n_stab, dims, bijective, bound, stable):
        self.n_stab = n_stab
        self.dims = dims
        self.bijective = bijective
        self.bound = bound
        self.stable = stable

    @property
    def within_bound(self):
        return self.stable and self.n_stab <= self.bound

    def as_dict(self):
        return {"n_stab": self.n_stab, "omega_dims": list(self.dims),
                "transitions_bijective": list(self.bijective),
                "bound": self.bound, "within_bound": self.within_bound}

    def __repr__(self):
        return f"OmegaReport({self.as_dict()})"


def _omega_transition(A, r, big, small, cl_big, cl_small):
    """F_q-matrix of omega(level big) -> omega(level small) induced by the
    projection M/z^big -> M/z^small."""
    F = A.field
    P = np.zeros((r * small, r * big, A.k), dtype=np.int64)
    P[:, :, 0] = projection_map(r, big, small)
    flat = alg.flatten_matrix(A, P)
    img = cl_small.image_rows
    if img.shape[0]:
        R, piv = fl.rref(F, img)
        R = R[: len(piv)]
    else:
        R, piv = img, []
    cols = []
    for v in cl_big.omega_vectors():
        w = F.matmul(flat, v[:, None])[:, 0]
        for row, pc in zip(R, piv):
            if w[pc]:
                w = F.sub(w, F.mul(int(w[pc]), row))
        cols.append(w[cl_small.omega_index])
    if not cols:
        return np.zeros((cl_small.omega_dim, 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def omega_stabilization(tower: AndersonTower) -> OmegaReport:
    """Least N such that omega(G[z^(n+1)]) -> omega(G[z^n]) is bijective for
    every available n >= N, compared with the p-power bound."""
    A = tower.algebra
    F = A.field
    r = tower.height
    cls = [colie(lev.as_finite()) for lev in tower.levels]
    dims = [c.omega_dim for c in cls]
    bij = []
    for n in range(1, tower.n_max):
        M = _omega_transition(A, r, n + 1, n, cls[n], cls[n - 1])
        ok = M.shape[0] == M.shape[1] and (M.shape[0] == 0 or fl.rank(F, M) == M.shape[0])
        bij.append(bool(ok))
    n_stab = tower.n_max
    while n_stab > 1 and bij[n_stab - 2]:
        n_stab -= 1
    stable = tower.n_max == 1 or bij[-1]
    bound = _p_power_at_least(F.p, max(tower.d, A.zeta_index))
    return OmegaReport(n_stab, dims, bij, bound, stable)


# -- point-level checks -------------------------------------------------------

class FlatnessReport:
    def __init__(self, rows, ok):
        self.rows = rows
        self.ok = ok

    def as_dict(self):
        return {"ok": self.ok, "cases": self.rows}

    def __repr__(self):
        bad = [r for r in self.rows if not r["equal"]]
        return f"FlatnessReport(ok={self.ok}, failures={len(bad)})"


def _apply_rows(F, basis, Z, times):
    out = basis
    for _ in range(times):
        out = F.matmul(out, Z.T)
    return out


def point_flatness_check(tower: AndersonTower, tests=None) -> FlatnessReport:
    """ker(z^(n-i)) = im(z^i) on G[z^n](T) for every level n, 0 < i < n and
    every test algebra T."""
    A = tower.algebra
    if tests is None:
        tests = catalog(A)[:3]
    rows = []
    for n in range(2, tower.n_max + 1):
        lev = tower.levels[n - 1]
        for t in tests:
            pm = points(lev, t)
            F = t.algebra.field
            B, Z = pm.basis, pm.z_action
            for i in range(1, n):
                img = _apply_rows(F, B, Z, i)
                img_dim = fl.rank(F, img) if img.shape[0] else 0
                # c with (c B) z^(n-i) = 0
                hit = _apply_rows(F, B, Z, n - i)
                coeff = fl.kernel(F, hit.T) if B.shape[0] else np.zeros((0, 0), dtype=np.int64)
                ker = F.matmul(coeff, B) if coeff.shape[0] else np.zeros((0, B.shape[1]), dtype=np.int64)
                equal = fl.same_span(F, ker, img) if (ker.shape[0] or img_dim) else True
                rows.append({"level": n, "i": i, "test": t.name,
                             "ker_dim": int(ker.shape[0] and fl.rank(F, ker)),
                             "im_dim": int(img_dim), "equal": bool(equal)})
    return FlatnessReport(rows, all(r["equal"] for r in rows))


class FrobeniusKernelReport:
    def __init__(self, i, d, test, kernel_dim, target_dim, contained, level):
        self.i, self.d = i, d
        self.test = test
        self.kernel_dim = kernel_dim
        self.target_dim = target_dim
        self.contained = contained
        self.level = level

    def as_dict(self):
        q = self.test.algebra.q
        return {"i": self.i, "d": self.d, "test": self.test.name, "level": self.level,
                "frobenius_kernel_points": q ** self.kernel_dim,
                "z_kernel_points": q ** self.target_dim, "contained": self.contained}

    def __repr__(self):
        return f"FrobeniusKernelReport({self.as_dict()})"


def frobenius_kernel_check(tower, i: int, test: TestAlgebra) -> FrobeniusKernelReport:
    """G[F_q^i](T) inside G[z^(i d)](T), both read off at level i d + 1."""
    sh = tower.source if isinstance(tower, AndersonTower) else tower
    d = tower.d if isinstance(tower, AndersonTower) else admissible_d(sh)
    A = sh.algebra
    _require_zeta_zero(A)
    T = test.algebra
    F = T.field
    r = sh.rank
    L = i * d + 1
    if L > sh.precision:
        raise InsufficientPrecision(f"level {L} exceeds precision {sh.precision}")
    lev = truncate(sh, L)
    sysm = points_system(lev, test)
    kT = T.k
    frob = T.frobenius_power_matrix(i)
    n = r * L
    blocks = np.zeros((n * kT, n * kT), dtype=np.int64)
    for c in range(n):
        blocks[c * kT:(c + 1) * kT, c * kT:(c + 1) * kT] = frob
    kern = fl.kernel(F, np.vstack([sysm, blocks]))
    # a point lies in G[z^(i d)] iff it vanishes on e_c z^j for j >= i d
    tail = kern[:, r * i * d * kT:]
    contained = not np.any(tail)
    target = points(truncate(sh, i * d), test).dim if i * d > 0 else 0
    return FrobeniusKernelReport(i, d, test, int(kern.shape[0]), int(target), contained, L)


class ZdVerschiebungReport:
    def __init__(self, d, matrix, fv, vf, twisted):
        self.d = d
        self.matrix = matrix
        self.fv, self.vf, self.twisted = fv, vf, twisted

    @property
    def ok(self):
        return self.fv and self.vf and self.twisted

    def as_dict(self):
        return {"d": self.d, "V": self.matrix.format(), "FV": self.fv,
                "VF": self.vf, "twisted_square": self.twisted}

    def __repr__(self):
        return f"ZdVerschiebungReport({self.as_dict()})"


def zd_verschiebung_check(sh: LocalShtuka, d: int) -> ZdVerschiebungReport:
    """F V = z^d, V F = z^d and F^(q) V^(q) = V F (the square relating
    sigma^*V and V commutes because zeta = 0 = zeta^q)."""
    A = sh.algebra
    _require_zeta_zero(A)
    V = verschiebung(sh, d)
    N = V.precision
    S = V.matrix
    T = sh.effective_matrix().truncate(N)
    zd = ZMatrix.scalar(ZSeries.z_power(A, d, N), sh.rank)
    fv = T @ S == zd
    vf = S @ T == zd
    twisted = (T.frobenius() @ S.frobenius() == S @ T) and vf
    return ZdVerschiebungReport(d, S, fv, vf, twisted)


# -- Hodge filtration ---------------------------------------------------------

def _reduction_table(A: FdAlgebra, N: int, d: int):
    """z^n mod (z - zeta)^d for n < N, as an array (N, d, k)."""
    out = np.zeros((N, d, A.k), dtype=np.int64)
    if d == 0:
        return out
    # z^d = (z^d - (z - zeta)^d) mod (z - zeta)^d, a polynomial of degree < d
    zz = ZSeries.z_minus_zeta(A, d + 1, d).coeffs
    top = A.neg(zz[:d])  # z^d == -((z - zeta)^d - z^d)
    cur = np.zeros((d, A.k), dtype=np.int64)
    cur[0, 0] = 1
    for n in range(N):
        out[n] = cur
        lead = cur[d - 1].copy()
        nxt = np.zeros_like(cur)
        nxt[1:] = cur[:-1]
        if np.any(lead):
            nxt = A.add(nxt, A.mul(lead[None, :], top))
        cur = nxt
    return out


def reduce_mod_zeta_power(A: FdAlgebra, vec, d: int):
    """Reduce vectors (..., N, k) of polynomials modulo (z - zeta)^d."""
    vec = np.asarray(vec, dtype=np.int64)
    N = vec.shape[-2]
    table = _reduction_table(A, N, d)
    prod = A.mul(vec[..., :, None, :], table)  # (..., N, d, k)
    return A.sum(prod, axis=-3) if N else np.zeros(vec.shape[:-2] + (d, A.k), dtype=np.int64)


def _z_on_H(A, r, d):
    """F_q-matrix of multiplication by z on H = (R[z]/(z - zeta)^d)^r."""
    n = r * d * A.k
    cols = []
    for c in range(n):
        v = np.zeros(n, dtype=np.int64)
        v[c] = 1
        x = v.reshape(r, d, A.k)
        sh = np.zeros((r, d + 1, A.k), dtype=np.int64)
        sh[:, 1:] = x
        cols.append(reduce_mod_zeta_power(A, sh, d).reshape(-1))
    return np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=np.int64)


def submodule_span(A, r, d, vectors):
    """F_q-basis of the R[z]-submodule of H generated by vectors (s, r, d, k)."""
    F = A.field
    V = np.asarray(vectors, dtype=np.int64).reshape(-1, r * d, A.k)
    space = alg.span_over_R(A, V)
    if space.shape[0] == 0:
        return space
    Z = _z_on_H(A, r, d)
    while True:
        more = fl.row_space(F, np.vstack([space, F.matmul(space, Z.T)]))
        if more.shape[0] == space.shape[0]:
            return space
        space = more


class HodgeData:
    """Fil = V(coker F) inside H = sigma^*M / (z - zeta)^d."""

    def __init__(self, algebra, rank, d, space, generators, coker_f_dim):
        self.algebra = algebra
        self.rank = rank
        self.d = d
        self.space = space
        self.generators = generators
        self.coker_f_dim = coker_f_dim

    @property
    def h_dim(self):
        return self.rank * self.d * self.algebra.k

    @property
    def fil_dim(self):
        return self.space.shape[0]

    @property
    def coker_v_dim(self):
        return self.h_dim - self.fil_dim

    @property
    def exact(self):
        """0 -> coker F -> H -> coker V -> 0 by rank accounting."""
        return self.coker_f_dim + self.coker_v_dim == self.h_dim

    def same_filtration(self, other_space) -> bool:
        F = self.algebra.field
        other = np.asarray(other_space, dtype=np.int64)
        if self.space.shape[0] == 0 or other.shape[0] == 0:
            return self.space.shape[0] == 0 and (other.shape[0] == 0 or not np.any(other))
        return fl.same_span(F, self.space, other)

    def format_generators(self):
        A = self.algebra
        out = []
        for g in self.generators:
            g = g.reshape(self.rank, self.d, A.k)
            entries = []
            for i in range(self.rank):
                s = ZSeries(A, g[i]).format() if self.d else "0"
                entries.append(s)
            out.append(entries)
        return out

    def as_dict(self):
        return {"d": self.d, "H_dim": self.h_dim, "fil_dim": self.fil_dim,
                "coker_F_dim": self.coker_f_dim, "coker_V_dim": self.coker_v_dim,
                "exact": self.exact, "generators": self.format_generators()}

    def __repr__(self):
        return f"HodgeData(d={self.d}, fil={self.format_generators()})"


def _column_vectors(A, M: ZMatrix, d):
    """z^s * column j of M, reduced mod (z - zeta)^d, for s < d."""
    r, c = M.shape
    out = []
    for j in range(c):
        col = M.data[:, j]  # (r, N, k)
        for s in range(d):
            shifted = np.zeros((r, col.shape[1] + s, A.k), dtype=np.int64)
            shifted[:, s:] = col
            out.append(reduce_mod_zeta_power(A, shifted, d))
    return np.array(out, dtype=np.int64).reshape(-1, r, d, A.k)


def hodge_filtration(sh: LocalShtuka, d: int) -> HodgeData:
    A = sh.algebra
    r = sh.rank
    V = verschiebung(sh, d)
    empty = np.zeros((0, r * d * A.k), dtype=np.int64)
    if d == 0:
        return HodgeData(A, r, 0, empty, np.zeros((0, 0, A.k), dtype=np.int64), 0)
    need = d + A.zeta_index - 1
    if V.precision < need:
        raise InsufficientPrecision(
            f"Verschiebung known to z^{V.precision}, need z^{need}")
    S = V.matrix.truncate(need)
    space = submodule_span(A, r, d, _column_vectors(A, S, d))
    T = sh.effective_matrix().truncate(max(need, 1))
    img = submodule_span(A, r, d, _column_vectors(A, T, d))
    coker_f = r * d * A.k - img.shape[0]
    gens, _ = alg.minimal_generators(A, space, r * d) if space.shape[0] else \
        (np.zeros((0, r * d, A.k), dtype=np.int64), True)
    return HodgeData(A, r, d, space if space.shape[0] else empty, gens, coker_f)


# -- deformations -------------------------------------------------------------

def _ideal_closure(A, rows):
    F = A.field
    I = np.asarray(rows, dtype=np.int64).reshape(-1, A.k)
    if I.shape[0] == 0:
        return I
    basis = np.eye(A.k, dtype=np.int64)
    prods = A.mul(I[:, None, :], basis[None, :, :]).reshape(-1, A.k)
    return fl.row_space(F, np.vstack([I, prods]))


def ideal_power_vanishes(A, rows, n):
    """Is I^n = 0 for the ideal generated by rows?"""
    F = A.field
    I = _ideal_closure(A, rows)
    if I.shape[0] == 0:
        return True
    cur = I
    for _ in range(n - 1):
        prods = A.mul(cur[:, None, :], I[None, :, :]).reshape(-1, A.k)
        if not np.any(prods):
            return True
        cur = fl.row_space(F, prods)
    return not np.any(cur)


def _map_series_array(hom: AlgebraHom, X):
    """Apply an algebra hom to the last axis of X."""
    return hom(np.asarray(X, dtype=np.int64))


class DeformationProblem:
    """Lift a local shtuka over R/I to R (I^q = 0) along a filtration Fil of
    H = j^*M'/(z - zeta)^d, where j: R/I -> R is b -> b^q."""

    def __init__(self, big_ring: FdAlgebra, ideal, shtuka_small: LocalShtuka,
                 fil_big, d: int):
        self.big_ring = big_ring
        self.ideal = _ideal_closure(big_ring, ideal)
        if not ideal_power_vanishes(big_ring, self.ideal, big_ring.q):
            raise NotAFiltration("I^q is not zero", witness="ideal")
        Q, hom, section = alg.quotient(big_ring, self.ideal)
        if not Q.same_as(shtuka_small.algebra):
            raise AlgebraMismatch("small shtuka is not over R/I")
        self.small_ring = shtuka_small.algebra
        self.projection = AlgebraHom(big_ring, self.small_ring, hom.matrix, check=False)
        self.section = section
        self.shtuka_small = shtuka_small
        self.d = d
        self.rank = shtuka_small.rank
        r, A = self.rank, big_ring
        gens = np.asarray(fil_big, dtype=np.int64).reshape(-1, r, d, A.k)
        self.fil_generators = gens
        self.fil_space = submodule_span(A, r, d, gens) if d else \
            np.zeros((0, 0), dtype=np.int64)
        self.hodge_small = hodge_filtration(shtuka_small, d)
        self._check()

    def _check(self):
        A, r, d = self.big_ring, self.rank, self.d
        F = A.field
        if d == 0:
            return
        # reduction modulo I is the small Hodge filtration
        if self.fil_space.shape[0]:
            red = _map_series_array(self.projection, self.fil_space.reshape(-1, r, d, A.k))
            red = red.reshape(red.shape[0], -1)
        else:
            red = np.zeros((0, r * d * self.small_ring.k), dtype=np.int64)
        if not self.hodge_small.same_filtration(red):
            raise NotAFiltration("Fil does not reduce to the Hodge filtration mod I",
                                 witness="reduction")
        # H / Fil must be free: compare with a minimal generating set
        n = r * d * A.k
        res = alg.residue_field(A)
        full = np.eye(n, dtype=np.int64)
        mH = fl.row_space(F, _rad_times(A, full, r * d).reshape(-1, n)) \
            if A.nilradical.shape[0] else np.zeros((0, n), dtype=np.int64)
        both = np.vstack([self.fil_space, mH]) if mH.shape[0] else self.fil_space
        sum_dim = fl.rank(F, both) if both.shape[0] else 0
        gens = (n - sum_dim) // res.degree
        if n - self.fil_space.shape[0] != gens * A.k:
            raise NotAFiltration("H / Fil is not free over R",
                                 witness={"quotient_dim": n - self.fil_space.shape[0],
                                          "generators": gens})

    def as_dict(self):
        return {"rank": self.rank, "d": self.d,
                "ideal_dim": int(self.ideal.shape[0]),
                "fil_dim": int(self.fil_space.shape[0])}


def _rad_times(A, full, m):
    """Rows spanning rad(R) * R^m (flattened)."""
    rad = A.nilradical
    V = full.reshape(-1, m, A.k)
    prods = A.mul(rad[:, None, None, :], V[None, :, :, :])
    return prods.reshape(-1, m, A.k)


class LiftResult:
    def __init__(self, shtuka, basis, reduces, hodge_ok):
        self.shtuka = shtuka
        self.basis = basis
        self.reduces = reduces
        self.hodge_ok = hodge_ok

    @property
    def ok(self):
        return self.reduces and self.hodge_ok

    def __repr__(self):
        return f"LiftResult({self.shtuka}, reduces={self.reduces}, hodge={self.hodge_ok})"


def _module_space(A, r, N, d, fil_space):
    """F_q-basis of {x in (R[z]/z^N)^r : x mod (z - zeta)^d in Fil}."""
    F = A.field
    n = r * N * A.k
    table = _reduction_table(A, N, d)
    # reduction map (r N k) -> (r d k) over F_q
    red = np.zeros((r * d * A.k, n), dtype=np.int64)
    for i in range(r):
        for m in range(N):
            for l in range(A.k):
                b = np.zeros(A.k, dtype=np.int64)
                b[l] = 1
                img = A.mul(b[None, :], table[m])  # (d, k)
                red[i * d * A.k:(i + 1) * d * A.k, (i * N + m) * A.k + l] = img.reshape(-1)
    # quotient H -> H / Fil via the complement of Fil
    if fil_space.shape[0]:
        K = fl.kernel(F, fil_space)  # functionals vanishing on Fil
        cond = F.matmul(K, red)
    else:
        cond = red
    return fl.kernel(F, cond) if cond.shape[0] else np.eye(n, dtype=np.int64)


def deform_lift(prob: DeformationProblem) -> LiftResult:
    """The lift M = {x in j^*M' : x mod (z - zeta)^d in Fil} with
    F_M = (z - zeta)^d V_M^{-1}, where V_M is the inclusion M -> j^*M'.

    The basis of M is chosen to reduce to V'(e_j) modulo I, so the lift
    reduces to the small shtuka itself.
    """
    A, R1 = prob.big_ring, prob.small_ring
    r, d = prob.rank, prob.d
    F = A.field
    small = prob.shtuka_small
    if d == 0:
        T = _lift_matrix(prob, small.effective_matrix())
        lifted = LocalShtuka(A, T, 0, small.e_max)
        return LiftResult(lifted, ZMatrix.identity(A, r, T.precision), True, True)
    Vs = verschiebung(small, d)
    W = Vs.precision
    Vp = Vs.matrix  # over R/I, in sigma^*M' coordinates
    space = _module_space(A, r, W, d, prob.fil_space)
    # solve for b_j in M with b_j = V'(e_j) mod I
    proj_flat = _projection_flat(prob, r, W)
    coords = F.matmul(proj_flat, space.T)  # columns: images of the M-basis
    B = np.zeros((r, r, W, A.k), dtype=np.int64)
    for j in range(r):
        target = Vp.data[:, j].reshape(-1)
        try:
            c = fl.solve(F, coords, target)
        except NoSolution:
            raise NoLift(f"no element of M reduces to V'(e_{j})", witness=j) from None
        B[:, j] = F.matmul(space.T, c[:, None])[:, 0].reshape(r, W, A.k)
    Bm = ZMatrix(A, B)
    _check_generates(A, Bm, space, r, W)
    target = ZMatrix.scalar(ZSeries.z_minus_zeta(A, W, d), r)
    Fm, trusted = solve_series(Bm, target)
    if trusted < 1:
        raise PrecisionExhausted("lift is undetermined at this precision")
    Fm = Fm.truncate(trusted)
    if not (Bm.truncate(trusted) @ Fm == target.truncate(trusted)):
        raise NoLift("B F = (z - zeta)^d fails")  # pragma: no cover
    lifted = LocalShtuka(A, Fm, 0, small.e_max)
    reduced = _reduce_matrix(prob, Fm)
    reduces = reduced == small.effective_matrix().truncate(trusted)
    try:
        hod = hodge_filtration(lifted, d)
        hodge_ok = hod.same_filtration(prob.fil_space)
    except (InsufficientPrecision, NotAnnihilated, PrecisionExhausted):
        hodge_ok = False
    return LiftResult(lifted, Bm.truncate(trusted), bool(reduces), bool(hodge_ok))


def _projection_flat(prob, r, W):
    """F_q-matrix of reduction mod I on (R[z]/z^W)^r."""
    A, R1 = prob.big_ring, prob.small_ring
    P = prob.projection.matrix  # (k1, k)
    blocks = np.zeros((r * W * R1.k, r * W * A.k), dtype=np.int64)
    for t in range(r * W):
        blocks[t * R1.k:(t + 1) * R1.k, t * A.k:(t + 1) * A.k] = P
    return blocks


def _check_generates(A, B: ZMatrix, space, r, W):
    """The columns of B generate M modulo z^W."""
    F = A.field
    vecs = []
    for j in range(r):
        col = B.data[:, j]
        for s in range(W):
            sh = np.zeros_like(col)
            sh[:, s:] = col[:, : W - s]
            vecs.append(sh.reshape(r * W, A.k))
    span = alg.span_over_R(A, np.array(vecs))
    if span.shape[0] != space.shape[0]:
        raise NoLift("chosen elements do not generate M",
                     witness={"span": int(span.shape[0]), "module": int(space.shape[0])})


def _reduce_matrix(prob, M: ZMatrix) -> ZMatrix:
    return ZMatrix(prob.small_ring, _map_series_array(prob.projection, M.data))


def _lift_matrix(prob, M: ZMatrix) -> ZMatrix:
    """Coefficientwise lift along the F_q-linear section R/I -> R."""
    return ZMatrix(prob.big_ring, np.einsum("kj,...j->...k", prob.section, M.data) % prob.big_ring.q)


def _same_space(F, a, b):
    if a.shape[0] == 0 or b.shape[0] == 0:
        return a.shape[0] == b.shape[0]
    return fl.same_span(F, a, b)


def restrict_to_small(big: LocalShtuka, ideal, d: int) -> DeformationProblem:
    """(M mod I, Hodge filtration of M): the inverse direction."""
    A = big.algebra
    I = _ideal_closure(A, ideal)
    Q, hom, section = alg.quotient(A, I)
    red = ZMatrix(Q, hom(big.effective_matrix().data))
    small = LocalShtuka(Q, red, 0, big.e_max, check=False)
    hod = hodge_filtration(big, d)
    gens = hod.space.reshape(-1, big.rank, d, A.k) if d else np.zeros((0, big.rank, 0, A.k))
    return DeformationProblem(A, I, small, gens, d)


class EquivalenceReport:
    def __init__(self, lift_of_restriction, restriction_of_lift, witness=None):
        self.lift_of_restriction = lift_of_restriction
        self.restriction_of_lift = restriction_of_lift
        self.witness = witness

    @property
    def ok(self):
        return self.lift_of_restriction and self.restriction_of_lift

    def as_dict(self):
        out = {"lift_of_restriction": self.lift_of_restriction,
               "restriction_of_lift": self.restriction_of_lift}
        if self.witness is not None:
            out["witness"] = self.witness
        return out

    def __repr__(self):
        return f"EquivalenceReport({self.as_dict()})"


def isomorphic_via_verschiebung(big: LocalShtuka, lift: LiftResult, d: int):
    """Is the lift of (M mod I, Fil(M)) isomorphic to M?  The map is
    U = V_M^{-1} B, which must be invertible with U T_lift = T_M U^(q)."""
    A = big.algebra
    V = verschiebung(big, d)
    N = min(V.precision, lift.basis.precision, lift.shtuka.precision)
    U, trusted = solve_series(V.matrix.truncate(N), lift.basis.truncate(N))
    if trusted < 1:
        return False, None
    U = U.truncate(trusted)
    if not A.is_unit(alg.det(A, U.constant_term())):
        return False, U
    lhs = U @ lift.shtuka.matrix.truncate(trusted)
    rhs = big.effective_matrix().truncate(trusted) @ U.frobenius()
    return lhs == rhs, U


def equivalence_check(prob: DeformationProblem) -> EquivalenceReport:
    """Both composites of deform_lift and (restrict, hodge_filtration)."""
    lift = deform_lift(prob)
    if not lift.ok:
        return EquivalenceReport(False, False, witness="lift fails its postconditions")
    back = restrict_to_small(lift.shtuka, prob.ideal, prob.d)
    N = back.shtuka_small.precision
    restr_ok = back.shtuka_small.effective_matrix() == \
        prob.shtuka_small.effective_matrix().truncate(N)
    if prob.d:
        restr_ok = restr_ok and back.hodge_small.same_filtration(prob.hodge_small.space) \
            and _same_space(prob.big_ring.field, back.fil_space, prob.fil_space)
    # other composite: start from the lift as a big shtuka
    relift = deform_lift(back)
    iso, _ = isomorphic_via_verschiebung(lift.shtuka, relift, prob.d) if prob.d else (True, None)
    return EquivalenceReport(bool(iso), bool(restr_ok))
