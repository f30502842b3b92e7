"""Primitive elements, the M_q round trip, balancedness and strictness.

M_q(G) is the R-module of x in the coordinate ring with
Delta(x) = x (x) 1 + 1 (x) x and [a] x = a x for all a in F_q.  Its
Frobenius is x -> x^q.  Both conditions are R-linear, so the module is the
kernel of a flattened F_q-linear system.
"""
from __future__ import annotations

import numpy as np

from . import algebra as alg
from . import field as fl
from .algebra import FdAlgebra
from .drinfeld import (Presentation, Rewriter, add_term, format_poly,
                       poly_add, poly_sub, presentation, var)
from .errors import (InvalidHopfData, NotALift, NotFree, RoundTripFailure,
                     ShtukaError)
from .shtuka import FiniteShtuka


class PrimitiveModule:
    """Free R-module inside the coordinate ring with a chosen basis.

    `basis` has shape (s, size, k): s elements of the coordinate ring.
    `frobenius` (when computed) is the matrix of x -> x^q in that basis.
    """

    def __init__(self, presentation, basis, space, free, frobenius=None):
        self.presentation = presentation
        self.basis = basis
        self.space = space
        self.free = free
        self.frobenius = frobenius

    @property
    def rank(self):
        return self.basis.shape[0]

    def __repr__(self):
        return f"PrimitiveModule(rank={self.rank}, free={self.free})"


def _primitive_conditions(pres: Presentation, eigen_exponent=None):
    """Stacked F_q-matrix of x -> Delta(x) - x(x)1 - 1(x)x and the action
    conditions [a]x = a^(eigen) x (eigen_exponent=None means a^1)."""
    A = pres.algebra
    F = A.field
    n = pres.size
    one_index = pres.index[tuple([0] * pres.nvars)]

    def prim(v):
        d = pres.comult(v)
        for i in range(n):
            if np.any(v[i]):
                d[i * n + one_index] = A.sub(d[i * n + one_index], v[i])
                d[one_index * n + i] = A.sub(d[one_index * n + i], v[i])
        return d

    blocks = [pres.linear_map_matrix(prim, n * n)]
    if eigen_exponent is not False:
        e = 1 if eigen_exponent is None else eigen_exponent
        for a in pres.action_images:
            c = F.pow(a, e)
            blocks.append(pres.linear_map_matrix(
                lambda v, a=a, c=c: A.sub(pres.action(a, v), A.smul(c, v)), n))
    return np.vstack(blocks)


def _module_from_conditions(pres, cond):
    A = pres.algebra
    space = fl.kernel(A.field, cond)
    gens, free = alg.minimal_generators(A, space, pres.size)
    return gens, space, free


def _coordinates(pres, gens, x):
    """R-coordinates of x in the free module with basis gens (s, size, k)."""
    A = pres.algebra
    B = np.transpose(gens, (1, 0, 2))  # (size, s, k)
    flat = alg.flatten_matrix(A, B)
    sol = fl.solve(A.field, flat, np.asarray(x).reshape(-1))
    return sol.reshape(gens.shape[0], A.k)


def primitives(pres: Presentation, check_free=True) -> PrimitiveModule:
    """M_q: additive primitives on which F_q acts through R."""
    A = pres.algebra
    gens, space, free = _module_from_conditions(pres, _primitive_conditions(pres))
    if check_free and not free:
        raise NotFree("module of primitives is not free", witness=space.shape[0])
    s = gens.shape[0]
    frob = np.zeros((s, s, A.k), dtype=np.int64)
    for l in range(s):
        img = pres.power(gens[l], A.q)
        frob[:, l] = _coordinates(pres, gens, img)
    return PrimitiveModule(pres, gens, space, free, frob)


class RoundTripCertificate:
    def __init__(self, U, recovered, original, ok):
        self.U = U
        self.recovered = recovered
        self.original = original
        self.ok = ok

    def __repr__(self):
        return f"RoundTripCertificate(ok={self.ok})"


def mq_roundtrip(sh: FiniteShtuka) -> RoundTripCertificate:
    """Recover M from M_q(Dr_q(M)) with T_rec = U^{-1} T U^(q), where the
    columns of U express the primitive basis in the coordinates X_i."""
    A = sh.algebra
    r = sh.rank
    pres = presentation(sh)
    prim = primitives(pres)
    if prim.rank != r:
        raise RoundTripFailure(f"M_q has rank {prim.rank}, expected {r}",
                               witness=prim.rank)
    U = np.zeros((r, r, A.k), dtype=np.int64)
    lin = [pres.index[tuple(1 if t == i else 0 for t in range(r))] for i in range(r)]
    for l in range(r):
        x = prim.basis[l]
        mask = np.ones(pres.size, dtype=bool)
        mask[lin] = False
        if np.any(x[mask]):
            raise RoundTripFailure("a primitive is not linear in the X_i", witness=l)
        for i in range(r):
            U[i, l] = x[lin[i]]
    try:
        alg.matrix_inverse(A, U)
    except Exception as exc:
        raise RoundTripFailure("change of basis is not invertible") from exc
    ok = np.array_equal(alg.matmul(A, U, prim.frobenius),
                        alg.matmul(A, sh.matrix, A.frob(U)))
    if not ok:
        raise RoundTripFailure("recovered Frobenius is not conjugate to T")
    return RoundTripCertificate(U, prim.frobenius, sh.matrix, ok)


# -- balancedness ----------------------------------------------------------------

class BalancedReport:
    def __init__(self, balanced, dims, failing=None):
        self.balanced = balanced
        self.dims = dims
        self.failing = failing

    def as_dict(self):
        return {"balanced": self.balanced, "eigenspace_ranks": self.dims,
                "failing_index": self.failing}

    def __repr__(self):
        return f"BalancedReport({self.as_dict()})"


def balanced_check(pres: Presentation) -> BalancedReport:
    """Decompose the p-primitives into eigenspaces
    {m : [a] m = a^(p^i) m} and test that m -> m^p is bijective from the
    i-th to the (i+1)-th eigenspace for i = 0 .. e-2."""
    A = pres.algebra
    F = A.field
    p, e = F.p, F.e
    spaces = []
    for i in range(e):
        gens, _, free = _module_from_conditions(pres, _primitive_conditions(pres, p ** i))
        spaces.append((gens, free))
    dims = [int(g.shape[0]) for g, _ in spaces]
    for i in range(e - 1):
        gi, fi = spaces[i]
        gj, fj = spaces[i + 1]
        if not (fi and fj) or gi.shape[0] != gj.shape[0]:
            return BalancedReport(False, dims, i)
        s = gi.shape[0]
        if s == 0:
            continue
        M = np.zeros((s, s, A.k), dtype=np.int64)
        try:
            for l in range(s):
                M[:, l] = _coordinates(pres, gj, pres.power(gi[l], p))
            alg.matrix_inverse(A, M)
        except Exception:
            return BalancedReport(False, dims, i)
    return BalancedReport(True, dims, None)


# -- univariate presentations and deformations ------------------------------------

def univariate(A: FdAlgebra, f, comult, actions, name="X"):
    """R[X]/(f) for a monic f given as a coefficient list (low degree first,
    entries are elements of A).  `comult` is a poly in (X, Y); `actions` maps
    a in F_q to a poly in X."""
    f = [np.asarray(c, dtype=np.int64) for c in f]
    n = len(f) - 1
    if n < 1 or not np.array_equal(f[-1], A.one()):
        raise InvalidHopfData("f must be monic of positive degree")
    rep = {}
    for i in range(n):
        add_term(A, rep, (i,), A.neg(f[i]))
    pres = Presentation(A, 1, n, [rep], [comult], {a: [img] for a, img in actions.items()},
                        names=[name])
    pres.f = f
    return pres


def _poly1(A, coeffs):
    out = {}
    for i, c in enumerate(coeffs):
        add_term(A, out, (i,), c)
    return out


def _fq(A, a):
    return A.scalar(a)


def additive_comult(A):
    return poly_add(A, var(A, 2, 0), var(A, 2, 1))


def scalar_actions(A, nvars=1):
    return {a: {(1,): A.scalar(a)} if a else {} for a in range(A.q)}


def alpha_q(A: FdAlgebra):
    """alpha_q = ker(Frobenius) on G_a, f = X^q."""
    f = [A.zero()] * A.q + [A.one()]
    return univariate(A, f, additive_comult(A), scalar_actions(A))


def alpha_p(A: FdAlgebra):
    """alpha_p with the scalar F_q-action, f = X^p."""
    p = A.field.p
    f = [A.zero()] * p + [A.one()]
    return univariate(A, f, additive_comult(A), scalar_actions(A))


def constant_fq(A: FdAlgebra):
    """The constant group F_q, f = X^q - X."""
    f = [A.zero()] * (A.q + 1)
    f[1] = A.neg(A.one())
    f[-1] = A.one()
    return univariate(A, f, additive_comult(A), scalar_actions(A))


class DeformationPair:
    """A^flat = R[X]/(f X) deforming A = R[X]/(f) with the order-one
    thickening along the augmentation ideal, and lifts [a]^flat(X)."""

    def __init__(self, base: Presentation, flat_actions):
        if base.nvars != 1 or not hasattr(base, "f"):
            raise InvalidHopfData("deformation pairs need a univariate presentation")
        self.base = base
        A = base.algebra
        self.algebra = A
        self.f = _poly1(A, base.f)
        n = len(base.f) - 1
        self.n = n
        fX = {(e[0] + 1,): c for e, c in self.f.items()}
        rep = {m: A.neg(c) for m, c in fX.items() if m != (n + 1,)}
        self.rewriter = Rewriter(A, 1, [((n + 1,), rep)])
        self.flat_actions = {int(a): dict(p) for a, p in flat_actions.items()}

    def differential(self):
        """d: N = R f -> t* = R X, f -> (linear coefficient of f) X."""
        return self.f.get((1,), self.algebra.zero())


def canonical_deformation(base: Presentation):
    """The lift [a]^flat(X) = a X."""
    A = base.algebra
    return DeformationPair(base, scalar_actions(A))


class StrictnessReport:
    def __init__(self, strict, n_action, t_action, differential, witness=None):
        self.strict = strict
        self.n_action = n_action
        self.t_action = t_action
        self.differential = differential
        self.witness = witness

    def as_dict(self):
        return {"strict": self.strict, "N_action": self.n_action,
                "t_action": self.t_action, "differential": self.differential,
                "witness": self.witness}

    def __repr__(self):
        return f"StrictnessReport({self.as_dict()})"


def strictness_check(pair: DeformationPair) -> StrictnessReport:
    """The action on N = (f)/(f X) is the scalar c with f([a]X) = c f in
    A^flat; strict means c = a for every a in F_q."""
    A = pair.algebra
    F = A.field
    rw = pair.rewriter
    n = pair.n
    n_action, t_action = {}, {}
    witness = None
    for a in range(F.q):
        img = pair.flat_actions.get(a)
        if img is None:
            raise NotALift(f"no lift given for [{a}]", witness=a)
        if np.any(img.get((0,), A.zero())):
            raise NotALift(f"[{a}] does not preserve the augmentation", witness=a)
        base_img = pair.base.action_images[a][0]
        if pair.base.to_vector(poly_sub(A, img, base_img)).any():
            raise NotALift(f"[{a}] on A^flat does not reduce to [{a}] on A", witness=a)
        g = rw.substitute(pair.f, [img])
        c = g.get((n,), A.zero())
        rest = poly_sub(A, g, {m: A.mul(c, v) for m, v in pair.f.items()})
        if rw.reduce(rest):
            raise NotALift(f"[{a}] does not preserve the ideal (f)/(fX)",
                           witness=format_poly(A, rw.reduce(rest), ["X"]))
        n_action[a] = A.format(c)
        t_action[a] = A.format(img.get((1,), A.zero()))
        if witness is None and not A.equal(c, A.scalar(a)):
            witness = {"a": F.format(a), "N_action": A.format(c),
                       "expected": F.format(a)}
    return StrictnessReport(witness is None, n_action, t_action,
                            A.format(pair.differential()), witness)


def drinfeld_strictness(pres: Presentation) -> StrictnessReport:
    """Strictness of the canonical deformation of Dr_q(M): A^flat is
    R[X]/(I I_0) with I = (g_j), g_j = X_j^q - sum_i t_ij X_i, and
    [a]^flat(X_i) = a X_i.  N is free on the g_j."""
    A = pres.algebra
    F = A.field
    r, q = pres.nvars, pres.bound
    sh = pres.shtuka
    rules = []
    for j in range(r):
        for i in range(r):
            lead = [0] * r
            lead[j] += q
            lead[i] += 1
            rep = {}
            for l in range(r):
                e = [0] * r
                e[l] += 1
                e[i] += 1
                add_term(A, rep, tuple(e), sh.matrix[l, j])
            rules.append((lead, rep))
    rw = Rewriter(A, r, rules)
    gens = []
    for j in range(r):
        g = {tuple(q if t == j else 0 for t in range(r)): A.one()}
        for i in range(r):
            add_term(A, g, tuple(1 if t == i else 0 for t in range(r)), A.neg(sh.matrix[i, j]))
        gens.append(g)
    n_action, t_action, witness = {}, {}, None
    for a in range(F.q):
        imgs = [var(A, r, i, A.scalar(a)) if a else {} for i in range(r)]
        C = np.zeros((r, r, A.k), dtype=np.int64)
        for j in range(r):
            P = rw.substitute(gens[j], imgs)
            rest = dict(P)
            for l in range(r):
                c = P.get(tuple(q if t == l else 0 for t in range(r)), A.zero())
                C[l, j] = c
                rest = poly_sub(A, rest, {m: A.mul(c, v) for m, v in gens[l].items()})
            if rw.reduce(rest):
                raise NotALift("canonical action does not preserve I", witness=a)
        expected = np.zeros((r, r, A.k), dtype=np.int64)
        for i in range(r):
            expected[i, i] = A.scalar(a)
        n_action[a] = [[A.format(C[i, j]) for j in range(r)] for i in range(r)]
        t_action[a] = F.format(a)
        if witness is None and not np.array_equal(C, expected):
            witness = {"a": F.format(a), "N_action": n_action[a]}
    diff = [[A.format(A.neg(sh.matrix[i, j])) for j in range(r)] for i in range(r)]
    return StrictnessReport(witness is None, n_action, t_action, diff, witness)


class MuPObstruction:
    def __init__(self, p, witness, zero_on_base):
        self.p = p
        self.witness = witness
        self.zero_on_base = zero_on_base

    @property
    def obstructed(self):
        return self.witness != "0"

    def as_dict(self):
        return {"p": self.p, "[p]_flat(Y)": self.witness,
                "[p](Y) on A": "0" if self.zero_on_base else "nonzero",
                "obstructed": self.obstructed}

    def __repr__(self):
        return f"MuPObstruction({self.as_dict()})"


def mu_p_presentation(A: FdAlgebra):
    """mu_p in the variable Y = X - 1: f = Y^p and
    Delta(Y) = Y (x) 1 + 1 (x) Y + Y (x) Y; [n](Y) = (1 + Y)^n - 1."""
    p = A.field.p
    f = [A.zero()] * p + [A.one()]
    d = poly_add(A, additive_comult(A), {(1, 1): A.one()})
    acts = {}
    rw = Rewriter(A, 1, [((p,), {})])
    for n in range(p):
        one_plus = {(0,): A.one(), (1,): A.one()}
        acts[n] = poly_sub(A, rw.power(one_plus, n), {(0,): A.one()})
    return univariate(A, f, d, {}, name="Y"), acts


def mu_p_obstruction(A: FdAlgebra) -> MuPObstruction:
    """The group law forces [n](X) = X^n; on the deformation R[Y]/(Y^(p+1))
    the element [p](Y) = (1 + Y)^p - 1 = Y^p is nonzero, while an F_p-module
    structure needs [p] = [0], i.e. [p](Y) = 0."""
    p = A.field.p
    flat = Rewriter(A, 1, [((p + 1,), {})])
    base = Rewriter(A, 1, [((p,), {})])
    one_plus = {(0,): A.one(), (1,): A.one()}
    on_flat = poly_sub(A, flat.power(one_plus, p), {(0,): A.one()})
    on_base = poly_sub(A, base.power(one_plus, p), {(0,): A.one()})
    return MuPObstruction(p, format_poly(A, on_flat, ["Y"]), not on_base)
