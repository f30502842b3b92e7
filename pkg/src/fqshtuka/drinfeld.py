"""Finite group schemes attached to finite shtukas.

The coordinate ring of Dr_q(M) is R[X_1..X_r] / (X_j^q - sum_i t_ij X_i)
with X_i additive and [a] X_i = a X_i.  Its points over an R-algebra T are
the h in T^r with h_j^q = sum_i phi(t_ij) h_i, an F_q-linear condition.
"""
from __future__ import annotations

import itertools

import numpy as np

from . import algebra as alg
from . import field as fl
from .algebra import AlgebraHom, FdAlgebra
from .errors import AlgebraMismatch, BudgetExceeded, ShtukaError

MAX_BASIS = 6561  # q^(2r) budget for tensor-square computations


# -- sparse polynomials with a rewriting system ------------------------------

class Rewriter:
    """Normal forms of polynomials over R modulo rules lead -> replacement.

    Polynomials are dicts {exponent tuple: coordinate array}.  Every rule
    must strictly lower the total degree, which guarantees termination.
    """

    def __init__(self, algebra: FdAlgebra, nvars: int, rules):
        self.A = algebra
        self.nvars = nvars
        self.rules = [(tuple(lead), dict(rep)) for lead, rep in rules]
        self._cache = {}

    def _find_rule(self, m):
        for lead, rep in self.rules:
            if all(a >= b for a, b in zip(m, lead)):
                return lead, rep
        return None

    def nf_monomial(self, m):
        m = tuple(m)
        if m in self._cache:
            return self._cache[m]
        hit = self._find_rule(m)
        if hit is None:
            out = {m: self.A.one()}
        else:
            lead, rep = hit
            rest = tuple(a - b for a, b in zip(m, lead))
            out = {}
            for e, c in rep.items():
                mono = tuple(a + b for a, b in zip(rest, e))
                for e2, c2 in self.nf_monomial(mono).items():
                    add_term(self.A, out, e2, self.A.mul(c, c2))
        self._cache[m] = out
        return out

    def reduce(self, poly):
        out = {}
        for m, c in poly.items():
            if not np.any(c):
                continue
            for e, c2 in self.nf_monomial(m).items():
                add_term(self.A, out, e, self.A.mul(c, c2))
        return out

    def mul(self, p1, p2):
        raw = {}
        for m1, c1 in p1.items():
            for m2, c2 in p2.items():
                add_term(self.A, raw, tuple(a + b for a, b in zip(m1, m2)),
                         self.A.mul(c1, c2))
        return self.reduce(raw)

    def power(self, p, n):
        out = {tuple([0] * self.nvars): self.A.one()}
        base = p
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def substitute(self, poly, images):
        """poly(images[0], ..., images[nvars-1]) reduced by this rewriter;
        `images` are polynomials in this rewriter's variables."""
        out = {}
        for m, c in poly.items():
            term = {tuple([0] * self.nvars): c}
            for v, e in enumerate(m):
                if e:
                    term = self.mul(term, self.power(images[v], e))
            for e2, c2 in term.items():
                add_term(self.A, out, e2, c2)
        return out


def add_term(A, poly, m, c):
    if not np.any(c):
        return
    if m in poly:
        s = A.add(poly[m], c)
        if np.any(s):
            poly[m] = s
        else:
            del poly[m]
    else:
        poly[m] = np.asarray(c, dtype=np.int64)


def var(A, nvars, i, coeff=None):
    e = [0] * nvars
    e[i] = 1
    return {tuple(e): A.one() if coeff is None else np.asarray(coeff)}


def const_poly(A, nvars, c):
    if not np.any(c):
        return {}
    return {tuple([0] * nvars): np.asarray(c, dtype=np.int64)}


def poly_add(A, p1, p2):
    out = dict(p1)
    for m, c in p2.items():
        add_term(A, out, m, c)
    return out


def poly_sub(A, p1, p2):
    out = dict(p1)
    for m, c in p2.items():
        add_term(A, out, m, A.neg(c))
    return out


def poly_scale(A, c, p):
    out = {}
    for m, v in p.items():
        add_term(A, out, m, A.mul(c, v))
    return out


def embed(poly, nvars, offset):
    """Rename variables i -> i + offset inside nvars variables."""
    out = {}
    for m, c in poly.items():
        e = [0] * nvars
        for i, x in enumerate(m):
            e[i + offset] = x
        out[tuple(e)] = c
    return out


def format_poly(A, poly, names):
    if not poly:
        return "0"
    terms = []
    for m in sorted(poly, key=lambda e: (sum(e), e)):
        c = A.format(poly[m])
        mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e)
        if not mono:
            terms.append(c)
        elif c == "1":
            terms.append(mono)
        else:
            terms.append(f"({c})*{mono}" if "+" in c else f"{c}*{mono}")
    return " + ".join(terms)


# -- presented Hopf algebras ---------------------------------------------------

class Presentation:
    """A finite R-algebra R[X_1..X_r] / (X_j^b - rep_j) with a free monomial
    basis (exponents < b), a comultiplication Delta(X_j) in the variables
    (X, Y) = (X (x) 1, 1 (x) X) and F_q-actions [a](X_j).

    rep_j must have total degree < b in every monomial so that the rules
    lower the degree.
    """

    def __init__(self, algebra: FdAlgebra, nvars: int, bound: int, replacements,
                 comult, actions, names=None):
        self.algebra = algebra
        self.nvars = nvars
        self.bound = bound
        self.replacements = [dict(r) for r in replacements]
        self.comult_images = [dict(c) for c in comult]
        self.action_images = {int(a): [dict(x) for x in imgs] for a, imgs in actions.items()}
        self.names = names or ([f"X{i + 1}" for i in range(nvars)] if nvars > 1 else ["X"])
        rules = []
        for j, rep in enumerate(self.replacements):
            lead = [0] * nvars
            lead[j] = bound
            rules.append((lead, rep))
        self.rewriter = Rewriter(algebra, nvars, rules)
        rules2 = [(tuple(l) + (0,) * nvars, embed(r, 2 * nvars, 0)) for l, r in rules] + \
                 [((0,) * nvars + tuple(l), embed(r, 2 * nvars, nvars)) for l, r in rules]
        self.tensor_rewriter = Rewriter(algebra, 2 * nvars, rules2)
        self.basis = list(itertools.product(range(bound), repeat=nvars))
        self.index = {m: i for i, m in enumerate(self.basis)}
        self._delta = None

    @property
    def size(self):
        return len(self.basis)

    # conversions
    def to_vector(self, poly):
        v = np.zeros((self.size, self.algebra.k), dtype=np.int64)
        for m, c in self.rewriter.reduce(poly).items():
            v[self.index[m]] = c
        return v

    def from_vector(self, v):
        return {self.basis[i]: v[i].copy() for i in range(self.size) if np.any(v[i])}

    def tensor_to_vector(self, poly):
        n = self.size
        v = np.zeros((n * n, self.algebra.k), dtype=np.int64)
        for m, c in self.tensor_rewriter.reduce(poly).items():
            i = self.index[m[: self.nvars]]
            j = self.index[m[self.nvars:]]
            v[i * n + j] = c
        return v

    def mul(self, x, y):
        return self.to_vector(self.rewriter.mul(self.from_vector(x), self.from_vector(y)))

    def power(self, x, n):
        return self.to_vector(self.rewriter.power(self.from_vector(x), n))

    def generator(self, i):
        return self.to_vector(var(self.algebra, self.nvars, i))

    def delta_monomials(self):
        """Delta(X^m) for every basis monomial, as sparse tensor polynomials."""
        if self._delta is None:
            if self.size ** 2 > MAX_BASIS:
                raise BudgetExceeded(
                    f"tensor square has {self.size ** 2} basis monomials, over {MAX_BASIS}")
            tw = self.tensor_rewriter
            imgs = [tw.reduce(c) for c in self.comult_images]
            out = []
            for m in self.basis:
                out.append(tw.substitute({m: self.algebra.one()}, imgs))
            self._delta = out
        return self._delta

    def comult(self, x):
        """Delta(x) as a vector in the tensor basis (i, j) -> i * size + j."""
        A = self.algebra
        out = {}
        for m, c in self.from_vector(x).items():
            for e, d in self.delta_monomials()[self.index[m]].items():
                add_term(A, out, e, A.mul(c, d))
        return self.tensor_to_vector(out)

    def action(self, a, x):
        imgs = self.action_images[int(a)]
        return self.to_vector(self.rewriter.substitute(self.from_vector(x), imgs))

    def linear_map_matrix(self, fn, out_size):
        """F_q-matrix of an R-linear map given on vectors (columns indexed by
        (monomial, basis of R))."""
        A = self.algebra
        k = A.k
        cols = []
        for i in range(self.size):
            for l in range(k):
                v = np.zeros((self.size, k), dtype=np.int64)
                v[i, l] = 1
                cols.append(fn(v).reshape(-1))
        M = np.stack(cols, axis=1)
        assert M.shape[0] == out_size * k
        return M

    def validate(self):
        """Check that Delta and the actions respect the relations, plus
        counit, coassociativity and multiplicativity of the action."""
        A = self.algebra
        r = self.nvars
        tw = self.tensor_rewriter
        problems = []
        d_imgs = [tw.reduce(c) for c in self.comult_images]
        for j, rep in enumerate(self.replacements):
            lead = {tuple(self.bound if i == j else 0 for i in range(r)): A.one()}
            rel = poly_sub(A, lead, rep)
            if tw.substitute(rel, d_imgs):
                problems.append(("comultiplication preserves relations", self.names[j]))
            for a, imgs in self.action_images.items():
                if self.rewriter.substitute(rel, imgs):
                    problems.append(("action preserves relations", (a, self.names[j])))
        zero_y = [var(A, r, i) for i in range(r)] + [{} for _ in range(r)]
        zero_x = [{} for _ in range(r)] + [var(A, r, i) for i in range(r)]
        for j, c in enumerate(self.comult_images):
            x_only = self.rewriter.substitute(c, zero_y)
            y_only = self.rewriter.substitute(c, zero_x)
            if self.to_vector(poly_sub(A, x_only, var(A, r, j))).any() or \
                    self.to_vector(poly_sub(A, y_only, var(A, r, j))).any():
                problems.append(("counit", self.names[j]))
        # coassociativity in three sets of variables
        rules3 = []
        for blk in range(3):
            for j in range(r):
                lead = [0] * (3 * r)
                lead[blk * r + j] = self.bound
                rules3.append((lead, embed(self.replacements[j], 3 * r, blk * r)))
        three = Rewriter(A, 3 * r, rules3)
        V = [[var(A, 3 * r, blk * r + i) for i in range(r)] for blk in range(3)]
        d01 = [three.substitute(embed(ci, 3 * r, 0), V[0] + V[1] + V[2]) for ci in self.comult_images]
        d12 = [three.substitute(embed(ci, 3 * r, 0), V[1] + V[2] + V[0]) for ci in self.comult_images]
        for j, c in enumerate(self.comult_images):
            left = three.substitute(embed(c, 3 * r, 0), d01 + V[2] + V[0])
            right = three.substitute(embed(c, 3 * r, 0), V[0] + d12 + V[2])
            if poly_sub(A, left, right):
                problems.append(("coassociative", self.names[j]))
        F = A.field
        for a in self.action_images:
            for b in self.action_images:
                ab = int(F.mul(a, b))
                if ab not in self.action_images:
                    continue
                lhs = [self.rewriter.substitute(x, self.action_images[a]) for x in self.action_images[b]]
                for j in range(r):
                    if self.to_vector(poly_sub(A, lhs[j], self.action_images[ab][j])).any():
                        problems.append(("action is multiplicative", (a, b)))
        return problems


def presentation(sh) -> Presentation:
    """Coordinate ring of Dr_q(M): relations X_j^q = sum_i t_ij X_i."""
    from .shtuka import FiniteShtuka, TruncatedShtuka
    if isinstance(sh, TruncatedShtuka):
        sh = sh.as_finite()
    if not isinstance(sh, FiniteShtuka):
        raise ShtukaError("presentation needs a finite shtuka")
    A = sh.algebra
    r, q = sh.rank, A.q
    reps = []
    for j in range(r):
        rep = {}
        for i in range(r):
            add_term(A, rep, tuple(1 if t == i else 0 for t in range(r)), sh.matrix[i, j])
        reps.append(rep)
    comult = [poly_add(A, var(A, 2 * r, i), var(A, 2 * r, r + i)) for i in range(r)]
    actions = {a: [var(A, r, i, A.scalar(a)) if a else {} for i in range(r)]
               for a in range(q)}
    pres = Presentation(A, r, q, reps, comult, actions)
    pres.shtuka = sh
    return pres


class OrderCertificate:
    def __init__(self, order, monomials, closed):
        self.order = order
        self.monomials = monomials
        self.closed = closed

    def __repr__(self):
        return f"OrderCertificate(order={self.order}, closed={self.closed})"


def order(pres: Presentation) -> OrderCertificate:
    """Rank of the coordinate ring: the number of monomials with all
    exponents below the bound, certified by checking that every product of
    two basis monomials reduces into their span."""
    A = pres.algebra
    closed = True
    for m1 in pres.basis:
        for m2 in pres.basis:
            prod = pres.rewriter.reduce({tuple(a + b for a, b in zip(m1, m2)): A.one()})
            if any(e not in pres.index for e in prod):
                closed = False
    return OrderCertificate(len(pres.basis), list(pres.basis), closed)


def normal_form(pres: Presentation, poly):
    return pres.to_vector(poly)


def comult(pres: Presentation, x):
    return pres.comult(x)


# -- test algebras and points --------------------------------------------------

class TestAlgebra:
    """An R-algebra T (with structure map phi: R -> T) used to probe points."""

    __test__ = False  # not a pytest class

    def __init__(self, name, algebra: FdAlgebra, structure: AlgebraHom):
        self.name = name
        self.algebra = algebra
        self.structure = structure

    @property
    def is_field(self):
        return self.algebra.is_field()

    def __repr__(self):
        return f"TestAlgebra({self.name}, dim={self.algebra.k})"


_CATALOG = {}


def catalog(R: FdAlgebra, max_degree=6, max_eps=4):
    """Residue field extensions k^(m) (m <= max_degree), k[e]/(e^n)
    (n <= max_eps), their composites k^(2)[e]/(e^2), R itself and
    R[e]/(e^2)."""
    key = (id(R), max_degree, max_eps)
    if key in _CATALOG and _CATALOG[key][0] is R:
        return _CATALOG[key][1]
    F = R.field
    res = alg.residue_field(R)
    k, proj = res.algebra, res.projection
    out = [TestAlgebra("R", R, AlgebraHom.identity(R))]
    for m in range(1, max_degree + 1):
        L, inc = alg.extension_tower(k, m)
        name = "k" if m == 1 else f"k^({m})"
        out.append(TestAlgebra(name, L, inc.compose(proj)))
    for n in range(2, max_eps + 1):
        E = alg.truncated_polynomial(F, n, "e")
        T, ia, _ = alg.tensor(k, E)
        out.append(TestAlgebra(f"k[e]/(e^{n})", T, ia.compose(proj)))
    L2, inc2 = alg.extension_tower(k, 2)
    E2 = alg.truncated_polynomial(F, 2, "e")
    T, ia, _ = alg.tensor(L2, E2)
    out.append(TestAlgebra("k^(2)[e]/(e^2)", T, ia.compose(inc2.compose(proj))))
    T, ia, _ = alg.tensor(R, E2)
    out.append(TestAlgebra("R[e]/(e^2)", T, ia))
    _CATALOG[key] = (R, out)
    return out


def catalog_fields(R: FdAlgebra, max_degree=6):
    return [t for t in catalog(R, max_degree) if t.name == "k" or t.name.startswith("k^(") and "[" not in t.name]


def field_extension_test_algebra(R: FdAlgebra, m: int) -> TestAlgebra:
    """F_{q^(k m)} over a field R = F_{q^k}."""
    if not R.is_field():
        raise ShtukaError("base must be a field")
    L, inc = alg.extension_tower(R, m)
    return TestAlgebra(f"R^({m})", L, inc)


class PointModule:
    """F_q-subspace of T^(rank) (rows of `basis`, flattened) of T-points,
    with the z-action when the source is a truncation."""

    def __init__(self, test_algebra, rank, basis, z_action=None):
        self.test_algebra = test_algebra
        self.rank = rank
        self.basis = basis
        self.z_action = z_action

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def count(self):
        return self.test_algebra.algebra.q ** self.dim

    def __repr__(self):
        return f"PointModule({self.test_algebra.name}: q^{self.dim} points)"


def points_system(sh, test: TestAlgebra):
    """F_q-matrix of Phi(h)_j = h_j^q - sum_i phi(t_ij) h_i on T^r."""
    from .shtuka import TruncatedShtuka
    matrix = sh.matrix
    R = sh.algebra
    if not test.structure.source.same_as(R):
        raise AlgebraMismatch("test algebra is not an algebra over the base")
    T = test.algebra
    r, kT = matrix.shape[0], T.k
    img = test.structure(matrix)  # (r, r, kT)
    frob = T.frobenius_matrix
    M = np.zeros((r * kT, r * kT), dtype=np.int64)
    F = T.field
    for j in range(r):
        for i in range(r):
            blk = F.neg(T.mulmat(img[i, j])) if np.any(img[i, j]) else np.zeros((kT, kT), dtype=np.int64)
            if i == j:
                blk = F.add(blk, frob)
            M[j * kT:(j + 1) * kT, i * kT:(i + 1) * kT] = blk
    return M


def points(sh, test: TestAlgebra) -> PointModule:
    """T-points of Dr_q(M) (or of a truncation, with its z-action)."""
    from .shtuka import TruncatedShtuka
    M = points_system(sh, test)
    basis = fl.kernel(test.algebra.field, M)
    z = None
    if isinstance(sh, TruncatedShtuka):
        z = point_z_action(sh, test)
    return PointModule(test, sh.matrix.shape[0], basis, z)


def point_z_action(trunc, test: TestAlgebra):
    """F_q-matrix of h -> h o z on T^(rn): (h o z)_j = sum_i Z_ij h_i."""
    T = test.algebra
    Z = trunc.z_action[:, :, 0]  # 0/1 entries
    n = Z.shape[0]
    kT = T.k
    out = np.zeros((n * kT, n * kT), dtype=np.int64)
    eye = np.eye(kT, dtype=np.int64)
    for j in range(n):
        for i in range(n):
            if Z[i, j]:
                out[j * kT:(j + 1) * kT, i * kT:(i + 1) * kT] = eye * Z[i, j]
    return out


class RadicialReport:
    def __init__(self, nilpotent, trivial_points, counts):
        self.nilpotent = nilpotent
        self.trivial_points = trivial_points
        self.counts = counts

    @property
    def agree(self):
        return self.nilpotent == self.trivial_points

    def as_dict(self):
        return {"nilpotent": self.nilpotent, "trivial_points": self.trivial_points,
                "counts": self.counts, "agree": self.agree}

    def __repr__(self):
        return f"RadicialReport({self.as_dict()})"


def radicial_check(sh, max_degree=6) -> RadicialReport:
    """Dr_q(M) is radicial iff F is nilpotent; compared with the point
    counts over the catalog fields."""
    from .shtuka import nilpotence_checks, TruncatedShtuka
    fin = sh.as_finite() if isinstance(sh, TruncatedShtuka) else sh
    nil = nilpotence_checks(fin).is_nilpotent
    counts = {}
    for t in catalog_fields(fin.algebra, max_degree):
        counts[t.name] = points(fin, t).count
    trivial = all(c == 1 for c in counts.values())
    return RadicialReport(nil, trivial, counts)
