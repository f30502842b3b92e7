"""Random rings, shtukas and series for property tests and the suites.

Everything takes a numpy Generator so runs are reproducible from a seed.
"""
from __future__ import annotations

import numpy as np

from . import algebra as alg
from . import field as fl
from .algebra import FdAlgebra
from .errors import NotAUnit
from .shtuka import FiniteShtuka, LocalShtuka
from .zseries import ZMatrix, ZSeries


def rng_for(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


_RING_CACHE = {}


def ring(name: str, q: int, zeta=None) -> FdAlgebra:
    """Named small local rings: "Fq", "Fq^m", "Fq[e]/e^n", "Fq[u,v]/(u^2,v^2,uv)",
    "Fq^2[e]/e^2".  Cached so that repeated calls share test catalogs."""
    key = (name, q, None if zeta is None else str(zeta))
    if key in _RING_CACHE:
        return _RING_CACHE[key]
    F = fl.field_for(q)
    if name == "Fq":
        A = alg.base_algebra(F)
    elif name.startswith("Fq^") and "[" not in name:
        A = alg.finite_field_algebra(F, int(name[3:]))
    elif name.startswith("Fq[e]/e^"):
        A = alg.truncated_polynomial(F, int(name[8:]), "e", zeta=zeta)
    elif name == "Fq[u,v]/(u^2,v^2,uv)":
        A = alg.bivariate_truncated(F, 2, 2, zeta=zeta)
    elif name == "Fq^2[e]/e^2":
        L = alg.finite_field_algebra(F, 2)
        A, _, _ = alg.tensor(L, alg.truncated_polynomial(F, 2, "e"))
        if zeta is not None:
            A = alg.with_zeta(A, zeta)
    else:
        raise ValueError(f"unknown ring {name!r}")
    _RING_CACHE[key] = A
    return A


def small_rings(q: int, max_dim: int):
    """Local rings of F_q-dimension <= max_dim from the named list."""
    names = ["Fq", "Fq^2", "Fq[e]/e^2", "Fq^3", "Fq[e]/e^3", "Fq^4",
             "Fq[e]/e^4", "Fq[u,v]/(u^2,v^2,uv)", "Fq^2[e]/e^2"]
    dims = {"Fq": 1, "Fq^2": 2, "Fq[e]/e^2": 2, "Fq^3": 3, "Fq[e]/e^3": 3,
            "Fq^4": 4, "Fq[e]/e^4": 4, "Fq[u,v]/(u^2,v^2,uv)": 3, "Fq^2[e]/e^2": 4}
    return [ring(n, q) for n in names if dims[n] <= max_dim]


def random_ring(rng, q, max_dim, zeta_zero=False):
    """A random small local ring, with zeta a random nilpotent unless
    zeta_zero is set."""
    choices = small_rings(q, max_dim)
    A = choices[rng.integers(len(choices))]
    if zeta_zero or A.is_field():
        return A
    rad = A.nilradical
    coeffs = rng.integers(0, A.field.q, rad.shape[0])
    z = A.field.sum(A.field.mul(coeffs[:, None], rad), axis=0) if rad.shape[0] else A.zero()
    return alg.with_zeta(A, z)


def random_element(rng, A: FdAlgebra):
    return rng.integers(0, A.field.q, A.k).astype(np.int64)


def random_matrix(rng, A: FdAlgebra, r, c=None):
    c = r if c is None else c
    return rng.integers(0, A.field.q, (r, c, A.k)).astype(np.int64)


def random_invertible(rng, A: FdAlgebra, r, tries=200):
    for _ in range(tries):
        M = random_matrix(rng, A, r)
        if A.is_unit(alg.det(A, M)):
            return M
    raise NotAUnit("no invertible matrix found")  # pragma: no cover


def random_finite_shtuka(rng, A: FdAlgebra, r: int) -> FiniteShtuka:
    return FiniteShtuka(A, random_matrix(rng, A, r))


def random_etale_shtuka(rng, A: FdAlgebra, r: int) -> FiniteShtuka:
    return FiniteShtuka(A, random_invertible(rng, A, r))


def random_series(rng, A: FdAlgebra, N: int) -> ZSeries:
    return ZSeries(A, rng.integers(0, A.field.q, (N, A.k)))


def random_invertible_series_matrix(rng, A, r, N, degree=2):
    """Invertible constant term plus random terms of z-degree <= degree."""
    data = np.zeros((r, r, N, A.k), dtype=np.int64)
    data[:, :, 0] = random_invertible(rng, A, r)
    for n in range(1, min(degree + 1, N)):
        data[:, :, n] = random_matrix(rng, A, r)
    return ZMatrix(A, data)


def random_effective_local(rng, A: FdAlgebra, r: int, N: int, max_exponent=1,
                           exponents=None) -> LocalShtuka:
    """P diag((z - zeta)^a_i) Q with random invertible P, Q over R[[z]].
    (z - zeta)^max(a) then kills coker F."""
    if exponents is None:
        exponents = [int(rng.integers(0, max_exponent + 1)) for _ in range(r)]
    P = random_invertible_series_matrix(rng, A, r, N)
    Q = random_invertible_series_matrix(rng, A, r, N)
    D = np.zeros((r, r, N, A.k), dtype=np.int64)
    for i, a in enumerate(exponents):
        D[i, i] = ZSeries.z_minus_zeta(A, N, a).coeffs
    return LocalShtuka(A, P @ ZMatrix(A, D) @ Q)


def random_divisible(rng, A: FdAlgebra, N: int, d: int):
    """y = (z - zeta)^d x for random x; returns (y, x)."""
    x = random_series(rng, A, N)
    return x * ZSeries.z_minus_zeta(A, N, d), x
