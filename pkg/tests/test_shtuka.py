import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqshtuka import algebra as alg
from fqshtuka import field as fl
from fqshtuka import generators as gen
from fqshtuka import shtuka as shm
from fqshtuka.errors import NotAnnihilated, NotSquare
from fqshtuka.shtuka import FiniteShtuka, LocalShtuka
from fqshtuka.zseries import ZMatrix, ZSeries, parse_series

from conftest import mat

N = 10


def local(A, rows, twist=0, n=N):
    M = ZMatrix.from_entries(A, [[parse_series(A, e, n) for e in row] for row in rows])
    return LocalShtuka(A, M, twist)


def test_iterate_nilpotent(F2):
    A = alg.base_algebra(F2)
    sh = FiniteShtuka(A, mat(A, [["0", "1"], ["0", "0"]]))
    assert not np.any(shm.iterate_frobenius(sh, 2))


def test_iterate_over_f4(F4):
    A = alg.base_algebra(F4)
    sh = FiniteShtuka(A, mat(A, [["w"]]))
    w = F4.generator()
    assert shm.iterate_frobenius(sh, 2)[0, 0, 0] == F4.mul(w, w)


def test_non_square_rejected(F2):
    A = alg.base_algebra(F2)
    with pytest.raises(NotSquare):
        FiniteShtuka(A, np.zeros((2, 1, 1), dtype=np.int64))


def test_decompose_small(F2):
    A = alg.base_algebra(F2)
    dec = shm.decompose_etale_nilpotent(FiniteShtuka(A, mat(A, [["1", "1"], ["0", "0"]])))
    assert (dec.etale.rank, dec.nilpotent.rank) == (1, 1)
    assert shm.nilpotence_checks(dec.etale).is_etale
    assert shm.nilpotence_checks(dec.nilpotent).is_nilpotent


def test_colie_of_eps(Reps0):
    cl = shm.colie(FiniteShtuka(Reps0, mat(Reps0, [["e"]])))
    assert (cl.omega_dim, cl.kernel_dim) == (1, 1)


def test_verschiebung_diag(Reps0):
    sh = local(Reps0, [["z", "0"], ["0", "z-e"]])
    V = shm.verschiebung(sh, 2)
    assert V.matrix == local(Reps0, [["z", "0"], ["0", "z-e"]], n=V.precision).matrix


def test_verschiebung_of_square_root_of_z(F2):
    # T^2 = z Id, so V = T itself
    A = alg.base_algebra(F2)
    sh = local(A, [["0", "z"], ["1", "0"]])
    V = shm.verschiebung(sh, 1)
    assert V.matrix == sh.matrix.truncate(V.precision)


def test_verschiebung_fails_below_bound(Reps0):
    sh = local(Reps0, [["z", "0"], ["0", "z-e"]])
    with pytest.raises(NotAnnihilated):
        shm.verschiebung(sh, 1)


def test_boundedness_epsilon_example(Reps0):
    sh = local(Reps0, [["z", "0"], ["0", "z-e"]])
    rep = shm.boundedness_check(sh, 2)
    assert not rep.bounded and rep.kills_coker
    assert rep.witness["residual"] == "e"
    assert shm.boundedness_check(local(Reps0, [["z", "0"], ["0", "z"]]), 2).bounded


def test_truncate_rank_one(F2):
    A = alg.base_algebra(F2)
    lev = shm.truncate(local(A, [["z"]]), 2)
    assert lev.matrix[:, :, 0].tolist() == [[0, 0], [1, 0]]


@pytest.mark.parametrize("rows,n,m,ranks", [
    ([["z"]], 1, 1, (1, 2, 1)),
    ([["0", "z"], ["1", "0"]], 1, 2, (2, 6, 4)),
])
def test_sequence_check(F2, rows, n, m, ranks):
    A = alg.base_algebra(F2)
    rep = shm.sequence_check(local(A, rows), n, m)
    assert rep.ranks == ranks and rep.ok


def test_tensor_scales(F2):
    A = alg.base_algebra(F2)
    t = shm.tensor(local(A, [["z"]]), local(A, [["0", "z"], ["1", "0"]]))
    assert t.matrix == local(A, [["0", "z^2"], ["z", "0"]]).matrix


def test_tate_objects(Reps):
    one = shm.tate_object(Reps, 1, N)
    assert one.matrix.entry(0, 0) == ZSeries.z_minus_zeta(Reps, N, 1)
    assert shm.tate_object(Reps, -2, N).twist == -2


def _image_size(A, T):
    r = T.shape[0]
    seen = set()
    for coords in itertools.product(range(A.q), repeat=r * A.k):
        v = np.array(coords, dtype=np.int64).reshape(r, A.k)
        seen.add(alg.matvec(A, T, v).tobytes())
    return len(seen)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_colie_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, 2, 3)
    r = int(rng.integers(1, 3))
    sh = gen.random_finite_shtuka(rng, A, r)
    cl = shm.colie(sh)
    total = r * A.k
    assert _image_size(A, sh.matrix) == 2 ** (total - cl.omega_dim)
    assert cl.kernel_dim == cl.omega_dim


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_conjugation_preserves_invariants(seed):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, int(rng.choice([2, 3])), 3)
    r = int(rng.integers(1, 3))
    sh = gen.random_finite_shtuka(rng, A, r)
    U = gen.random_invertible(rng, A, r)
    other = sh.conjugate(U)
    a, b = shm.nilpotence_checks(sh), shm.nilpotence_checks(other)
    assert (a.is_etale, a.is_nilpotent) == (b.is_etale, b.is_nilpotent)
    assert shm.colie(sh).omega_dim == shm.colie(other).omega_dim


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_local_verschiebung_property(seed):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, 2, 3)
    r = int(rng.integers(1, 3))
    exps = [int(rng.integers(0, 3)) for _ in range(r)]
    sh = gen.random_effective_local(rng, A, r, N, exponents=exps)
    d = max(exps)
    V = shm.verschiebung(sh, d)
    T = sh.matrix.truncate(V.precision)
    tgt = ZMatrix.scalar(ZSeries.z_minus_zeta(A, V.precision, d), r)
    assert T @ V.matrix == tgt and V.matrix @ T == tgt
    assert shm.boundedness_check(sh, sum(exps)).bounded


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_truncation_commutes_with_frobenius_power(seed):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, 2, 2)
    sh = gen.random_effective_local(rng, A, 1, N, max_exponent=2)
    lev = shm.truncate(sh, 3)
    F2 = shm.iterate_frobenius(lev.as_finite(), 2)
    big = shm.iterate_frobenius(sh, 2)
    # the (0, 0) block of F^2 on M/z^3 is the constant term of F^2 on M
    assert np.array_equal(F2[0, 0], big.data[0, 0, 0])
