import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqshtuka import algebra as alg
from fqshtuka import anderson as an
from fqshtuka import drinfeld as dr
from fqshtuka import field as fl
from fqshtuka import generators as gen
from fqshtuka import shtuka as shm
from fqshtuka.errors import NotAFiltration, NotAndersonDivisible, ZetaNotZero
from fqshtuka.shtuka import LocalShtuka
from fqshtuka.zseries import ZMatrix, ZSeries, parse_series

N = 12


def local(A, rows, n=N):
    M = ZMatrix.from_entries(A, [[parse_series(A, e, n) for e in row] for row in rows])
    return LocalShtuka(A, M)


@pytest.fixture
def K(F2):
    return alg.base_algebra(F2)


def test_tower_of_z(K):
    tower = an.build_tower(local(K, [["z"]]), 3)
    assert tower.orders == [2, 4, 8] and tower.orders_ok and tower.exact
    assert tower.height == 1
    om = an.omega_stabilization(tower)
    assert om.n_stab == 1 and om.within_bound


def test_etale_tower(K):
    tower = an.build_tower(local(K, [["1"]]), 2)
    assert tower.orders == [2, 4]
    assert an.omega_stabilization(tower).n_stab == 1


def test_omega_of_tate_two(K):
    sh = shm.tate_object(K, 2, N)
    tower = an.build_tower(sh, 4)
    assert an.omega_stabilization(tower).n_stab == 2


def test_admissible_d(Reps0):
    assert an.admissible_d(local(Reps0, [["z", "0"], ["0", "z+e"]])) == 2
    with pytest.raises(NotAndersonDivisible):
        an.admissible_d(local(Reps0, [["z^3"]]), 2)


def test_frobenius_kernel_example(Reps0, K):
    tower = an.build_tower(local(K, [["z"]]), 2)
    eps = next(t for t in dr.catalog(K) if t.name == "k[e]/(e^2)")
    rep = an.frobenius_kernel_check(tower, 1, eps)
    assert rep.contained and rep.kernel_dim == rep.target_dim == 1


def test_frobenius_kernel_needs_zeta_zero(Reps):
    sh = local(Reps, [["z-e"]])
    with pytest.raises(ZetaNotZero):
        an.frobenius_kernel_check(sh, 1, dr.catalog(Reps)[0])


def test_zd_verschiebung(K):
    rep = an.zd_verschiebung_check(local(K, [["0", "z"], ["1", "0"]]), 1)
    assert rep.ok
    assert rep.matrix == local(K, [["0", "z"], ["1", "0"]], rep.matrix.precision).matrix


def test_hodge_filtration_example(K):
    hod = an.hodge_filtration(local(K, [["0", "z"], ["1", "0"]]), 1)
    assert hod.fil_dim == 1 and hod.h_dim == 2 and hod.exact
    assert hod.format_generators() == [["0", "1"]]


def _filtration(R, vecs):
    return np.array(vecs, dtype=np.int64).reshape(-1, 2, 1, R.k)


@pytest.mark.parametrize("eps_part", [0, 1])
def test_deform_examples(K, Reps0, eps_part):
    small = local(K, [["0", "z"], ["1", "0"]])
    # span(e_2 + eps_part * e * e_1)
    fil = _filtration(Reps0, [[[0, eps_part]], [[1, 0]]])
    prob = an.DeformationProblem(Reps0, [Reps0.element_by_name("e")], small, fil, 1)
    lift = an.deform_lift(prob)
    assert lift.ok
    if eps_part == 0:
        assert lift.shtuka.matrix.truncate(4) == local(Reps0, [["0", "z"], ["1", "0"]], 4).matrix
    assert an.equivalence_check(prob).ok


def test_trivial_ideal_lift_is_isomorphic(K):
    small = local(K, [["0", "z"], ["1", "0"]])
    fil = _filtration(K, [[[0]], [[1]]])
    prob = an.DeformationProblem(K, [], small, fil, 1)
    assert an.deform_lift(prob).ok


def test_filtration_must_reduce(K, Reps0):
    small = local(K, [["0", "z"], ["1", "0"]])
    fil = _filtration(Reps0, [[[1, 0]], [[0, 0]]])  # span(e_1): wrong reduction
    with pytest.raises(NotAFiltration):
        an.DeformationProblem(Reps0, [Reps0.element_by_name("e")], small, fil, 1)


def test_reduce_mod_zeta_power(Reps):
    # z^2 = zeta^2 + 2 zeta (z - zeta) + (z - zeta)^2, and e^2 = 0
    vec = parse_series(Reps, "z^2", 6).coeffs[None]
    red = an.reduce_mod_zeta_power(Reps, vec, 2)
    expect = parse_series(Reps, "0", 2).coeffs
    assert np.array_equal(red[0], expect)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_tower_orders_and_exactness(seed):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, 2, 2)
    sh = gen.random_effective_local(rng, A, 1, 10, max_exponent=2)
    tower = an.build_tower(sh, 3, d_max=4)
    assert tower.orders_ok and tower.exact
    assert an.omega_stabilization(tower).within_bound


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_hodge_exact_sequence(seed):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, 2, 2)
    r = int(rng.integers(1, 3))
    exps = [int(rng.integers(0, 3)) for _ in range(r)]
    sh = gen.random_effective_local(rng, A, r, N, exponents=exps)
    d = max(exps)
    hod = an.hodge_filtration(sh, d)
    # dim Fil + dim H/Fil = dim H, and H/Fil ~ coker F has length sum(exps)
    assert hod.exact
    assert hod.h_dim == r * d * A.k
    assert hod.coker_f_dim == sum(exps) * A.k
