import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqshtuka import algebra as alg
from fqshtuka import drinfeld as dr
from fqshtuka import field as fl
from fqshtuka import generators as gen
from fqshtuka import hopf
from fqshtuka.errors import NotALift
from fqshtuka.shtuka import FiniteShtuka

from conftest import mat


def test_primitives_of_nilpotent_block(F2):
    R = alg.base_algebra(F2)
    sh = FiniteShtuka(R, mat(R, [["0", "1"], ["0", "0"]]))
    prim = hopf.primitives(dr.presentation(sh))
    assert prim.rank == 2 and prim.free
    assert hopf.mq_roundtrip(sh).ok


def test_primitives_of_alpha2(F2):
    R = alg.base_algebra(F2)
    prim = hopf.primitives(dr.presentation(FiniteShtuka(R, mat(R, [["0"]]))))
    assert prim.rank == 1
    assert not np.any(prim.frobenius)


def test_alpha2_over_f4_not_balanced(F4):
    R = alg.base_algebra(F4)
    rep = hopf.balanced_check(hopf.alpha_p(R))
    assert not rep.balanced and rep.dims == [1, 0]


def test_drinfeld_image_balanced(F4):
    R = alg.base_algebra(F4)
    rep = hopf.balanced_check(dr.presentation(FiniteShtuka(R, mat(R, [["0"]]))))
    assert rep.balanced and rep.dims == [1, 1]


def test_strictness_verdicts(F4):
    R = alg.base_algebra(F4)
    assert hopf.strictness_check(hopf.canonical_deformation(hopf.alpha_q(R))).strict
    assert hopf.strictness_check(hopf.canonical_deformation(hopf.constant_fq(R))).strict
    ap = hopf.strictness_check(hopf.canonical_deformation(hopf.alpha_p(R)))
    assert not ap.strict
    a = next(x for x in range(4) if F4.format(x) == ap.witness["a"])
    assert ap.witness["N_action"] == F4.format(F4.pow(a, 2))


def test_bad_lift_rejected(F4):
    R = alg.base_algebra(F4)
    base = hopf.alpha_q(R)
    acts = hopf.scalar_actions(R)
    acts[1] = {(0,): R.one(), (1,): R.one()}  # does not fix the augmentation
    with pytest.raises(NotALift):
        hopf.strictness_check(hopf.DeformationPair(base, acts))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_mu_p_obstructed(p):
    ob = hopf.mu_p_obstruction(alg.base_algebra(fl.field_for(p)))
    assert ob.obstructed and ob.zero_on_base
    assert ob.witness == "Y^" + str(p)


def test_drinfeld_strictness_of_images(F4):
    R = alg.base_algebra(F4)
    for T in (["0"], ["1"], ["w"]):
        rep = hopf.drinfeld_strictness(dr.presentation(FiniteShtuka(R, mat(R, [T]))))
        assert rep.strict


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_roundtrip_random(seed):
    rng = np.random.default_rng(seed)
    q = int(rng.choice([2, 3]))
    R = gen.random_ring(rng, q, 3)
    r = int(rng.integers(1, 3))
    sh = gen.random_finite_shtuka(rng, R, r)
    cert = hopf.mq_roundtrip(sh)
    assert cert.ok
    # recovered Frobenius is U^{-1} T U^(q)
    assert np.array_equal(sh.conjugate(cert.U).matrix, cert.recovered)
