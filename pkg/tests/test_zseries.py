import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqshtuka import algebra as alg
from fqshtuka import field as fl
from fqshtuka import generators as gen
from fqshtuka.errors import NotDivisible
from fqshtuka.zseries import (ZMatrix, ZSeries, det, divide_by_z_minus_zeta,
                              is_unit_series, parse_series, series_frobenius,
                              series_inverse, solve_series)

N = 8


def s(A, text, n=N):
    return parse_series(A, text, n)


def test_freshman_square(F2):
    A = alg.base_algebra(F2)
    assert s(A, "1+z") * s(A, "1+z") == s(A, "1+z^2")


def test_frobenius_acts_on_coefficients(Reps):
    assert series_frobenius(s(Reps, "e+z")) == s(Reps, "z")


def test_divide_z_squared(Reps):
    out = divide_by_z_minus_zeta(s(Reps, "z^2"))
    # each division by z - zeta costs nu = 2 coefficients here
    assert out.precision == N - 2
    assert out == s(Reps, "z+e", out.precision)


def test_not_divisible_witness(Reps0):
    with pytest.raises(NotDivisible) as exc:
        divide_by_z_minus_zeta(s(Reps0, "z-e"))
    w = exc.value.witness
    assert w["step"] == 0
    assert Reps0.equal(w["residual"], Reps0.element_by_name("e"))


def test_det_diagonal(Reps0):
    M = ZMatrix.from_entries(Reps0, [[s(Reps0, "z"), s(Reps0, "0")],
                                     [s(Reps0, "0"), s(Reps0, "z-e")]])
    assert det(M) == s(Reps0, "z^2+e*z")


def test_unit_series(Reps0):
    assert is_unit_series(s(Reps0, "1+z"))
    assert not is_unit_series(s(Reps0, "e+z"))


def test_inverse_of_one_minus_z(F2):
    A = alg.base_algebra(F2)
    inv = series_inverse(s(A, "1+z"))
    # geometric series 1 + z + z^2 + ... over F_2
    assert np.all(inv.coeffs[:, 0] == 1)


def test_solve_series_trusted_precision(Reps):
    A = Reps
    M = ZMatrix.scalar(s(A, "z"), 1)
    B = ZMatrix.scalar(s(A, "z^2+z^3"), 1)
    X, trusted = solve_series(M, B)
    # kernel of multiplication by z is concentrated in the top coefficient
    assert trusted == N - 1
    assert X.entry(0, 0).truncate(trusted) == s(A, "z+z^2", trusted)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_series_ring_laws(seed):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, int(rng.choice([2, 3])), 3)
    a, b, c = (gen.random_series(rng, A, N) for _ in range(3))
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert series_frobenius(a * b) == series_frobenius(a) * series_frobenius(b)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_division_roundtrip(seed, d):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, int(rng.choice([2, 3, 4])), 3)
    y, x = gen.random_divisible(rng, A, 10, d)
    out = divide_by_z_minus_zeta(y, d)
    assert out == x.truncate(out.precision)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_det_multiplicative(seed, r):
    rng = np.random.default_rng(seed)
    A = gen.random_ring(rng, 2, 3)
    X = ZMatrix(A, rng.integers(0, 2, (r, r, 5, A.k)))
    Y = ZMatrix(A, rng.integers(0, 2, (r, r, 5, A.k)))
    assert det(X @ Y) == det(X) * det(Y)
