import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqshtuka import field as fl
from fqshtuka.errors import NoSolution


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9, 16, 25, 27])
def test_field_axioms_small(q):
    F = fl.field_for(q)
    els = np.arange(q)
    # multiplicative group is cyclic of order q - 1
    g = F.primitive_element()
    seen = {F.pow(g, n) for n in range(q - 1)}
    assert seen == set(range(1, q))
    # distributivity on the full table
    a, b, c = np.meshgrid(els, els, els, indexing="ij")
    assert np.array_equal(F.mul(a, F.add(b, c)), F.add(F.mul(a, b), F.mul(a, c)))
    for x in range(1, q):
        assert F.mul(x, F.inv(x)) == 1
        assert F.pow(x, q) == x


def test_f4_generator_relation(F4):
    w = F4.generator()
    assert F4.mul(w, w) == F4.add(w, 1)
    assert F4.format(F4.mul(w, w)) in ("1+w", "w+1")


def test_elem_wrapper(F4):
    w = F4.element(F4.generator())
    assert w ** 3 == F4.element(1)
    assert (w * w.inverse()) == F4.element(1)


def test_not_a_prime_power():
    with pytest.raises(Exception):
        fl.field_for(6)


def test_solve_inconsistent():
    F = fl.field_for(2)
    A = np.array([[1, 1], [1, 1]])
    with pytest.raises(NoSolution):
        fl.solve(F, A, np.array([0, 1]))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4, 9]), st.integers(1, 5), st.integers(1, 5), st.data())
def test_rank_nullity_and_solve(q, m, n, data):
    F = fl.field_for(q)
    A = np.array(data.draw(st.lists(st.integers(0, q - 1), min_size=m * n, max_size=m * n))).reshape(m, n)
    K = fl.kernel(F, A)
    assert fl.rank(F, A) + K.shape[0] == n
    if K.shape[0]:
        assert not np.any(F.matmul(A, K.T))
    x = np.array(data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n)))
    b = F.matmul(A, x[:, None])[:, 0]
    y = fl.solve(F, A, b)
    assert np.array_equal(F.matmul(A, y[:, None])[:, 0], b)
