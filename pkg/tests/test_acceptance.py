"""Acceptance battery: one test per criterion, each printing a pass/fail line.

The lines are also collected and repeated in the pytest terminal summary.
"""
import pytest

from fqshtuka.suite import CRITERIA, DEFAULT_SEED, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, request):
    res = run_criterion(number, DEFAULT_SEED)
    print(res.line())
    request.config.stash.setdefault(ACCEPTANCE_LINES, []).append(res.line())
    if not res.passed:
        for f in res.failures[:3]:
            print("   ", f)
    assert res.passed, res.failures[:3]


ACCEPTANCE_LINES = pytest.StashKey[list]()
