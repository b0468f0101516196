from fractions import Fraction

import pytest
from hypothesis import settings

from mvtbl.mvop import Params

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

REF = Params(27, 15, 2, Fraction(9, 10))

GRID_N = (3, 4, 8, 27)
GRID_LEVELS = (1, 2, 5, 10)
GRID_ALPHA = (Fraction(-1, 2), Fraction(3, 10), Fraction(9, 10))


def grid(levels=GRID_LEVELS, alphas=GRID_ALPHA):
    """Parameter grid used throughout: p in {1, 1.3, n/3}, duplicates dropped."""
    seen = []
    for n in GRID_N:
        for p in (Fraction(1), Fraction(13, 10), Fraction(n, 3)):
            for N in levels:
                for a in alphas:
                    params = Params(n, p, N, a)
                    if params not in seen:
                        seen.append(params)
    return seen


@pytest.fixture(scope="session")
def ref():
    return REF


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
