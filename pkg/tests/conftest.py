import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from maxperim.codes import expand_quarter, QuarterCode
from maxperim.pipeline import enumerate_and_solve, solve_two_phase_detailed


@pytest.fixture(scope="session")
def octagon_ranked():
    """All eleven octagon local maxima, solved once per session."""
    return enumerate_and_solve(8)


@pytest.fixture(scope="session")
def two_phase_cache():
    """Memoized detailed two-phase results keyed by n."""
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = solve_two_phase_detailed(n)
        return cache[n]

    return get


@pytest.fixture(scope="session")
def octagon_optimum(two_phase_cache):
    return two_phase_cache(8)


def table_code(n):
    from reference_values import QUARTER_CODES

    return expand_quarter(QuarterCode.from_string(QUARTER_CODES[n]))
