"""Acceptance criteria, one test each, at the stated tolerances and budgets.

Each test prints a single ``ACn PASS|FAIL: ...`` line; the lines are also
collected and repeated in the terminal summary.
"""

import pytest

from affinecurve.checks import ACCEPTANCE_IDS, ALL_CHECKS

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("criterion", ACCEPTANCE_IDS)
def test_acceptance(criterion):
    result = ALL_CHECKS[criterion]()
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
    assert result.within_budget, line
