"""One test per exit criterion; each prints its pass/fail line (see with -s)."""

import pytest

from litmus_pricing.acceptance import CRITERIA


@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(criterion):
    result = criterion()
    print(result.line())
    assert result.passed, result.line()
