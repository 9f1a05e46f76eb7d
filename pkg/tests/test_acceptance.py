"""The ten acceptance criteria, one test each; a pass/fail line is printed per criterion."""

import pytest

from deltawell.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = run_criterion(number)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
