"""All ten acceptance criteria at their stated tolerances; one line per criterion."""

import pytest

from crystalbec import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
