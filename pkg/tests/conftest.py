import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lrsreduce.lrs import Lrs, reference  # noqa: E402
from lrsreduce.reductions import ReductionTarget, reduce  # noqa: E402

F = Fraction

_cache = {}


def reduced(name, target):
    """Memoised reduce() of a bundled sequence; instances are immutable."""
    key = (name, ReductionTarget.parse(target) if isinstance(target, str) else target)
    if key not in _cache:
        _cache[key] = reduce(reference(name), key[1])
    return _cache[key]


@pytest.fixture
def negative():
    return reference("reference-negative")


@pytest.fixture
def nonnegative():
    return reference("reference-nonnegative")


@pytest.fixture
def fibonacci():
    return Lrs([1, 1], [0, 1])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
