import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rdsym.fields import GridSpec, ScalarField

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def small_grid():
    return GridSpec(4.0, 81)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def field_from(grid, fn, time=0.0):
    X, Y = grid.mesh()
    return ScalarField(grid, fn(X, Y), time)


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``criterion(k, ok, detail)`` records one pass/fail line and fails the test if not ok."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def record(k, ok, detail):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
