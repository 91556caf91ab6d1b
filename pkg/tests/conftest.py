import numpy as np
import pytest

from micromorphx.assembly import assemble_stiffness
from micromorphx.grid import build_grid

_RESULTS = []


def report(criterion, passed, detail):
    """Record one acceptance line and print it immediately."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    _RESULTS.append(line)
    print(line)
    return passed


@pytest.fixture
def acceptance():
    return report


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid4():
    return build_grid(4)


@pytest.fixture(scope="session")
def sm_full4(grid4):
    return assemble_stiffness(grid4, variant="FULL")


@pytest.fixture(scope="session")
def sm_dev4(grid4):
    return assemble_stiffness(grid4, variant="DEV_DEV")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
