import numpy as np
import pytest

from zlab.ensembles import BandRange
from zlab.spectral import build_grid


@pytest.fixture(scope="session")
def grid():
    return build_grid(128, 16.0)


@pytest.fixture(scope="session")
def fine_grid():
    return build_grid(256, 32.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def resolved_band(grid):
    """Band of bump centres well inside the resolved range of ``grid``."""
    return BandRange(4.0 * grid.drho, 0.2 * grid.rho_max, 0.25, 2)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
