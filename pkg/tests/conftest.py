import numpy as np
import pytest

from lightwell import LaunchRule, ProfileSpec, simulate
from lightwell.integrator import IntegratorConfig

WIDE = (0.5, 3.8)

# the four single-attractor scenarios of the n_a / n_c design table
DESIGN_PAIRS = [(3.0, 0.8), (3.3, 0.5), (2.8, 1.0), (2.7, 1.1)]

_ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    """Collect one acceptance verdict for the terminal summary."""
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def gaussian_pair(n_a, n_c):
    return ProfileSpec.gaussian(n_a, n_c, bounds=WIDE)


@pytest.fixture(scope="session")
def gaussian():
    return ProfileSpec.gaussian()


@pytest.fixture(scope="session")
def mexican_hat():
    return ProfileSpec.mexican_hat()


@pytest.fixture(scope="session")
def homogeneous():
    return ProfileSpec.homogeneous(1.0)


@pytest.fixture(scope="session")
def gaussian_run(gaussian):
    """Default Gaussian ray at the ledge, long enough for about 20 radial periods."""
    return simulate(gaussian, LaunchRule(), IntegratorConfig(horizon=250.0))


@pytest.fixture(scope="session")
def circular_run(gaussian):
    return simulate(gaussian, LaunchRule(anchor="circular"), IntegratorConfig(horizon=60.0))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)
