import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from iongates.trap_modes import normal_modes

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def modes2():
    return normal_modes(2)


@pytest.fixture(scope="session")
def modes3():
    return normal_modes(3)


@pytest.fixture(scope="session")
def modes6():
    return normal_modes(6)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
