import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from metamorph import faults
from metamorph.forecaster import TrainConfig, train
from metamorph.series import default_split

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Small but real training budget for unit-level forecaster tests.
SMALL = TrainConfig(epochs=3, hidden_size=6)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _no_fault_leaks():
    faults.activate(None)
    yield
    faults.activate(None)


@pytest.fixture(scope="session")
def small_split():
    return default_split(0, 200, 60)


@pytest.fixture(scope="session")
def small_model(small_split):
    return train(small_split[0], SMALL)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
