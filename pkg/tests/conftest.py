import numpy as np
import pytest

from cpspectral.signal_model import SpectralModel

# well separated frequencies used wherever a fixed K=3 instance is needed
FIXED_OMEGAS = np.array([0.7, 2.1, 4.0])
FIXED_AMPS = np.array([1.0 + 0.5j, -0.8 + 0.3j, 0.4 - 0.9j])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixed_model():
    return SpectralModel(FIXED_OMEGAS, FIXED_AMPS)


# filled by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
