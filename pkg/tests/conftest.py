import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from contextual_key import npa, quantumsim

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ideal_box():
    return quantumsim.quantum_pm_box(quantumsim.NoiseModel(1.0))


@pytest.fixture(scope="session")
def level1():
    return npa.build_problem(1)


@pytest.fixture(scope="session")
def level2():
    return npa.build_problem(2)


@pytest.fixture(scope="session")
def level2_result(level2):
    return npa.solve_bound(level2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
