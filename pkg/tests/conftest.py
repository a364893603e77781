import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qnb.landscape import OptimizerConfig

settings.register_profile("qnb", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qnb")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fast():
    """Optimizer settings without oracle certification."""
    return OptimizerConfig(certify_samples=0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
