import sys
import numpy as np
import pytest

from evimm import EvimmParams, GammaParams, threshold_for_tail_fraction

ALPHAS = (0.1, 0.2, 0.3, 0.4)
XIS = (-0.2, 0.0, 0.2)


def design(alpha: float, xi: float, eta: float = 1.0, beta: float = 5.0, sigma: float = 5.0, phi: float = 0.1):
    u = threshold_for_tail_fraction(alpha, GammaParams(eta, beta), phi)
    return EvimmParams.from_values(alpha, eta, beta, u, xi, sigma)


@pytest.fixture
def table1():
    return design(0.2, 0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(config, items):
    import os

    if os.environ.get("EVIMM_RUN_SLOW"):
        return
    skip = pytest.mark.skip(reason="set EVIMM_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
