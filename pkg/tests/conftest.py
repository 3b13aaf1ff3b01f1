import math
import sys

import pytest

from hetnet.model import AlwaysNlos, ExponentialLos, NetworkConfig, TierParams, paper_two_tier


def single_tier(density=1e-5, threshold_db=0.0, alpha=4.0, noise_dbm=-300.0,
                sigma=0.0, los=None, tx_power_dbm=30.0, **extra):
    """One-tier network used by the closed-form checks."""
    tier = TierParams(density=density, tx_power_dbm=tx_power_dbm, pl_intercept_nl_db=0.0,
                      pl_intercept_l_db=0.0, alpha_nl=alpha, alpha_l=min(alpha, extra.pop("alpha_l", alpha)),
                      shadow_sigma_nl_db=sigma, shadow_sigma_l_db=sigma,
                      sinr_threshold_db=threshold_db, **extra)
    return NetworkConfig(tiers=(tier,), noise_dbm=noise_dbm, los_model=los or AlwaysNlos())


@pytest.fixture
def preset():
    return paper_two_tier(1e-5, 1e-4, ExponentialLos(0.01))


MARP_CLOSED = 1.0 / (1.0 + math.pi / 4.0)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not getattr(module, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
