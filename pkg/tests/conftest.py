import math

import pytest
from hypothesis import HealthCheck, settings

from rou_limits.model import Boundary, ModelParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# alpha = gamma = sigma = 1 throughout the reference cases
Q_REF = 0.5 / (math.e * math.sqrt(math.pi) * math.erf(1.0))


@pytest.fixture
def ou_ref():
    return ModelParams(1.0, 1.0, 1.0, 1.0, Boundary.FREE, x0=1.0)


@pytest.fixture
def drou_ref():
    return ModelParams(1.0, 1.0, 1.0, 1.0, Boundary.DOUBLE, x0=1.0, d=2.0)


# seed fixed before the first run; reused by the estimate and acceptance modules
CLT_SEED = 12345
CLT_REPS = 500


@pytest.fixture(scope="session")
def clt_batch():
    """500 bridge-scheme DROU replications to T = 1e4 (dt = 1e-3), computed once."""
    from rou_limits.simulate import Scheme, SimConfig, simulate_batch

    params = ModelParams(1.0, 1.0, 1.0, 1.0, Boundary.DOUBLE, x0=1.0, d=2.0)
    cfg = SimConfig(dt=1e-3, horizon_T=1e4, seed=CLT_SEED, scheme=Scheme.BRIDGE)
    return params, cfg, simulate_batch(params, cfg, CLT_REPS)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
