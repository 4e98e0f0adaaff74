import math

import numpy as np
import pytest

import pwlab


@pytest.fixture(scope="session")
def dom():
    """Reference configuration: Interval(pi), beta = 1, 128 modes."""
    return pwlab.interval_domain(np.pi, 128, beta=1.0)


@pytest.fixture(scope="session")
def gs(dom):
    """Ground state solved to near round-off residual (shared, read-only)."""
    return pwlab.petviashvili_solve(dom, tol=1e-13)


@pytest.fixture(scope="session")
def wc(gs):
    return pwlab.certify_well_constants(gs, trial_count=1000, seed=0)


@pytest.fixture(scope="session")
def q_h01(dom, gs):
    return math.sqrt(dom.h01_norm_sq(gs.q))


@pytest.fixture(scope="session")
def ball():
    return pwlab.ball_domain(np.pi, 128, beta=1.0)


@pytest.fixture(scope="session")
def gs_ball(ball):
    return pwlab.petviashvili_solve(ball, tol=1e-13)
