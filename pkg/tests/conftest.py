import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gl2d.grid import Grid
from gl2d.poisson import PoissonOptions, reference_potential
from gl2d.solver import SolveOptions, initial_state, minimize

settings.register_profile(
    "ci", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture(scope="session")
def grid16():
    return Grid(16, 16, 1.0, 1.0)


@pytest.fixture(scope="session")
def grid32_L2():
    return Grid(32, 32, 2.0, 2.0)


@pytest.fixture(scope="session")
def F_128():
    g = Grid(128, 128, 2.0, 2.0)
    return g, reference_potential(g, PoissonOptions(tol=1e-12))


@pytest.fixture(scope="session")
def minimizer_k4_64():
    """Converged kappa = H = 4 minimizer on a 64^2 grid, shared across modules."""
    g = Grid(64, 64, 2.0, 2.0)
    opts = SolveOptions(grad_tol=1e-5, seed=7)
    state, report, stats = minimize(initial_state(g, 4.0, 4.0, opts), opts)
    assert stats["converged"]
    return state, report, stats, opts
