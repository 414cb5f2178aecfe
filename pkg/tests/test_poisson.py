import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gl2d.errors import CompatibilityError
from gl2d.grid import (EdgeField, Grid, discrete_curl, discrete_div,
                       interpolate_edge, node_grad)
from gl2d.poisson import (PoissonOptions, london_project, poisson_dirichlet,
                          poisson_neumann, reference_potential)
from conftest import rng_for

TIGHT = PoissonOptions(tol=1e-13)


def test_options_validation():
    with pytest.raises(ValueError):
        PoissonOptions(tol=1e-3)
    with pytest.raises(ValueError):
        PoissonOptions(max_iter=0)


def test_zero_rhs_zero_solution():
    g = Grid(16, 16, 1.0, 1.0)
    sol = poisson_dirichlet(g, np.zeros(g.node_shape), TIGHT)
    assert np.abs(sol).max() == 0.0


@pytest.mark.parametrize("n", [32, 64, 128])
def test_dirichlet_manufactured(n):
    g = Grid(n, n, 1.0, 1.0)
    X, Y = g.node_coords()
    u = np.sin(np.pi * X) * np.sin(np.pi * Y)
    sol = poisson_dirichlet(g, -2 * np.pi ** 2 * u, PoissonOptions(tol=1e-12))
    assert np.abs(sol - u).max() <= 1.0 / n ** 2


@pytest.mark.parametrize("n", [32, 64])
def test_neumann_manufactured(n):
    g = Grid(n, n, 1.0, 1.0)
    X, Y = g.node_coords()
    u = np.cos(np.pi * X) * np.cos(np.pi * Y)     # zero normal derivative
    sol = poisson_neumann(g, -2 * np.pi ** 2 * u, None, PoissonOptions(tol=1e-12))
    assert np.abs(sol - u).max() <= 1.0 / n ** 2


def test_neumann_inhomogeneous_flux_exact():
    # u = x^2/2: Delta u = 1, du/dnu = 1 on the right wall only
    g = Grid(32, 32, 1.0, 1.0)
    X, _ = g.node_coords()
    u = X ** 2 / 2
    flux = {"left": np.zeros(g.ny), "right": np.ones(g.ny),
            "bottom": np.zeros(g.nx), "top": np.zeros(g.nx)}
    sol = poisson_neumann(g, np.ones(g.node_shape), flux, TIGHT)
    wn = g.node_weights()
    diff = (sol - (sol * wn).sum() / wn.sum()) - (u - (u * wn).sum() / wn.sum())
    assert np.abs(diff).max() < 1e-11


def test_neumann_compatibility_error():
    g = Grid(16, 16, 1.0, 1.0)
    with pytest.raises(CompatibilityError):
        poisson_neumann(g, np.ones(g.node_shape), None)


def test_reference_potential_contracts(F_128):
    g, F = F_128
    assert np.abs(discrete_curl(g, F) - 1.0).max() <= 1e-6
    assert np.abs(discrete_div(g, F)).max() <= 1e-10
    # odd symmetry: vanishes at the center of the square
    fx, fy = interpolate_edge(g, F, g.Lx / 2, g.Ly / 2)
    assert abs(fx) < 1e-12 and abs(fy) < 1e-12
    # fixed point of the London projection
    Fp = london_project(g, F, PoissonOptions(tol=1e-12))
    assert max(np.abs(Fp.ax - F.ax).max(), np.abs(Fp.ay - F.ay).max()) < 1e-9


def test_london_projection_properties():
    g = Grid(32, 32, 2.0, 2.0)
    r = rng_for(3)
    A = EdgeField(r.uniform(-1, 1, g.xedge_shape), r.uniform(-1, 1, g.yedge_shape))
    Ap = london_project(g, A, TIGHT)
    assert np.abs(discrete_div(g, Ap)).max() <= 1e-10
    # plaquette circulation of a gradient vanishes identically
    assert np.abs(discrete_curl(g, Ap) - discrete_curl(g, A)).max() <= 1e-14
    # idempotence within 10 tol
    App = london_project(g, Ap, TIGHT)
    assert max(np.abs(App.ax - Ap.ax).max(), np.abs(App.ay - Ap.ay).max()) <= 1e-11


@given(st.integers(0, 10_000))
def test_pure_gradient_projects_to_zero(seed):
    g = Grid(16, 16, 1.0, 1.0)
    chi = rng_for(seed).standard_normal(g.node_shape)
    Ap = london_project(g, node_grad(g, chi), TIGHT)
    assert max(np.abs(Ap.ax).max(), np.abs(Ap.ay).max()) < 1e-9


def test_already_london_is_fixed(F_128):
    # a field already satisfying the gauge conditions is returned unchanged
    g, F = F_128
    Ap = london_project(g, F, PoissonOptions(tol=1e-12))
    assert np.abs(Ap.ax - F.ax).max() < 1e-9


def test_refined_reference_agrees():
    # compare against a directly refined solve
    vals = {}
    for n in (64, 128):
        g = Grid(n, n, 1.0, 1.0)
        F = reference_potential(g, PoissonOptions(tol=1e-12))
        fx, fy = interpolate_edge(g, F, 0.25, 0.125)
        vals[n] = (fx, fy)
    assert abs(vals[64][0] - vals[128][0]) < 5e-4
    assert abs(vals[64][1] - vals[128][1]) < 5e-4
