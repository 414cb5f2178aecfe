import numpy as np
import pytest

from gl2d.grid import EdgeField, Grid, gauge_transform, zero_edge_field
from gl2d.norms import argmax_distance
from gl2d.solver import (GLState, SolveOptions, _pack, _unpack, energy,
                         energy_and_gradient, gradient, grid_for, initial_state,
                         minimize, residuals, solve_cascade)
from conftest import rng_for


def small_random_state(seed=11, n=8, kappa=2.0, H=1.5):
    g = Grid(n, n, 1.0, 1.0)
    r = rng_for(seed)
    psi = 0.5 * (r.standard_normal(g.node_shape) + 1j * r.standard_normal(g.node_shape))
    A = EdgeField(0.5 * r.standard_normal(g.xedge_shape),
                  0.5 * r.standard_normal(g.yedge_shape))
    return GLState(g, psi, A, kappa, H)


def dense_energy_oracle(state):
    """Independent summation of the energy density, loop by loop."""
    g, psi, A = state.grid, state.psi, state.A
    B, k2 = state.B, state.kappa ** 2
    total = 0.0
    wx, wy, wn = g.xedge_weights(), g.yedge_weights(), g.node_weights()
    for i in range(g.nx):
        for j in range(g.ny + 1):
            u = np.exp(1j * B * A.ax[i, j] * g.hx)
            total += wx[i, j] * abs((u * psi[i + 1, j] - psi[i, j]) / g.hx) ** 2
    for i in range(g.nx + 1):
        for j in range(g.ny):
            u = np.exp(1j * B * A.ay[i, j] * g.hy)
            total += wy[i, j] * abs((u * psi[i, j + 1] - psi[i, j]) / g.hy) ** 2
    for i in range(g.nx + 1):
        for j in range(g.ny + 1):
            d = abs(psi[i, j]) ** 2
            total += wn[i, j] * (-k2 * d + 0.5 * k2 * d * d)
    for i in range(g.nx):
        for j in range(g.ny):
            curl = ((A.ay[i + 1, j] - A.ay[i, j]) / g.hx
                    - (A.ax[i, j + 1] - A.ax[i, j]) / g.hy)
            total += g.cell_area * k2 * state.H ** 2 * (curl - 1.0) ** 2
    return total


def test_energy_against_dense_summation():
    st = small_random_state()
    assert abs(energy(st) - dense_energy_oracle(st)) < 1e-12 * (1 + abs(energy(st)))


def test_energy_normal_state(F_128):
    g, F = F_128
    st = GLState(g, np.zeros(g.node_shape, complex), F, 2.0, 3.0)
    assert abs(energy(st)) < 1e-12


def test_energy_uniform_state():
    # psi = 1, A = 0, kappa = H = 1 on the unit square: -1 + 1/2 + 1 = 1/2
    g = Grid(16, 16, 1.0, 1.0)
    st = GLState(g, np.ones(g.node_shape, complex), zero_edge_field(g), 1.0, 1.0)
    assert abs(energy(st) - 0.5) < 1e-13


def test_energy_gauge_invariance():
    st = small_random_state(5)
    chi = rng_for(6).standard_normal(st.grid.node_shape)
    psi2, A2 = gauge_transform(st.grid, st.psi, st.A, st.B, chi)
    e1 = energy(st)
    e2 = energy(GLState(st.grid, psi2, A2, st.kappa, st.H))
    assert abs(e1 - e2) < 1e-11 * (1 + abs(e1))


def test_gradient_matches_finite_differences():
    st = small_random_state()
    _, dpsi, dA = energy_and_gradient(st)
    gv = _pack(dpsi, dA)
    x = _pack(st.psi, st.A)
    h = 1e-6
    fd = np.zeros_like(x)
    for k in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        pp, Ap = _unpack(st.grid, xp)
        pm, Am = _unpack(st.grid, xm)
        fd[k] = (energy(GLState(st.grid, pp, Ap, st.kappa, st.H))
                 - energy(GLState(st.grid, pm, Am, st.kappa, st.H))) / (2 * h)
    rel = np.abs(fd - gv).max() / max(np.abs(gv).max(), 1e-30)
    assert rel <= 1e-6


def test_gradient_zero_at_normal_state(F_128):
    g, F = F_128
    st = GLState(g, np.zeros(g.node_shape, complex), F, 2.0, 2.0)
    dpsi, dA = gradient(st)
    assert np.abs(dpsi).max() == 0.0
    assert max(np.abs(dA.ax).max(), np.abs(dA.ay).max()) < 1e-10


def test_gradient_gauge_equivariance():
    st = small_random_state(21)
    chi = rng_for(22).standard_normal(st.grid.node_shape)
    _, dpsi, dA = energy_and_gradient(st)
    psi2, A2 = gauge_transform(st.grid, st.psi, st.A, st.B, chi)
    _, dpsi2, dA2 = energy_and_gradient(GLState(st.grid, psi2, A2, st.kappa, st.H))
    # psi-gradient rotates with the same phase; A-gradient is invariant
    np.testing.assert_allclose(np.abs(dpsi2), np.abs(dpsi), atol=1e-11)
    np.testing.assert_allclose(dA2.ax, dA.ax, atol=1e-11)
    np.testing.assert_allclose(dA2.ay, dA.ay, atol=1e-11)


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(grad_tol=0.1)
    with pytest.raises(ValueError):
        SolveOptions(noise_amp=0.9)
    with pytest.raises(ValueError):
        SolveOptions(init="bogus")
    with pytest.raises(ValueError):
        SolveOptions(method="newton")


def test_normal_state_is_fixed_point():
    g = Grid(32, 32, 1.0, 1.0)
    opts = SolveOptions(init="normal", noise_amp=0.0)
    st, rep, stats = minimize(initial_state(g, 2.0, 2.0, opts), opts)
    assert stats["converged"]
    assert stats["iterations"] == 0
    assert np.abs(st.psi).max() == 0.0


def test_energy_monotone_along_iterates(minimizer_k4_64):
    _, _, stats, _ = minimizer_k4_64
    hist = np.array(stats["energy_history"])
    assert (np.diff(hist) <= 1e-10 * (1 + np.abs(hist[:-1]))).all()


def test_minimizer_contracts(minimizer_k4_64):
    state, report, stats, opts = minimizer_k4_64
    assert np.abs(state.psi).max() <= 1.0 + 1e-6            # sup bound
    # kinetic bound: ||p psi||_2 <= (1 + 1e-3) kappa ||psi||_2
    from gl2d.harness import _kinetic_l2, _l2w
    assert _kinetic_l2(state) <= (1 + 1e-3) * state.kappa * _l2w(state.grid, state.psi)
    assert stats["energy"] <= 0.0
    # converged gauge: divergence within solver tolerance
    from gl2d.grid import discrete_div
    assert np.abs(discrete_div(state.grid, state.A)).max() < 1e-9


def test_surface_localization_regime():
    # kappa/H = 0.8 inside (Theta0, 1): argmax concentrates at the boundary
    g = grid_for(8.0, 10.0, Lx=1.0, points_per_length=7)
    opts = SolveOptions(grad_tol=1e-5, seed=3)
    st, rep, stats = solve_cascade(g, 8.0, 10.0, opts)
    assert stats["converged"]
    _, dist = argmax_distance(g, st.psi)
    assert np.sqrt(st.B) * dist <= 5.0


@pytest.mark.slow
def test_far_above_breakdown_state_vanishes():
    # kappa = 4, H = 40: far above the critical field, psi collapses
    sups = []
    for n in (64, 96):
        g = Grid(n, n, 1.0, 1.0)
        opts = SolveOptions(grad_tol=1e-5, seed=2)
        st, rep, stats = minimize(initial_state(g, 4.0, 40.0, opts), opts)
        sups.append(np.abs(st.psi).max())
    assert max(sups) <= 1e-3


def test_residuals_normal_state(F_128):
    g, F = F_128
    st = GLState(g, np.zeros(g.node_shape, complex), F, 1.0, 1.0)
    rep = residuals(st)
    assert rep.r_psi == 0.0
    assert rep.r_bc_psi == 0.0
    assert rep.r_A <= 1e-8
    assert rep.r_bc_curl <= 1e-9


def test_residuals_converged_small(minimizer_k4_64):
    state, report, stats, opts = minimizer_k4_64
    scale = (1 + state.H) * np.sqrt(state.grid.area)
    assert report.r_psi <= 10 * scale * opts.grad_tol
    assert report.r_A <= 10 * scale * opts.grad_tol
    assert report.r_bc_psi <= 10 * opts.grad_tol


def test_residual_detects_neumann_violation(minimizer_k4_64):
    state, report, _, _ = minimizer_k4_64
    g = state.grid
    X, _ = g.node_coords()
    bad = GLState(g, (1.0 + X).astype(complex) * 0.5, state.A.copy(),
                  state.kappa, state.H)
    rep = residuals(bad)
    assert rep.r_bc_psi > 100 * report.r_bc_psi


def test_resolution_rule():
    g = grid_for(4.0, 4.0, Lx=2.0, points_per_length=6, n_min=32, n_max=512)
    from gl2d.solver import magnetic_length_resolution
    assert magnetic_length_resolution(g, 4.0, 4.0) >= 6.0
