import numpy as np
import pytest
import scipy.linalg as sla

from gl2d.blowup import (BlowupFrame, classify_point, frame_curl, limit_residual,
                         rescale)
from gl2d.errors import DegenerateFieldError, DomainError
from gl2d.grid import (EdgeField, Grid, covariant_laplacian_weighted,
                       edge_field_from_function, zero_edge_field)
from gl2d.solver import GLState, SolveOptions, solve_cascade


@pytest.fixture(scope="module")
def minimizer_k8():
    g = Grid(96, 96, 1.0, 1.0)
    opts = SolveOptions(grad_tol=1e-5, seed=5)
    state, rep, stats = solve_cascade(g, 8.0, 8.0, opts)
    assert stats["converged"]
    return state


def test_classify_cases():
    g = Grid(32, 32, 4.0, 4.0)
    st = GLState(g, np.ones(g.node_shape, complex), zero_edge_field(g), 10.0, 10.0)
    assert classify_point(st, (2.0, 2.0), 5.0) == "interior"
    assert classify_point(st, (2.0, 0.0), 5.0) == "boundary"
    with pytest.raises(DomainError):
        classify_point(st, (5.0, 2.0), 5.0)


def test_classify_threshold_monotone():
    # increasing kappa H flips boundary -> interior, never the reverse
    g = Grid(16, 16, 2.0, 2.0)
    psi = np.ones(g.node_shape, complex)
    flips = []
    for b2 in (4.0, 16.0, 64.0, 256.0, 1024.0):
        st = GLState(g, psi, zero_edge_field(g), np.sqrt(b2), np.sqrt(b2))
        flips.append(classify_point(st, (1.0, 0.7), 3.0))
    seen_interior = False
    for c in flips:
        if c == "interior":
            seen_interior = True
        assert not (seen_interior and c == "boundary")


def test_rescale_constant_state():
    g = Grid(32, 32, 1.0, 1.0)
    st = GLState(g, np.full(g.node_shape, 0.5 + 0j), zero_edge_field(g), 6.0, 6.0)
    fr = rescale(st, (0.5, 0.5), 2.0)
    assert np.abs(fr.phi - 1.0).max() < 1e-12
    assert max(np.abs(fr.a.ax).max(), np.abs(fr.a.ay).max()) < 1e-12


def test_rescale_zero_state_errors():
    g = Grid(16, 16, 1.0, 1.0)
    st = GLState(g, np.zeros(g.node_shape, complex), zero_edge_field(g), 4.0, 4.0)
    with pytest.raises(DegenerateFieldError):
        rescale(st, (0.5, 0.5), 2.0)


def test_argmax_frame_center_is_one(minimizer_k8):
    from gl2d.norms import argmax_distance
    P, _ = argmax_distance(minimizer_k8.grid, minimizer_k8.psi)
    fr = rescale(minimizer_k8, P, 4.0)
    assert abs(fr.center_magnitude() - 1.0) < 1e-12
    assert np.abs(fr.phi).max() <= 1.0 + 1e-3


def test_frame_curl_near_unity(minimizer_k8):
    from gl2d.norms import argmax_distance
    P, _ = argmax_distance(minimizer_k8.grid, minimizer_k8.psi)
    fr = rescale(minimizer_k8, P, 4.0)
    cm = frame_curl(fr)
    iz, jz = fr.z_index
    lo_i, hi_i = max(iz - 8, 2), min(iz + 8, cm.shape[0] - 2)
    lo_j, hi_j = max(jz - 8, 2), min(jz + 8, cm.shape[1] - 2)
    window = cm[lo_i:hi_i, lo_j:hi_j]
    assert np.abs(window - 1.0).mean() <= 0.05


def test_boundary_wall_trace_zero(minimizer_k8):
    fr = rescale(minimizer_k8, (0.5, 0.0), 3.0)
    assert fr.case == "boundary"
    assert np.abs(fr.wall_normal_a()).max() < 1e-12


def test_interior_gauge_phase_removal(minimizer_k8):
    # A -> A + c with psi -> psi exp(-i kappa H c.x): |phi| pointwise invariant,
    # phi itself invariant up to one constant phase
    st = minimizer_k8
    g = st.grid
    P = (0.5, 0.5)
    R = 2.0
    fr1 = rescale(st, P, R)
    c = (0.3, -0.2)
    X, Y = g.node_coords()
    psi2 = st.psi * np.exp(-1j * st.B * (c[0] * X + c[1] * Y))
    A2 = EdgeField(st.A.ax + c[0], st.A.ay + c[1])
    fr2 = rescale(GLState(g, psi2, A2, st.kappa, st.H), P, R)
    np.testing.assert_allclose(np.abs(fr2.phi), np.abs(fr1.phi), atol=1e-11)
    sel = np.abs(fr1.phi) > 0.2
    ratio = (fr2.phi / fr1.phi)[sel]
    assert np.abs(ratio - ratio.flat[0]).max() < 1e-9
    # the rescaled potential is fully invariant
    np.testing.assert_allclose(fr2.a.ax, fr1.a.ax, atol=1e-9)


def test_synthetic_ground_state_residual():
    # frame whose phi is the discrete ground state of its own operator, S = 0:
    # the limiting-equation residual reduces to the eigenresidual
    R, ppu = 2.0, 8
    n = 2 * round(R * ppu)
    frame_grid = Grid(n, n, 2 * R, 2 * R, allow_anisotropic=True)
    F = edge_field_from_function(frame_grid, lambda x, y: 0.0 * x,
                                 lambda x, y: x - R)     # curl = 1, centered
    dim = (n + 1) * (n + 1)
    cols = []
    for k in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[k] = 1.0
        cols.append(covariant_laplacian_weighted(
            frame_grid, e.reshape(frame_grid.node_shape), F, 1.0).ravel())
    Hmat = np.array(cols).T
    wn = frame_grid.node_weights().ravel()
    Hsym = (Hmat * wn[:, None] + (Hmat * wn[:, None]).conj().T) / 2
    w, v = sla.eigh(Hsym, np.diag(wn))
    lam, vec = float(w[0]), v[:, 0]
    phi = vec.reshape(frame_grid.node_shape)
    fr = BlowupFrame(P=(0.0, 0.0), case="interior", S=0.0, Lam=lam, R=R,
                     grid=frame_grid, phi=phi, a=F, F_lin=F,
                     M=np.array([[0.0, 0.0], [1.0, 0.0]]),
                     z_index=(n // 2, n // 2))
    assert limit_residual(fr) <= 1e-2


def test_limit_residual_degenerate_error():
    g = Grid(16, 16, 2.0, 2.0, allow_anisotropic=True)
    fr = BlowupFrame(P=(0, 0), case="interior", S=1.0, Lam=1.0, R=1.0, grid=g,
                     phi=np.zeros(g.node_shape, complex), a=zero_edge_field(g),
                     F_lin=zero_edge_field(g), M=np.zeros((2, 2)), z_index=(8, 8))
    with pytest.raises(DegenerateFieldError):
        limit_residual(fr)


def test_flat_chart_curl_consistency(minimizer_k8):
    # isometric rectangle chart: curl a equals curl A through the chart up to
    # interpolation error
    fr = rescale(minimizer_k8, (0.5, 0.0), 3.0)
    cm = frame_curl(fr)
    inner = cm[8:-8, :24]
    assert np.abs(inner - 1.0).max() <= 0.1
