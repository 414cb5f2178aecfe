import numpy as np
import pytest

from gl2d.errors import ChartError, NormSpecError
from gl2d.grid import Grid, zero_edge_field
from gl2d.identities import (chart_metric_at_wall, curl_transform_check,
                             ibp_identity_gap, ibp_identity_report,
                             lemma_intparts_ratio)
from gl2d.solver import GLState


def test_zero_field_degenerate(grid32_L2):
    st = GLState(grid32_L2, np.zeros(grid32_L2.node_shape, complex),
                 zero_edge_field(grid32_L2), 1.0, 1.0)
    rep = ibp_identity_report(st)
    assert rep.degenerate and rep.gap == 0.0
    assert lemma_intparts_ratio(st, 1.0, np.inf) == 0.0


def _cosine_gap(n):
    # B ~ 0, psi = cos cos satisfies the continuum Neumann condition; the
    # identity degenerates to sum ||d_j d_k psi||^2 = ||Lap psi||^2 + O(h)
    g = Grid(n, n, 1.0, 1.0)
    X, Y = g.node_coords()
    psi = (np.cos(np.pi * X) * np.cos(np.pi * Y)).astype(complex)
    st = GLState(g, psi, zero_edge_field(g), 1.0, 1e-12)
    return ibp_identity_gap(st)


@pytest.mark.parametrize("n", [32, 64, 128])
def test_ibp_gap_first_order_at_zero_field(n):
    assert _cosine_gap(n) <= 1.2 / n


def test_ibp_gap_refinement_decay():
    gaps = [_cosine_gap(n) for n in (32, 64)]
    assert gaps[0] / gaps[1] >= 1.7


def test_ibp_on_minimizer(minimizer_k4_64):
    state, report, _, _ = minimizer_k4_64
    rep = ibp_identity_report(state)
    assert not rep.degenerate
    assert rep.bc_ok                       # converged minimizers pass the BC gate
    assert rep.gap <= 0.05


def test_lemma_ratio_bounds(minimizer_k4_64):
    state, _, _, _ = minimizer_k4_64
    ratio = lemma_intparts_ratio(state, 1.0, np.inf)
    assert 0 < ratio <= 1.05
    rep = ibp_identity_report(state)
    assert ratio <= 1.0 + 5.0 * rep.gap      # lemma follows from the identity
    with pytest.raises(NormSpecError):
        lemma_intparts_ratio(state, 0.5, 2.0)


def test_lemma_reduces_when_curl_is_exact(minimizer_k4_64, F_128):
    # with A = F the correction terms carry curl A - 1 ~ 0
    state, _, _, _ = minimizer_k4_64
    g = state.grid
    from gl2d.poisson import PoissonOptions, reference_potential
    F = reference_potential(g, PoissonOptions(tol=1e-12))
    stF = GLState(g, state.psi, F, state.kappa, state.H)
    rep = ibp_identity_report(stF)
    wn = g.node_weights()
    psi_l2_sq = float((wn * np.abs(stF.psi) ** 2).sum())
    reduced = 3 * stF.B ** 2 * psi_l2_sq + 2 * rep.terms["Hpsi2"]
    ratio = lemma_intparts_ratio(stF, 1.0, np.inf)
    assert abs(ratio - rep.lhs / reduced) < 5e-4 * ratio


# ---------------------------------------------------------------------------
# boundary-chart curl transformation
# ---------------------------------------------------------------------------

AFFINE = (lambda x, y: (-y / 2, x / 2), lambda x, y: np.ones_like(x))


def test_chart_affine_field_small_deviation():
    dev = curl_transform_check(1.0, 0.5, *AFFINE, n=256)
    assert dev <= 1e-4          # in fact exact: the pullback is quadratic


def test_chart_straight_boundary_exact():
    dev = curl_transform_check(np.inf, 0.5, *AFFINE, n=64)
    assert dev == 0.0


def test_chart_metric_identity_at_wall():
    M = chart_metric_at_wall(1.0, np.linspace(-0.5, 0.5, 11))
    assert np.abs(M - np.eye(2)).max() < 1e-15


def test_chart_second_order_decay():
    def A_fn(x, y):
        return (-y / 2 + 0.1 * np.sin(3 * y), x / 2 + 0.1 * np.cos(2 * x))

    def curl_fn(x, y):
        return 1.0 - 0.2 * np.sin(2 * x) - 0.3 * np.cos(3 * y)

    devs = [curl_transform_check(1.0, 0.5, A_fn, curl_fn, n=n) for n in (64, 128, 256)]
    assert devs[0] / devs[1] >= 3.5
    assert devs[1] / devs[2] >= 3.5


def test_chart_degeneracy_error():
    with pytest.raises(ChartError):
        curl_transform_check(1.0, 1.0, *AFFINE)
    with pytest.raises(ChartError):
        curl_transform_check(2.0, -0.1, *AFFINE)
