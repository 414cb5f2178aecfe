"""Numerical verification of the magnetic integration-by-parts identity, the
derived two-exponent inequality, and the boundary-chart curl transformation.

The identity under test, for states satisfying magnetic Neumann conditions:

    sum_{j,k} ||D_j D_k psi||_2^2
        = B^2 int (curl A)^2 |psi|^2 + int |H psi|^2
          + 2B int (curl A) Im(D_1 psi conj(D_2 psi)).

All operands come from grid_core operators (H psi = D_1^2 psi + D_2^2 psi from
the covariant second differences, never from the PDE right-hand side), so the
check is independent of the solver.  Discrete boundary terms vanish only to
O(h); the relative gap decays at first order under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartError, NormSpecError
from .grid import Grid, covariant_diff, discrete_curl, second_covariant
from .norms import NormSpec, cell_lattice, node_lattice, norm, p_conjugate
from .solver import GLState, residuals


def _cell_mean_node(f):
    return 0.25 * (f[:-1, :-1] + f[1:, :-1] + f[:-1, 1:] + f[1:, 1:])


def _edge_pairs_to_cells(grid: Grid, dx, dy):
    """Average the two x-edge (resp. y-edge) covariant differences of each cell."""
    d1c = 0.5 * (dx[:, :-1] + dx[:, 1:])
    d2c = 0.5 * (dy[:-1, :] + dy[1:, :])
    return d1c, d2c


@dataclass
class IbpReport:
    gap: float
    lhs: float
    rhs: float
    terms: dict
    degenerate: bool
    bc_residual: float
    bc_ok: bool


def ibp_identity_report(state: GLState, bc_gate: float | None = None) -> IbpReport:
    """Evaluate both sides of the integration-by-parts identity.

    bc_gate: threshold on the magnetic-Neumann residual above which the state
    is flagged (checks still computed, flagged not-gated).  Default 10 * 1e-5.
    """
    g, psi, A, B = state.grid, state.psi, state.A, state.B
    if bc_gate is None:
        bc_gate = 10 * 1e-5
    if not np.abs(psi).max() > 0:
        return IbpReport(0.0, 0.0, 0.0, {}, True, 0.0, True)

    wn = g.node_weights()
    area = g.cell_area

    d11 = second_covariant(g, psi, A, B, 1, 1)
    d22 = second_covariant(g, psi, A, B, 2, 2)
    d12 = second_covariant(g, psi, A, B, 1, 2)
    d21 = second_covariant(g, psi, A, B, 2, 1)
    lhs = float((wn * (np.abs(d11) ** 2 + np.abs(d22) ** 2)).sum()
                + area * (np.abs(d12) ** 2 + np.abs(d21) ** 2).sum())

    curl = discrete_curl(g, A)
    psi2_c = _cell_mean_node(np.abs(psi) ** 2)
    t_curl = float(B ** 2 * area * (curl ** 2 * psi2_c).sum())

    hpsi = d11 + d22
    t_h = float((wn * np.abs(hpsi) ** 2).sum())

    dx = covariant_diff(g, psi, A, B, 1)
    dy = covariant_diff(g, psi, A, B, 2)
    d1c, d2c = _edge_pairs_to_cells(g, dx, dy)
    t_cross = float(2 * B * area * (curl * np.imag(d1c * np.conj(d2c))).sum())

    rhs = t_curl + t_h + t_cross
    gap = abs(lhs - rhs) / max(lhs, rhs, 1e-300)
    bc = residuals(state).r_bc_psi
    return IbpReport(gap, lhs, rhs,
                     {"curl2": t_curl, "Hpsi2": t_h, "cross": t_cross},
                     False, bc, bc <= bc_gate)


def ibp_identity_gap(state: GLState) -> float:
    """Relative gap |LHS - RHS| / max(LHS, RHS) of the identity."""
    return ibp_identity_report(state).gap


def lemma_intparts_ratio(state: GLState, p1, p2) -> float:
    """LHS/RHS of the two-exponent inequality

        sum ||D_j D_k psi||^2 <= 3 B^2 ||psi||_2^2 + 2 ||H psi||_2^2
            + 2 B^2 ||curl A - 1||_{2 p1}^2 ||psi||_{2 q1}^2
            + 2 B  ||curl A - 1||_{p2}   ||D psi||_{2 q2}^2,

    q_j the conjugate exponent of p_j.  Expected <= 1 + O(h).
    """
    for p in (p1, p2):
        if not (p >= 1):
            raise NormSpecError(f"exponents must lie in [1, inf], got {p}")
    g, psi, A, B = state.grid, state.psi, state.A, state.B
    if not np.abs(psi).max() > 0:
        return 0.0
    q1, q2 = p_conjugate(p1), p_conjugate(p2)

    rep = ibp_identity_report(state)
    lhs = rep.lhs
    t_h = rep.terms["Hpsi2"]

    wn = g.node_weights()
    psi_l2_sq = float((wn * np.abs(psi) ** 2).sum())
    cm1 = discrete_curl(g, A) - 1.0

    def lp_cells(f, p):
        return norm(g, cell_lattice(g, f), NormSpec("Lp", p=p))

    def lp_nodes(f, p):
        return norm(g, node_lattice(g, f), NormSpec("Lp", p=p))

    dx = covariant_diff(g, psi, A, B, 1)
    dy = covariant_diff(g, psi, A, B, 2)
    d1c, d2c = _edge_pairs_to_cells(g, dx, dy)
    dpsi_sq = np.abs(d1c) ** 2 + np.abs(d2c) ** 2   # |D psi|^2 at cells

    # ||D psi||_{2q}^2 = || |D psi|^2 ||_q
    dpsi_2q2_sq = lp_cells(dpsi_sq, q2)
    psi_2q1_sq = lp_nodes(np.abs(psi) ** 2, q1)

    rhs = (3 * B ** 2 * psi_l2_sq + 2 * t_h
           + 2 * B ** 2 * lp_cells(cm1, 2 * p1) ** 2 * psi_2q1_sq
           + 2 * B * lp_cells(cm1, p2) * dpsi_2q2_sq)
    return lhs / max(rhs, 1e-300)


# ---------------------------------------------------------------------------
# boundary-chart curl transformation
# ---------------------------------------------------------------------------

def curl_transform_check(R0: float, t_max: float, A_fn, curlA_fn,
                         n: int = 256, s_max: float | None = None) -> float:
    """Max deviation between the chart curl and (1 - t k(s)) curl A o Phi.

    The chart follows a circular arc of curvature k = 1/R0 (straight boundary
    for R0 = inf): Phi(s,t) = gamma(s) + t nu(s), and the pulled-back field is
    A~ = (DPhi)^t (A o Phi).  Both sides are evaluated by centered differences
    on an (s,t) lattice of spacing 1/n; for smooth A the deviation is O(h^2).

    A_fn(x, y) -> (A1, A2); curlA_fn(x, y) -> curl A, both vectorized.
    """
    if not (t_max > 0):
        raise ChartError(f"t_max must be positive, got {t_max}")
    straight = math.isinf(R0)
    if not straight and t_max >= R0:
        raise ChartError(f"chart degenerate: t_max={t_max} >= R0={R0}")
    k = 0.0 if straight else 1.0 / R0
    if s_max is None:
        s_max = t_max
    h = 1.0 / n
    s = np.arange(-s_max, s_max + h / 2, h)
    t = np.arange(0.0, t_max + h / 2, h)
    S, T = np.meshgrid(s, t, indexing="ij")

    if straight:
        gx, gy = S, np.zeros_like(S)
        tx, ty = np.ones_like(S), np.zeros_like(S)   # gamma'
        nx_, ny_ = np.zeros_like(S), np.ones_like(S)  # inward normal
    else:
        ang = S / R0
        gx, gy = R0 * np.cos(ang), R0 * np.sin(ang)
        tx, ty = -np.sin(ang), np.cos(ang)
        nx_, ny_ = -np.cos(ang), -np.sin(ang)        # {gamma', nu} positively oriented
    X = gx + T * nx_
    Y = gy + T * ny_

    a1, a2 = A_fn(X, Y)
    At1 = (1.0 - T * k) * (tx * a1 + ty * a2)
    At2 = nx_ * a1 + ny_ * a2

    ds_At2 = (At2[2:, 1:-1] - At2[:-2, 1:-1]) / (2 * h)
    dt_At1 = (At1[1:-1, 2:] - At1[1:-1, :-2]) / (2 * h)
    lhs = ds_At2 - dt_At1
    rhs = (1.0 - T[1:-1, 1:-1] * k) * curlA_fn(X[1:-1, 1:-1], Y[1:-1, 1:-1])
    return float(np.abs(lhs - rhs).max())


def chart_metric_at_wall(R0: float, s, t=0.0):
    """M = [(DPhi)^t DPhi]^{-1} at chart points; equals Id on the wall t=0."""
    k = 0.0 if math.isinf(R0) else 1.0 / R0
    s = np.asarray(s, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), s.shape)
    g11 = (1.0 - t * k) ** 2
    M = np.zeros(s.shape + (2, 2))
    M[..., 0, 0] = 1.0 / g11
    M[..., 1, 1] = 1.0
    return M
