"""Poisson solves, the reference potential F, and London-gauge projection.

All solves are matrix-free conjugate gradient on symmetric 5-point Laplacians
with diagonal scaling.  Dirichlet problems eliminate boundary values; Neumann
problems use the natural (mirrored-ghost, zero-flux) operator with mean-zero
pinning and accept inhomogeneous flux data through the right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompatibilityError, ShapeError, SolverError
from .grid import EdgeField, Grid, discrete_div, node_grad


@dataclass(frozen=True)
class PoissonOptions:
    tol: float = 1e-10          # relative residual target
    max_iter: int = 20000

    def __post_init__(self):
        if not (0 < self.tol <= 1e-4):
            raise ValueError(f"tol must lie in (0, 1e-4], got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def _cg(apply_op, rhs, diag, tol, max_iter, project=None):
    """Preconditioned CG for SPD operators; `project` removes a known null space."""
    rhs = rhs.copy()
    if project is not None:
        rhs = project(rhs)
    rhs_norm = np.sqrt(np.vdot(rhs, rhs).real)
    x = np.zeros_like(rhs)
    if rhs_norm == 0.0:
        return x, 0.0, 0
    r = rhs.copy()
    z = r / diag
    p = z.copy()
    rz = np.vdot(r, z).real
    for it in range(1, max_iter + 1):
        ap = apply_op(p)
        if project is not None:
            ap = project(ap)
        alpha = rz / np.vdot(p, ap).real
        x += alpha * p
        r -= alpha * ap
        res = np.sqrt(np.vdot(r, r).real)
        if res <= tol * rhs_norm:
            if project is not None:
                x = project(x)
            return x, res / rhs_norm, it
        z = r / diag
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not converge in {max_iter} iterations (relative residual {res / rhs_norm:.3e})",
        residual=res / rhs_norm, iterations=max_iter,
    )


# ---------------------------------------------------------------------------
# node-centered Dirichlet
# ---------------------------------------------------------------------------

def poisson_dirichlet(grid: Grid, rhs, opts: PoissonOptions = PoissonOptions()):
    """Solve Delta u = rhs at nodes with u = 0 on boundary nodes."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != grid.node_shape:
        raise ShapeError(f"rhs shape {rhs.shape} does not match {grid.node_shape}")
    hx2, hy2 = grid.hx ** 2, grid.hy ** 2
    inner = rhs[1:-1, 1:-1]

    def apply_op(u):
        # -Delta_h on interior nodes, zero Dirichlet ring
        full = np.zeros(grid.node_shape)
        full[1:-1, 1:-1] = u
        lap = ((full[2:, 1:-1] - 2 * u + full[:-2, 1:-1]) / hx2
               + (full[1:-1, 2:] - 2 * u + full[1:-1, :-2]) / hy2)
        return -lap

    diag = np.full(inner.shape, 2 / hx2 + 2 / hy2)
    sol, _, _ = _cg(apply_op, -inner, diag, opts.tol, opts.max_iter)
    out = np.zeros(grid.node_shape)
    out[1:-1, 1:-1] = sol
    return out


def _cell_poisson_dirichlet(grid: Grid, rhs, opts: PoissonOptions):
    """Cell-centered Delta u = rhs with u = 0 on the walls via mirror ghosts."""
    hx2, hy2 = grid.hx ** 2, grid.hy ** 2

    def apply_op(u):
        lap = np.zeros_like(u)
        lap[:-1, :] += (u[1:, :] - u[:-1, :]) / hx2
        lap[1:, :] += (u[:-1, :] - u[1:, :]) / hx2
        lap[0, :] += -2 * u[0, :] / hx2      # ghost = -u
        lap[-1, :] += -2 * u[-1, :] / hx2
        lap[:, :-1] += (u[:, 1:] - u[:, :-1]) / hy2
        lap[:, 1:] += (u[:, :-1] - u[:, 1:]) / hy2
        lap[:, 0] += -2 * u[:, 0] / hy2
        lap[:, -1] += -2 * u[:, -1] / hy2
        return -lap

    rhs = np.asarray(rhs, dtype=float)
    diag = np.full(grid.cell_shape, 2 / hx2 + 2 / hy2)
    diag[0, :] += 1 / hx2
    diag[-1, :] += 1 / hx2
    diag[:, 0] += 1 / hy2
    diag[:, -1] += 1 / hy2
    sol, _, _ = _cg(apply_op, -rhs, diag, opts.tol, opts.max_iter)
    return sol


# ---------------------------------------------------------------------------
# node-centered Neumann
# ---------------------------------------------------------------------------

def _neumann_operator(grid: Grid):
    wn = grid.node_weights()

    def apply_op(chi):
        g = node_grad(grid, chi)
        return -discrete_div(grid, g) * wn

    diag = np.zeros(grid.node_shape)
    wx = grid.xedge_weights() / grid.hx ** 2
    wy = grid.yedge_weights() / grid.hy ** 2
    diag[:-1, :] += wx
    diag[1:, :] += wx
    diag[:, :-1] += wy
    diag[:, 1:] += wy
    return apply_op, diag, wn


def boundary_edge_lengths(grid: Grid):
    """Lengths of the boundary edges, keyed by wall, matching flux data layout."""
    return {
        "bottom": np.full(grid.nx, grid.hx),
        "top": np.full(grid.nx, grid.hx),
        "left": np.full(grid.ny, grid.hy),
        "right": np.full(grid.ny, grid.hy),
    }


def _flux_to_nodes(grid: Grid, flux):
    """Spread per-boundary-edge flux values onto boundary nodes (half per endpoint)."""
    out = np.zeros(grid.node_shape)
    b = np.asarray(flux["bottom"], dtype=float) * grid.hx / 2
    out[:-1, 0] += b
    out[1:, 0] += b
    t = np.asarray(flux["top"], dtype=float) * grid.hx / 2
    out[:-1, -1] += t
    out[1:, -1] += t
    l = np.asarray(flux["left"], dtype=float) * grid.hy / 2
    out[0, :-1] += l
    out[0, 1:] += l
    r = np.asarray(flux["right"], dtype=float) * grid.hy / 2
    out[-1, :-1] += r
    out[-1, 1:] += r
    return out


def poisson_neumann(grid: Grid, rhs, flux=None, opts: PoissonOptions = PoissonOptions()):
    """Solve Delta u = rhs, du/dnu = flux; solution normalized to zero mean.

    `flux` maps wall name -> per-boundary-edge values (x-edges for bottom/top,
    y-edges for left/right); None means homogeneous.  Raises CompatibilityError
    unless sum(rhs * node weight) matches sum(flux * edge length) to 1e-10
    relative.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != grid.node_shape:
        raise ShapeError(f"rhs shape {rhs.shape} does not match {grid.node_shape}")
    apply_op, diag, wn = _neumann_operator(grid)
    total_w = wn.sum()

    flux_nodes = np.zeros(grid.node_shape)
    flux_total = 0.0
    if flux is not None:
        flux_nodes = _flux_to_nodes(grid, flux)
        flux_total = float(flux_nodes.sum())
    vol = float((rhs * wn).sum())
    scale = max(abs(vol), abs(flux_total), 1e-30)
    if abs(vol - flux_total) > 1e-10 * max(scale, 1.0):
        raise CompatibilityError(
            f"incompatible Neumann data: sum rhs*area = {vol:.3e} "
            f"but sum flux*length = {flux_total:.3e}"
        )

    b = -(rhs * wn - flux_nodes)

    # chi -> -div_w(grad chi) * wn equals G^T W_e G: symmetric in the plain
    # Euclidean inner product with null space the constants.
    def project_mean(v):
        return v - v.mean()

    sol, _, _ = _cg(apply_op, b, diag, opts.tol, opts.max_iter, project=project_mean)
    sol -= (sol * wn).sum() / total_w
    return sol


# ---------------------------------------------------------------------------
# reference potential and London projection
# ---------------------------------------------------------------------------

def london_project(grid: Grid, A: EdgeField, opts: PoissonOptions = PoissonOptions(),
                   return_gauge=False):
    """Project onto the London gauge: A' = A - grad chi with div_w A' <= tol.

    The plaquette curl is preserved identically (curl grad = 0) and the normal
    trace of the canonical extension stays structurally zero.
    """
    A.check(grid)
    apply_op, diag, wn = _neumann_operator(grid)
    rhs = discrete_div(grid, A) * wn

    def project_mean(v):
        return v - v.mean()

    chi, _, _ = _cg(apply_op, -rhs, diag, opts.tol, opts.max_iter, project=project_mean)
    chi -= (chi * wn).sum() / wn.sum()
    Ap = A - node_grad(grid, chi)
    if return_gauge:
        return Ap, chi
    return Ap


def reference_potential(grid: Grid, opts: PoissonOptions = PoissonOptions()) -> EdgeField:
    """The potential F with curl F = 1, div F = 0, F.nu = 0.

    Built as the perpendicular gradient of the cell-centered stream function
    solving Delta u = 1, u = 0 on the walls, then London-projected.  The cell
    construction gives curl F = 1 in every cell exactly up to the CG residual;
    the projection does not change any plaquette curl.
    """
    u = _cell_poisson_dirichlet(grid, np.ones(grid.cell_shape), opts)
    # F = (-d_y u, d_x u) with mirror ghosts u_ghost = -u_first (u = 0 on walls)
    ax = np.zeros(grid.xedge_shape)
    ax[:, 1:-1] = -(u[:, 1:] - u[:, :-1]) / grid.hy
    ax[:, 0] = -(u[:, 0] - (-u[:, 0])) / grid.hy
    ax[:, -1] = -((-u[:, -1]) - u[:, -1]) / grid.hy
    ay = np.zeros(grid.yedge_shape)
    ay[1:-1, :] = (u[1:, :] - u[:-1, :]) / grid.hx
    ay[0, :] = (u[0, :] - (-u[0, :])) / grid.hx
    ay[-1, :] = ((-u[-1, :]) - u[-1, :]) / grid.hx
    return london_project(grid, EdgeField(ax, ay), opts)
