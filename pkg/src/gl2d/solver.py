"""Discrete Ginzburg-Landau energy, exact first variation, and minimization.

The energy of a state (psi, A) with parameters kappa, H and B = kappa*H is

    E = sum_e w_e |D psi|_e^2
      + sum_n w_n (-kappa^2 |psi_n|^2 + kappa^2/2 |psi_n|^4)
      + sum_c hx*hy * kappa^2 H^2 (curl_c A - 1)^2,

with link-variable covariant differences on edges, trapezoid node weights and
plaquette curls.  Magnetic Neumann for psi and curl A = 1 on the walls arise
as natural conditions of this functional; nothing is imposed strongly.

Minimization is Polak-Ribiere+ nonlinear CG on the joint (psi, A) variable
with diagonal preconditioning, Armijo backtracking, periodic restarts, and a
London-gauge re-projection every 50 accepted steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import EdgeField, Grid, check_node_field, discrete_curl
from .poisson import PoissonOptions, london_project, reference_potential


@dataclass
class GLState:
    grid: Grid
    psi: np.ndarray
    A: EdgeField
    kappa: float
    H: float

    def __post_init__(self):
        check_node_field(self.grid, self.psi)
        self.A.check(self.grid)
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be finite and positive, got {self.kappa}")
        if not (math.isfinite(self.H) and self.H > 0):
            raise ValueError(f"H must be finite and positive, got {self.H}")

    @property
    def B(self):
        return self.kappa * self.H

    def copy(self):
        return GLState(self.grid, self.psi.copy(), self.A.copy(), self.kappa, self.H)


@dataclass(frozen=True)
class SolveOptions:
    grad_tol: float = 1e-5
    max_iter: int = 20000
    init: str = "seeded-noise"        # normal | uniform | seeded-noise
    seed: int = 1234
    noise_amp: float = 0.1
    method: str = "lbfgs"             # lbfgs | ncg
    lbfgs_memory: int = 12
    reproject_every: int = 200
    restart_every: int = 200
    poisson: PoissonOptions = field(default_factory=lambda: PoissonOptions(tol=1e-12))

    def __post_init__(self):
        if not (0 < self.grad_tol <= 1e-3):
            raise ValueError(f"grad_tol must lie in (0, 1e-3], got {self.grad_tol}")
        if not (0 <= self.noise_amp <= 0.5):
            raise ValueError(f"noise_amp must lie in [0, 0.5], got {self.noise_amp}")
        if self.init not in ("normal", "uniform", "seeded-noise"):
            raise ValueError(f"unknown init mode {self.init!r}")
        if self.method not in ("lbfgs", "ncg"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class ResidualReport:
    r_psi: float
    r_A: float
    r_bc_psi: float
    r_bc_curl: float

    def __post_init__(self):
        for name in ("r_psi", "r_A", "r_bc_psi", "r_bc_curl"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def magnetic_length_resolution(grid: Grid, kappa, H):
    """Nodes per magnetic length 1/sqrt(kappa*H)."""
    return 1.0 / (max(grid.hx, grid.hy) * math.sqrt(kappa * H))


def grid_for(kappa, H, Lx=2.0, Ly=None, points_per_length=6, n_min=32, n_max=512):
    """Square-cell grid satisfying the resolution rule (>= points_per_length
    nodes per magnetic length), clamped to [n_min, n_max] cells per side."""
    Ly = Lx if Ly is None else Ly
    b = math.sqrt(kappa * H)
    nx = int(np.clip(math.ceil(points_per_length * Lx * b), n_min, n_max))
    ny = int(np.clip(math.ceil(points_per_length * Ly * b), n_min, n_max))
    if abs(Lx - Ly) < 1e-15:
        nx = ny = max(nx, ny)
    return Grid(nx, ny, Lx, Ly)


def initial_state(grid: Grid, kappa, H, opts: SolveOptions = SolveOptions(),
                  F: EdgeField | None = None) -> GLState:
    """Initial iterate: psi from the init mode, A = F (reference potential)."""
    if F is None:
        F = reference_potential(grid, opts.poisson)
    base = 0.0 if opts.init == "normal" else 1.0
    psi = np.full(grid.node_shape, base, dtype=complex)
    if opts.noise_amp > 0:
        rng = np.random.Generator(np.random.Philox(opts.seed))
        psi += opts.noise_amp * (rng.standard_normal(grid.node_shape)
                                 + 1j * rng.standard_normal(grid.node_shape))
    return GLState(grid, psi, F.copy(), kappa, H)


# ---------------------------------------------------------------------------
# energy and gradient
# ---------------------------------------------------------------------------

def energy_terms(state: GLState):
    """Kinetic, potential and field contributions of the discrete energy."""
    g, psi, A = state.grid, state.psi, state.A
    B = state.B
    k2 = state.kappa ** 2
    ux = np.exp(1j * B * A.ax * g.hx)
    uy = np.exp(1j * B * A.ay * g.hy)
    dx = (ux * psi[1:, :] - psi[:-1, :]) / g.hx
    dy = (uy * psi[:, 1:] - psi[:, :-1]) / g.hy
    kinetic = float((g.xedge_weights() * np.abs(dx) ** 2).sum()
                    + (g.yedge_weights() * np.abs(dy) ** 2).sum())
    dens = np.abs(psi) ** 2
    potential = float((g.node_weights() * (-k2 * dens + 0.5 * k2 * dens ** 2)).sum())
    curl = discrete_curl(g, A)
    fieldterm = float(g.cell_area * (k2 * state.H ** 2) * ((curl - 1.0) ** 2).sum())
    return kinetic, potential, fieldterm


def energy(state: GLState) -> float:
    """Value of the discrete Ginzburg-Landau functional."""
    return sum(energy_terms(state))


def energy_and_gradient(state: GLState):
    """Energy and its exact derivative with respect to the raw degrees of
    freedom: dpsi = dE/dRe(psi) + i dE/dIm(psi), and dE/dA per edge."""
    g, psi, A = state.grid, state.psi, state.A
    B = state.B
    k2 = state.kappa ** 2
    kh2 = k2 * state.H ** 2
    hx, hy = g.hx, g.hy
    wx = g.xedge_weights()
    wy = g.yedge_weights()
    wn = g.node_weights()

    ux = np.exp(1j * B * A.ax * hx)
    uy = np.exp(1j * B * A.ay * hy)
    dx = (ux * psi[1:, :] - psi[:-1, :]) / hx
    dy = (uy * psi[:, 1:] - psi[:, :-1]) / hy
    dens = np.abs(psi) ** 2
    curl = discrete_curl(g, A)
    cm1 = curl - 1.0

    E = float((wx * np.abs(dx) ** 2).sum() + (wy * np.abs(dy) ** 2).sum()
              + (wn * (-k2 * dens + 0.5 * k2 * dens ** 2)).sum()
              + g.cell_area * kh2 * (cm1 ** 2).sum())

    dpsi = 2 * wn * k2 * (dens - 1.0) * psi
    cx = wx / hx ** 2
    hop_x = ux * psi[1:, :]
    dpsi[1:, :] += 2 * cx * (psi[1:, :] - np.conj(ux) * psi[:-1, :])
    dpsi[:-1, :] += 2 * cx * (psi[:-1, :] - hop_x)
    cy = wy / hy ** 2
    hop_y = uy * psi[:, 1:]
    dpsi[:, 1:] += 2 * cy * (psi[:, 1:] - np.conj(uy) * psi[:, :-1])
    dpsi[:, :-1] += 2 * cy * (psi[:, :-1] - hop_y)

    dax = 2 * (wx * B / hx) * np.imag(hop_x * np.conj(psi[:-1, :]))
    day = 2 * (wy * B / hy) * np.imag(hop_y * np.conj(psi[:, :-1]))
    fac = 2 * g.cell_area * kh2
    dax[:, 0] += fac * cm1[:, 0] / hy
    dax[:, -1] += -fac * cm1[:, -1] / hy
    dax[:, 1:-1] += fac * (cm1[:, 1:] - cm1[:, :-1]) / hy
    day[0, :] += -fac * cm1[0, :] / hx
    day[-1, :] += fac * cm1[-1, :] / hx
    day[1:-1, :] += fac * (cm1[:-1, :] - cm1[1:, :]) / hx

    return E, dpsi, EdgeField(dax, day)


def gradient(state: GLState):
    """Exact first variation (dpsi, dA) of the discrete energy."""
    _, dpsi, dA = energy_and_gradient(state)
    return dpsi, dA


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def _boundary_length_weights(grid: Grid):
    """Per-boundary-node length weights (half of each adjacent boundary edge)."""
    sigma = np.zeros(grid.node_shape)
    sx = np.full(grid.nx + 1, grid.hx)
    sx[0] = sx[-1] = grid.hx / 2
    sy = np.full(grid.ny + 1, grid.hy)
    sy[0] = sy[-1] = grid.hy / 2
    sigma[:, 0] += sx
    sigma[:, -1] += sx
    sigma[0, :] += sy
    sigma[-1, :] += sy
    return sigma


def residuals(state: GLState) -> ResidualReport:
    """Strong-form residuals of the discrete GL system and its boundary data.

    r_psi, r_A are weighted L2 norms of the Euler-Lagrange defects per unit
    kappa^2 (resp. kappa^2 H^2); r_bc_psi is the magnetic-Neumann flux defect
    per unit boundary length and unit ||psi||_inf; r_bc_curl the sup of
    |curl A - 1| over boundary cells.
    """
    g = state.grid
    _, dpsi, dA = energy_and_gradient(state)
    wn = g.node_weights()
    wx = g.xedge_weights()
    wy = g.yedge_weights()
    k2 = state.kappa ** 2
    kh2 = k2 * state.H ** 2

    res_psi = dpsi / (2 * wn)
    r_psi = float(np.sqrt((wn * np.abs(res_psi) ** 2).sum())) / k2
    r_A = float(np.sqrt(((dA.ax / (2 * wx)) ** 2 * wx).sum()
                        + ((dA.ay / (2 * wy)) ** 2 * wy).sum())) / kh2

    sigma = _boundary_length_weights(g)
    mask = sigma > 0
    sup_psi = float(np.abs(state.psi).max())
    if sup_psi == 0.0:
        r_bc_psi = 0.0
    else:
        r_bc_psi = float((np.abs(dpsi)[mask] / (2 * sigma[mask])).max()) / (k2 * sup_psi)

    curl = discrete_curl(g, state.A)
    ring = np.zeros(g.cell_shape, dtype=bool)
    ring[0, :] = ring[-1, :] = True
    ring[:, 0] = ring[:, -1] = True
    r_bc_curl = float(np.abs(curl[ring] - 1.0).max())
    return ResidualReport(r_psi, r_A, r_bc_psi, r_bc_curl)


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------

def _pack(psi, A):
    return np.concatenate([psi.real.ravel(), psi.imag.ravel(),
                           A.ax.ravel(), A.ay.ravel()])


def _unpack(grid: Grid, v):
    n_node = (grid.nx + 1) * (grid.ny + 1)
    n_xe = grid.nx * (grid.ny + 1)
    re = v[:n_node].reshape(grid.node_shape)
    im = v[n_node:2 * n_node].reshape(grid.node_shape)
    ax = v[2 * n_node:2 * n_node + n_xe].reshape(grid.xedge_shape)
    ay = v[2 * n_node + n_xe:].reshape(grid.yedge_shape)
    return re + 1j * im, EdgeField(ax, ay)


def _precond_diag(state: GLState):
    g = state.grid
    B = state.B
    k2 = state.kappa ** 2
    kh2 = k2 * state.H ** 2
    wn = g.node_weights()
    wx = g.xedge_weights()
    wy = g.yedge_weights()
    mpsi = 2 * wn * k2 * np.ones(g.node_shape)
    cx = wx / g.hx ** 2
    cy = wy / g.hy ** 2
    mpsi[1:, :] += 2 * cx
    mpsi[:-1, :] += 2 * cx
    mpsi[:, 1:] += 2 * cy
    mpsi[:, :-1] += 2 * cy
    s = 0.5  # nominal |psi|^2 scale in the kinetic A-diagonal
    fac = 2 * g.cell_area * kh2
    max_ = 2 * wx * B ** 2 * s + fac / g.hy ** 2 * np.where(
        (np.arange(g.ny + 1) == 0) | (np.arange(g.ny + 1) == g.ny), 1.0, 2.0)
    may = 2 * wy * B ** 2 * s + fac / g.hx ** 2 * np.where(
        (np.arange(g.nx + 1)[:, None] == 0) | (np.arange(g.nx + 1)[:, None] == g.nx), 1.0, 2.0)
    return np.concatenate([mpsi.ravel(), mpsi.ravel(),
                           np.broadcast_to(max_, g.xedge_shape).ravel(),
                           np.broadcast_to(may, g.yedge_shape).ravel()])


def _grad_scale(state: GLState):
    """Normalization making the stopping rule resolution- and size-consistent."""
    return state.kappa ** 2 * (1.0 + state.H) * math.sqrt(state.grid.area)


def _weighted_gnorm(grid: Grid, dpsi, dA):
    wn = grid.node_weights()
    wx = grid.xedge_weights()
    wy = grid.yedge_weights()
    return math.sqrt(float((np.abs(dpsi / (2 * wn)) ** 2 * wn).sum()
                           + ((dA.ax / (2 * wx)) ** 2 * wx).sum()
                           + ((dA.ay / (2 * wy)) ** 2 * wy).sum()))


class _LbfgsMemory:
    """Two-loop recursion with a diagonal seed Hessian."""

    def __init__(self, m, diag):
        self.m = m
        self.diag = diag
        self.s = []
        self.y = []
        self.rho = []

    def clear(self):
        self.s.clear()
        self.y.clear()
        self.rho.clear()

    def push(self, s, y):
        ys = float(y @ s)
        if ys <= 1e-12 * math.sqrt(float(s @ s) * float(y @ y)):
            return  # curvature condition failed; skip the pair
        if len(self.s) == self.m:
            self.s.pop(0)
            self.y.pop(0)
            self.rho.pop(0)
        self.s.append(s)
        self.y.append(y)
        self.rho.append(1.0 / ys)

    def direction(self, grad):
        q = grad.copy()
        alphas = []
        for s, y, rho in zip(reversed(self.s), reversed(self.y), reversed(self.rho)):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        r = q / self.diag
        if self.s:
            y, s = self.y[-1], self.s[-1]
            r *= float(y @ s) / float(y @ (y / self.diag))
        for (s, y, rho), a in zip(zip(self.s, self.y, self.rho), reversed(alphas)):
            b = rho * float(y @ r)
            r += (a - b) * s
        return -r


def minimize(state: GLState, opts: SolveOptions = SolveOptions()):
    """Minimize the GL energy from `state`.  Returns (state, report, stats).

    The returned state has relative gradient norm <= grad_tol (else it is
    flagged non-converged in stats), is re-projected to the London gauge, and
    carries a populated residual report.  L-BFGS with a diagonal seed by
    default; Polak-Ribiere+ nonlinear CG selectable via opts.method.
    """
    g = state.grid
    kappa, H, B = state.kappa, state.H, state.B
    scale = _grad_scale(state)
    M = _precond_diag(state)

    def eval_eg(v):
        psi, A = _unpack(g, v)
        st = GLState(g, psi, A, kappa, H)
        E, dpsi, dA = energy_and_gradient(st)
        return E, _pack(dpsi, dA), (dpsi, dA)

    def eval_e(v):
        psi, A = _unpack(g, v)
        return energy(GLState(g, psi, A, kappa, H))

    x = _pack(state.psi, state.A)
    E, grad_vec, parts = eval_eg(x)
    gnorm = _weighted_gnorm(g, *parts)
    stats = {"iterations": 0, "energy_evals": 1, "converged": gnorm <= opts.grad_tol * scale,
             "energy": E, "rel_grad": gnorm / scale, "energy_history": [E]}
    use_lbfgs = opts.method == "lbfgs"
    mem = _LbfgsMemory(opts.lbfgs_memory, M)
    alpha = 1.0
    z = grad_vec / M
    d = mem.direction(grad_vec) if use_lbfgs else -z
    gz = float(grad_vec @ z)
    it = 0
    while not stats["converged"] and it < opts.max_iter:
        it += 1
        slope = float(grad_vec @ d)
        if slope >= 0:  # lost descent: restart along steepest preconditioned
            mem.clear()
            d = -z
            slope = -gz
        a = alpha if not use_lbfgs else min(alpha, 1.0)
        accepted = False
        for _ in range(60):
            E_new = eval_e(x + a * d)
            stats["energy_evals"] += 1
            if E_new <= E + 1e-4 * a * slope:
                accepted = True
                break
            a *= 0.5
        if not accepted:
            break  # stagnation at rounding level
        x_old, gvec_old, gz_old = x, grad_vec, gz
        x = x + a * d
        alpha = min(a * 2.0, 1e6)
        reprojected = opts.reproject_every and it % opts.reproject_every == 0
        if reprojected:
            psi, A = _unpack(g, x)
            A, chi = london_project(g, A, opts.poisson, return_gauge=True)
            psi = psi * np.exp(1j * B * chi)
            x = _pack(psi, A)
        E, grad_vec, parts = eval_eg(x)
        stats["energy_evals"] += 1
        stats["energy_history"].append(E)
        gnorm = _weighted_gnorm(g, *parts)
        if gnorm <= opts.grad_tol * scale:
            stats["converged"] = True
            break
        z = grad_vec / M
        gz = float(grad_vec @ z)
        if use_lbfgs:
            if reprojected:
                mem.clear()   # gauge change invalidates the curvature pairs
            else:
                mem.push(x - x_old, grad_vec - gvec_old)
            d = mem.direction(grad_vec)
        else:
            if reprojected or it % opts.restart_every == 0:
                beta = 0.0
            else:
                beta = max(0.0, float((grad_vec - gvec_old) @ z) / gz_old)
            d = -z + beta * d
    stats["iterations"] = it
    stats["energy"] = E
    stats["rel_grad"] = gnorm / scale

    psi, A = _unpack(g, x)
    A, chi = london_project(g, A, opts.poisson, return_gauge=True)
    psi = psi * np.exp(1j * B * chi)
    out = GLState(g, psi, A, kappa, H)
    report = residuals(out)
    return out, report, stats


def solve(grid: Grid, kappa, H, opts: SolveOptions = SolveOptions(),
          F: EdgeField | None = None):
    """Convenience wrapper: initialize per `opts` and minimize."""
    st = initial_state(grid, kappa, H, opts, F=F)
    return minimize(st, opts)


def _prolong(state: GLState, fine: Grid) -> GLState:
    """Bilinear transfer of (psi, A) onto a finer grid of the same rectangle."""
    from .grid import interpolate_edge, interpolate_node
    g = state.grid
    Xn, Yn = fine.node_coords()
    psi = interpolate_node(g, state.psi, Xn, Yn)
    xex, xey = fine.xedge_coords()
    yex, yey = fine.yedge_coords()
    ax, _ = interpolate_edge(g, state.A, xex, xey)
    _, ay = interpolate_edge(g, state.A, yex, yey)
    return GLState(fine, psi, EdgeField(ax, ay), state.kappa, state.H)


def solve_cascade(grid: Grid, kappa, H, opts: SolveOptions = SolveOptions(),
                  coarsest: int = 32, direct_below: float = 30.0, retry: bool = True):
    """Robust solve used by sweeps.

    For kappa*H <= direct_below the landscape is dominated by a few weakly
    interacting vortices and a direct fine-grid minimization from seeded noise
    is both faster and more reliable.  Above it, minimize on a grid hierarchy
    (noise drawn once, on the coarsest level) and polish upward.  If the
    primary route fails to converge, one deterministic direct retry with a
    shifted seed is attempted and the better (converged, then lower-energy)
    result is kept.
    """
    stats_acc = {"iterations": 0, "energy_evals": 0, "levels": [grid.nx]}
    if kappa * H <= direct_below:
        state, report, stats = solve(grid, kappa, H, opts)
        stats_acc["iterations"] = stats["iterations"]
        stats_acc["energy_evals"] = stats["energy_evals"]
    else:
        # coarsest level still has to resolve the magnetic length (~3 nodes)
        min_n = max(coarsest, math.ceil(3.0 * max(grid.Lx, grid.Ly)
                                        * math.sqrt(kappa * H)))
        sizes = [grid.nx]
        while sizes[-1] // 2 >= min_n and sizes[-1] % 2 == 0:
            sizes.append(sizes[-1] // 2)
        sizes.reverse()
        stats_acc["levels"] = sizes
        state = None
        for n in sizes:
            final = n == grid.nx
            level = grid if final else Grid(n, max(4, n * grid.ny // grid.nx),
                                            grid.Lx, grid.Ly)
            # coarse levels only seed the next one: loosened tolerance
            level_opts = opts if final else SolveOptions(
                grad_tol=min(1e-3, 10 * opts.grad_tol), max_iter=min(6000, opts.max_iter),
                init=opts.init, seed=opts.seed, noise_amp=opts.noise_amp,
                method=opts.method, lbfgs_memory=opts.lbfgs_memory,
                reproject_every=opts.reproject_every, restart_every=opts.restart_every,
                poisson=opts.poisson)
            if state is None:
                state = initial_state(level, kappa, H, opts)
            else:
                state = _prolong(state, level)
                A, chi = london_project(level, state.A, opts.poisson, return_gauge=True)
                state = GLState(level, state.psi * np.exp(1j * state.B * chi), A, kappa, H)
            state, report, stats = minimize(state, level_opts)
            stats_acc["iterations"] += stats["iterations"]
            stats_acc["energy_evals"] += stats["energy_evals"]
    if retry and not stats["converged"]:
        opts2 = SolveOptions(grad_tol=opts.grad_tol, max_iter=opts.max_iter,
                             init=opts.init, seed=opts.seed + 7919,
                             noise_amp=opts.noise_amp, poisson=opts.poisson)
        state2, report2, stats2 = solve(grid, kappa, H, opts2)
        stats_acc["iterations"] += stats2["iterations"]
        stats_acc["energy_evals"] += stats2["energy_evals"]
        better = stats2["converged"] and (not stats["converged"]
                                          or stats2["energy"] < stats["energy"])
        if better:
            state, report, stats = state2, report2, stats2
    stats_acc.update(converged=stats["converged"], energy=stats["energy"],
                     rel_grad=stats["rel_grad"])
    return state, report, stats_acc
