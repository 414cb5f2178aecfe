"""Blow-up rescaling to the magnetic length scale and residuals of the
limiting equations.

Around a point P of a state (psi, A) with b = sqrt(kappa H), the rescaled pair
on the frame ball is

    a(y)   = b * (A(P + y/b) - A(P)),
    phi(y) = S^{-1} * exp(+i b A(P).y) * psi(P + y/b),      S = ||psi||_inf,

which turns D = -i grad + kappa H A into the unit-field operator
-i grad_y + a(y) acting on phi.  (The phase sign is fixed by that identity:
with it, (-i grad_y + a) phi equals the transported b^{-1} D psi.)

Interior frames live on [-R, R]^2; boundary frames are pushed through the
wall chart (a rotation for the rectangle) onto [-R, R] x [0, ~R] with the
wall at tau = 0, where e2 . a vanishes structurally.  The tau spacing is
adjusted so the source point P lands exactly on a frame node.

The limiting-equation residual uses the linearized field F(y) = (DA(P)) y and
the natural magnetic Neumann closure on the wall row; the three artificial
cut edges are excluded from the residual mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError, DomainError
from .grid import (EdgeField, Grid, covariant_laplacian_weighted, discrete_curl,
                   interpolate_edge, interpolate_node)
from .solver import GLState

_FACES = {
    # face: (tangent, inward normal), {tangent, normal} positively oriented
    "bottom": ((1.0, 0.0), (0.0, 1.0)),
    "right": ((0.0, 1.0), (-1.0, 0.0)),
    "top": ((-1.0, 0.0), (0.0, -1.0)),
    "left": ((0.0, -1.0), (1.0, 0.0)),
}


@dataclass
class BoundaryChart:
    """Flat wall chart Phi(s, t) = Q + s*tangent + t*normal of a rectangle face."""

    face: str
    origin: tuple          # Q, the foot of the blow-up point on the face
    tangent: tuple
    normal: tuple
    curvature: float = 0.0

    def to_xy(self, s, t):
        qx, qy = self.origin
        tx, ty = self.tangent
        nx_, ny_ = self.normal
        return qx + s * tx + t * nx_, qy + s * ty + t * ny_


@dataclass
class BlowupFrame:
    P: tuple
    case: str              # interior | boundary
    S: float               # sup norm of psi
    Lam: float             # kappa / H
    R: float
    grid: Grid             # frame lattice ((sigma, tau) for boundary frames)
    phi: np.ndarray
    a: EdgeField
    F_lin: EdgeField       # linearized reference field (DA(P)) y on frame edges
    M: np.ndarray          # the 2x2 Jacobian DA(P) in frame coordinates
    z_index: tuple         # frame node holding the source point P
    chart: BoundaryChart | None = None
    origin: tuple = (0.0, 0.0)   # frame coordinates of grid node (0, 0)
    valid: np.ndarray | None = None   # nodes whose physical preimage lies in Omega
    wall_axes: tuple = (False, False)  # frame rows i=0 / j=0 lying on a wall

    @property
    def S2(self):
        return self.S ** 2

    def center_magnitude(self):
        return float(np.abs(self.phi[self.z_index]))

    def wall_normal_a(self):
        """Normal component of a on the frame wall row(s): structurally zero."""
        if self.case != "boundary":
            raise DomainError("wall trace only defined for boundary frames")
        out = []
        s = np.linspace(0.0, self.grid.Lx, 2 * self.grid.nx + 1)
        if self.wall_axes[1]:
            _, ay = interpolate_edge(self.grid, self.a, s, np.zeros_like(s))
            out.append(ay)
        if self.wall_axes[0]:
            t = np.linspace(0.0, self.grid.Ly, 2 * self.grid.ny + 1)
            ax, _ = interpolate_edge(self.grid, self.a, np.zeros_like(t), t)
            out.append(ax)
        return np.concatenate(out)


def classify_point(state: GLState, P, R: float) -> str:
    """interior iff sqrt(kappa H) dist(P, wall) >= R + 1, so the rescaled ball
    of radius R fits strictly inside Omega."""
    x, y = P
    g = state.grid
    eps = 1e-12 * max(g.Lx, g.Ly)
    if not (-eps <= x <= g.Lx + eps and -eps <= y <= g.Ly + eps):
        raise DomainError(f"point {P} outside the closed rectangle")
    dist = min(x, g.Lx - x, y, g.Ly - y)
    b = math.sqrt(state.kappa * state.H)
    return "interior" if b * dist >= R + 1.0 else "boundary"


def _nearest_face(grid: Grid, P):
    x, y = P
    dists = {"left": x, "right": grid.Lx - x, "bottom": y, "top": grid.Ly - y}
    face = min(dists, key=dists.get)
    foot = {
        "left": (0.0, y), "right": (grid.Lx, y),
        "bottom": (x, 0.0), "top": (x, grid.Ly),
    }[face]
    return face, foot, dists[face]


def _jacobian(state: GLState, base, tangent, normal, one_sided_normal):
    """DA at `base` in chart coordinates, by differencing the interpolant.
    One-sided (second order) whenever a centered sample would leave Omega,
    e.g. tangentially at a corner."""
    g = state.grid
    h = min(g.hx, g.hy)
    eps = 1e-12 * max(g.Lx, g.Ly)

    def inside(s, t):
        x, y = (base[0] + s * tangent[0] + t * normal[0],
                base[1] + s * tangent[1] + t * normal[1])
        return -eps <= x <= g.Lx + eps and -eps <= y <= g.Ly + eps

    def comp(s, t):
        x, y = (base[0] + s * tangent[0] + t * normal[0],
                base[1] + s * tangent[1] + t * normal[1])
        ax, ay = interpolate_edge(g, state.A, x, y)
        return (tangent[0] * ax + tangent[1] * ay,
                normal[0] * ax + normal[1] * ay)

    def deriv(comp_i, axis):
        def f(u):
            return comp(u, 0.0)[comp_i] if axis == 0 else comp(0.0, u)[comp_i]
        centered_ok = (not (axis == 1 and one_sided_normal)
                       and inside(*((h, 0.0) if axis == 0 else (0.0, h)))
                       and inside(*((-h, 0.0) if axis == 0 else (0.0, -h))))
        if centered_ok:
            return (f(h) - f(-h)) / (2 * h)
        sign = 1.0 if inside(*((h, 0.0) if axis == 0 else (0.0, h))) else -1.0
        return sign * (-3 * f(0.0) + 4 * f(sign * h) - f(sign * 2 * h)) / (2 * h)

    M = np.zeros((2, 2))
    for comp_i in range(2):
        M[comp_i, 0] = deriv(comp_i, 0)
        M[comp_i, 1] = deriv(comp_i, 1)
    return M


def _snap(coord, ppu):
    """Grid spacing and index putting `coord` >= 0 exactly on a lattice node."""
    delta = 1.0 / ppu
    if coord < delta / 2:
        return delta, 0
    k = round(coord * ppu)
    return coord / k, k


_CORNER_AXES = {
    (0, 0): ((1.0, 0.0), (0.0, 1.0)),
    (1, 0): ((0.0, 1.0), (-1.0, 0.0)),
    (1, 1): ((-1.0, 0.0), (0.0, -1.0)),
    (0, 1): ((0.0, -1.0), (1.0, 0.0)),
}


def rescale(state: GLState, P, R: float, ppu: int = 8) -> BlowupFrame:
    """Build the rescaled frame of radius R around P (>= ppu nodes per unit
    magnetic length).  The source point lands exactly on a frame node.

    Boundary frames use the flat wall chart; if a corner of the rectangle
    falls inside the frame, the chart is re-based at that corner and the frame
    becomes the quarter-plane patch with walls on both coordinate rows (the
    rectangle's corner analogue of the half-plane limit).
    """
    g = state.grid
    if not np.abs(state.psi).max() > 0:
        raise DegenerateFieldError("cannot rescale the zero order parameter")
    S = float(np.abs(state.psi).max())
    b = math.sqrt(state.kappa * state.H)
    Lam = state.kappa / state.H
    case = classify_point(state, P, R)
    delta = 1.0 / ppu
    chart = None
    wall_axes = (False, False)

    if case == "interior":
        tangent, normal = (1.0, 0.0), (0.0, 1.0)
        base = P
        ns = nt = 2 * round(R * ppu)
        ds = dt = delta
        sig0 = tau0 = -R
        z = (ns // 2, nt // 2)
        one_sided = False
    else:
        face, foot, dist = _nearest_face(g, P)
        tangent, normal = _FACES[face]
        tau_p = b * dist
        if tau_p > R:
            raise DomainError(
                f"point at rescaled distance {tau_p:.3f} from the wall exceeds R={R}")
        # corner of this face inside the frame window?
        corners = [(i * g.Lx, j * g.Ly) for i in (0, 1) for j in (0, 1)]
        sig_c = min((tangent[0] * (cx - foot[0]) + tangent[1] * (cy - foot[1])
                     for (cx, cy) in corners
                     if abs(normal[0] * (cx - foot[0]) + normal[1] * (cy - foot[1])) < 1e-12),
                    key=abs)
        if abs(sig_c) * b > R:
            base = foot
            chart = BoundaryChart(face, base, tangent, normal, 0.0)
            ns = 2 * round(R * ppu)
            ds = delta
            sig0 = -R
            dt, jp = _snap(tau_p, ppu)
            nt = max(4, math.ceil(R / dt))
            tau0 = 0.0
            z = (ns // 2, jp)
            wall_axes = (False, True)
        else:
            cx, cy = foot[0] + sig_c * tangent[0], foot[1] + sig_c * tangent[1]
            key = (round(cx / g.Lx), round(cy / g.Ly))
            base = (key[0] * g.Lx, key[1] * g.Ly)
            tangent, normal = _CORNER_AXES[key]
            chart = BoundaryChart("corner", base, tangent, normal, 0.0)
            sig_p = b * (tangent[0] * (P[0] - base[0]) + tangent[1] * (P[1] - base[1]))
            tau_p = b * (normal[0] * (P[0] - base[0]) + normal[1] * (P[1] - base[1]))
            ds, ip = _snap(sig_p, ppu)
            dt, jp = _snap(tau_p, ppu)
            ns = max(4, math.ceil((sig_p + R) / ds))
            nt = max(4, math.ceil((tau_p + R) / dt))
            sig0 = tau0 = 0.0
            z = (ip, jp)
            wall_axes = (True, True)
        one_sided = True

    frame = Grid(ns, nt, ns * ds, nt * dt, allow_anisotropic=True)

    def phys(sig, tau):
        return (base[0] + (sig * tangent[0] + tau * normal[0]) / b,
                base[1] + (sig * tangent[1] + tau * normal[1]) / b)

    Xn, Yn = frame.node_coords()
    px, py = phys(Xn + sig0, Yn + tau0)
    tol = 1e-9 * max(g.Lx, g.Ly)
    if (px.min() < -tol or px.max() > g.Lx + tol
            or py.min() < -tol or py.max() > g.Ly + tol):
        raise DomainError("frame exceeds the chart validity region")
    px = np.clip(px, 0.0, g.Lx)          # guard rounding at the walls
    py = np.clip(py, 0.0, g.Ly)
    valid = np.ones(frame.node_shape, dtype=bool)

    # canonical local gauge: remove the sampled A(base) at the node level
    # (exactly, before any interpolation), so that gauge-shifted states map to
    # identical canonical fields and the rescaled phi is invariant to rounding
    a0 = _chart_components(state, *phys(0.0, 0.0), tangent, normal)
    a0_xy = (a0[0] * tangent[0] + a0[1] * normal[0],
             a0[0] * tangent[1] + a0[1] * normal[1])
    Xg, Yg = g.node_coords()
    psi_tilde = state.psi * np.exp(
        1j * state.B * (a0_xy[0] * (Xg - base[0]) + a0_xy[1] * (Yg - base[1])))
    A_tilde = EdgeField(state.A.ax - a0_xy[0], state.A.ay - a0_xy[1])
    phi = interpolate_node(g, psi_tilde, px, py) / S

    def chart_a(sig, tau, comp):
        x, y = phys(sig, tau)
        x = np.clip(x, 0.0, g.Lx)
        y = np.clip(y, 0.0, g.Ly)
        ax, ay = interpolate_edge(g, A_tilde, x, y)
        t_or_n = tangent if comp == 0 else normal
        return t_or_n[0] * ax + t_or_n[1] * ay

    xex, xey = frame.xedge_coords()
    yex, yey = frame.yedge_coords()
    a = EdgeField(b * chart_a(xex + sig0, xey + tau0, 0),
                  b * chart_a(yex + sig0, yey + tau0, 1))

    M = _jacobian(state, base, tangent, normal, one_sided_normal=one_sided)
    F_lin = EdgeField(M[0, 0] * (xex + sig0) + M[0, 1] * (xey + tau0),
                      M[1, 0] * (yex + sig0) + M[1, 1] * (yey + tau0))
    return BlowupFrame(tuple(P), case, S, Lam, R, frame, phi, a, F_lin, M, z,
                       chart=chart, origin=(sig0, tau0), valid=valid,
                       wall_axes=wall_axes)


def _chart_components(state: GLState, x, y, tangent, normal):
    ax, ay = interpolate_edge(state.grid, state.A, x, y)
    return (tangent[0] * ax + tangent[1] * ay,
            normal[0] * ax + normal[1] * ay)


def limit_residual(frame: BlowupFrame, field: str | None = None) -> float:
    """Relative L2 residual of (-i grad + F)^2 phi = Lam (1 - S^2 |phi|^2) phi
    on the frame; magnetic Neumann on the wall row(s) of boundary frames,
    artificial cut rows excluded.

    F is the linearized reference field, except on corner (quarter-plane)
    frames where the linearization degenerates (the London constraints on two
    meeting walls force DA(corner) curl-free) and the frame's own rescaled
    potential is used instead.  Override with field="linearized"/"rescaled".
    """
    g = frame.grid
    phi = frame.phi
    if field is None:
        field = "rescaled" if frame.wall_axes == (True, True) else "linearized"
    F = frame.F_lin if field == "linearized" else frame.a
    h_op = covariant_laplacian_weighted(g, phi, F, 1.0)
    resid = h_op - frame.Lam * (1.0 - frame.S2 * np.abs(phi) ** 2) * phi
    mask = np.zeros(g.node_shape, dtype=bool)
    i_lo = 0 if frame.wall_axes[0] else 1
    j_lo = 0 if frame.wall_axes[1] else 1
    mask[i_lo:-1, j_lo:-1] = True     # wall rows kept, artificial cuts dropped
    if frame.valid is not None and not frame.valid.all():
        # erode so no stencil touches clamped (outside-Omega) samples
        v = frame.valid
        core = v.copy()
        core[1:, :] &= v[:-1, :]
        core[:-1, :] &= v[1:, :]
        core[:, 1:] &= v[:, :-1]
        core[:, :-1] &= v[:, 1:]
        mask &= core
    wn = g.node_weights()
    denom = float((wn[mask] * np.abs(phi[mask]) ** 2).sum())
    if denom == 0.0:
        raise DegenerateFieldError("frame order parameter vanishes on the mask")
    num = float((wn[mask] * np.abs(resid[mask]) ** 2).sum())
    return math.sqrt(num / denom)


def frame_curl(frame: BlowupFrame):
    """Plaquette curl of the rescaled potential (approaches curl A(P) ~ 1)."""
    return discrete_curl(frame.grid, frame.a)
