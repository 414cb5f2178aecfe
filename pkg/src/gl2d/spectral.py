"""Magnetic spectral constants at unit field: the half-plane ground energy,
the full-plane Landau levels, and truncated-domain probes of the nonlinear
limiting equations.

Two independent routes to the half-plane constant:

* fiber route -- partial Fourier transform along the boundary reduces the
  Neumann half-plane operator to the family -d^2/dt^2 + (t - xi)^2 on (0, T)
  with Neumann at 0; theta0 = min_xi mu(xi), solved by tridiagonal bisection
  and golden-section search with Richardson extrapolation;
* direct 2D route -- link-variable discretization of (-i grad + F)^2 with
  F = (0, x1) on [0, R] x [-R, R], magnetic Neumann on the x1 = 0 edge,
  Dirichlet elsewhere, smallest eigenvalue by shift-invert Lanczos.

The nonlinear probe minimizes int |(-igrad + F)phi|^2 - lam |phi|^2
+ (lam S^2/2)|phi|^4 on the truncation.  When lam is below the computed
linear ground energy mu_R the functional is strictly positive definite, the
unique minimizer is identically zero, and the probe returns exactly 0 with a
coercivity certificate; otherwise it minimizes from seeded noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError


@dataclass(frozen=True)
class FiberProblem:
    xi: float
    T: float = 12.0
    n: int = 2000

    def __post_init__(self):
        if self.T < 8:
            raise ValueError(f"truncation T must be >= 8, got {self.T}")
        if self.n < 200:
            raise ValueError(f"need n >= 200 grid points, got {self.n}")


@dataclass
class SpectralResult:
    theta0: float
    xi_opt: float
    mu_samples: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.theta0 < 1):
            raise ValueError(f"theta0 = {self.theta0} outside (0, 1)")


def mu_of_xi(fp: FiberProblem) -> float:
    """Smallest eigenvalue of -d^2/dt^2 + (t - xi)^2 on (0, T), Neumann at 0,
    Dirichlet at T; symmetric tridiagonal bisection, second order in 1/n."""
    h = fp.T / fp.n
    t = np.arange(fp.n) * h          # keep t_0 = 0 .. t_{n-1}; Dirichlet drops t_n
    v = (t - fp.xi) ** 2
    # variational stiffness + lumped trapezoid mass, symmetrized by M^(-1/2)
    m = np.full(fp.n, h)
    m[0] = h / 2
    diag = np.full(fp.n, 2.0 / h)
    diag[0] = 1.0 / h
    off = np.full(fp.n - 1, -1.0 / h)
    s = 1.0 / np.sqrt(m)
    d_sym = diag * s * s + v
    e_sym = off * s[:-1] * s[1:]
    w = sla.eigh_tridiagonal(d_sym, e_sym, select="i", select_range=(0, 0),
                             eigvals_only=True, tol=1e-12)
    return float(w[0])


def landau_levels(count: int, T: float = 12.0, n: int = 4000):
    """Lowest eigenvalues of -d^2/dt^2 + t^2 on (-T, T) with Dirichlet ends;
    converges to the odd-integer ladder 1, 3, 5, ..."""
    if count > 6:
        raise ValueError("count must be <= 6")
    h = 2 * T / n
    t = -T + np.arange(1, n) * h
    diag = 2.0 / h ** 2 + t ** 2
    off = np.full(n - 2, -1.0 / h ** 2)
    w = sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1),
                             eigvals_only=True, tol=1e-12)
    return [float(x) for x in w]


def _golden_min(f, a, b, tol):
    inv = (math.sqrt(5) - 1) / 2
    x1 = b - inv * (b - a)
    x2 = a + inv * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = f(x2)
    return (a + b) / 2


def theta0(tol: float = 1e-6, T: float = 12.0, n: int = 2000) -> SpectralResult:
    """Half-plane ground energy via the fiber family, Richardson-extrapolated
    over resolutions n and 2n.  tol controls the golden-section bracket."""
    if not (1e-8 <= tol <= 1e-3):
        raise ValueError(f"tol must lie in [1e-8, 1e-3], got {tol}")

    def mu_n(xi, nn):
        return mu_of_xi(FiberProblem(xi, T, nn))

    # the de Gennes curve is unimodal on [0, 2]: mu(0) = 1, min, then growth
    if not (mu_n(0.8, n) < min(mu_n(0.0, n), mu_n(2.0, n))):
        raise SolverError("mu(xi) lost its interior minimum; discretization bug")
    xi_c = _golden_min(lambda x: mu_n(x, n), 0.0, 2.0, tol)
    xi_f = _golden_min(lambda x: mu_n(x, 2 * n), max(0.0, xi_c - 0.1),
                       min(2.0, xi_c + 0.1), tol)
    mu_c = mu_n(xi_c, n)
    mu_f = mu_n(xi_f, 2 * n)
    th = (4 * mu_f - mu_c) / 3
    xis = np.linspace(-2.0, 4.0, 61)
    samples = [(float(x), mu_n(float(x), n)) for x in xis]
    # numerical observation xi_opt^2 ~ theta0: recorded, never asserted
    return SpectralResult(th, float(xi_f), samples,
                          meta={"T": T, "n": n, "mu_coarse": mu_c, "mu_fine": mu_f,
                                "xi_sq_gap": float(xi_f ** 2 - th)})


# ---------------------------------------------------------------------------
# direct 2D truncations
# ---------------------------------------------------------------------------

@dataclass
class _Truncation2D:
    """Link-variable operator for unit field on a truncated geometry."""
    geometry: str          # halfplane | plane
    R: float
    ppu: int
    neumann_edge: bool = True

    def __post_init__(self):
        if self.R < 6:
            raise ValueError(f"need R >= 6, got {self.R}")
        h = 1.0 / self.ppu
        if self.geometry == "halfplane":
            self.nx = round(self.R * self.ppu)
            x0 = 0.0
        elif self.geometry == "plane":
            self.nx = 2 * round(self.R * self.ppu)
            x0 = -self.R
        else:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        self.ny = 2 * round(self.R * self.ppu)
        self.h = h
        self.x = x0 + np.arange(self.nx + 1) * h
        self.y = -self.R + np.arange(self.ny + 1) * h
        free = np.ones((self.nx + 1, self.ny + 1), dtype=bool)
        free[-1, :] = False          # far Dirichlet sides
        free[:, 0] = False
        free[:, -1] = False
        if self.geometry == "plane" or not self.neumann_edge:
            free[0, :] = False
        self.free = free
        self.idx = -np.ones(free.shape, dtype=np.int64)
        self.idx[free] = np.arange(free.sum())

    def node_weights(self):
        w = np.full((self.nx + 1, self.ny + 1), self.h ** 2)
        w[0, :] /= 2
        w[-1, :] /= 2
        w[:, 0] /= 2
        w[:, -1] /= 2
        return w

    def _edge_groups(self):
        """(tail index, head index, edge weight, hop phase) per edge family."""
        h = self.h
        ii, jj = np.meshgrid(np.arange(self.nx), np.arange(self.ny + 1), indexing="ij")
        wx = np.full(ii.shape, h ** 2)
        wx[:, 0] /= 2
        wx[:, -1] /= 2
        xgrp = (self.idx[ii, jj], self.idx[ii + 1, jj], wx,
                np.ones(ii.shape, complex))
        ii, jj = np.meshgrid(np.arange(self.nx + 1), np.arange(self.ny), indexing="ij")
        wy = np.full(ii.shape, h ** 2)
        wy[0, :] /= 2
        wy[-1, :] /= 2
        phase = np.exp(1j * h * np.broadcast_to(self.x[:, None], ii.shape))
        ygrp = (self.idx[ii, jj], self.idx[ii, jj + 1], wy, phase)
        return [xgrp, ygrp]

    def matrices(self):
        """Stiffness K (Hermitian) and diagonal mass M on the free nodes.

        Each edge contributes (w_e/h^2) [ |tail|^2 + |head|^2
        - 2 Re(U psi_head conj(psi_tail)) ]; Dirichlet endpoints keep only the
        surviving diagonal part.
        """
        h = self.h
        rows, cols, vals = [], [], []
        for tail, head, w, phase in self._edge_groups():
            c = (w / h ** 2).ravel()
            a, b = tail.ravel(), head.ravel()
            u = phase.ravel()
            both = (a >= 0) & (b >= 0)
            rows += [a[both], b[both], a[both], b[both]]
            cols += [a[both], b[both], b[both], a[both]]
            vals += [c[both].astype(complex), c[both].astype(complex),
                     -c[both] * u[both], -c[both] * np.conj(u[both])]
            for aa, bb in ((a, b), (b, a)):
                solo = (aa >= 0) & (bb < 0)
                rows.append(aa[solo])
                cols.append(aa[solo])
                vals.append(c[solo].astype(complex))
        n_free = int(self.free.sum())
        K = sp.coo_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n_free, n_free)).tocsr()
        M = self.node_weights()[self.free]
        return K, M

    def _block_size(self):
        """Lanczos block: the plane bottom is a Landau cluster of multiplicity
        ~ area/(2 pi); shift-invert needs room for it, the half-plane does not."""
        if self.geometry == "plane":
            return min(int(max(12, self.R ** 2 // 4)), int(self.free.sum()) - 2)
        return 4

    def ground_energy(self):
        K, M = self.matrices()
        Md = sp.diags(M)
        try:
            w = spla.eigsh(K, k=self._block_size(), M=Md, sigma=0.0, which="LM",
                           return_eigenvectors=False, tol=1e-10)
        except Exception as exc:
            raise SolverError(f"shift-invert eigensolve failed: {exc}") from exc
        return float(min(w))

    def ground_pair(self):
        K, M = self.matrices()
        Md = sp.diags(M)
        w, v = spla.eigsh(K, k=self._block_size(), M=Md, sigma=0.0, which="LM",
                          tol=1e-10)
        i = int(np.argmin(w))
        return float(w[i]), v[:, i]


def halfplane_ground_state(R: float = 12.0, ppu: int = 8, neumann_edge: bool = True,
                           extrapolate: bool = True) -> float:
    """Ground energy of the truncated half-plane magnetic Neumann operator.

    The raw truncated value converges to the half-plane constant from above:
    exponentially in the decay direction x1 but only at O(1/R^2) along the
    boundary (the Dirichlet box pinches the boundary-momentum fiber).  With
    extrapolate=True the value is Richardson-extrapolated in both the mesh
    (ppu, 2 ppu) and the box (2R/3, R), leaving an O(h^4 + 1/R^4) error.
    """
    def raw(RR, pp):
        return _Truncation2D("halfplane", RR, pp, neumann_edge).ground_energy()

    if not extrapolate:
        return raw(R, ppu)

    def h_rich(RR):
        return (4 * raw(RR, 2 * ppu) - raw(RR, ppu)) / 3

    if R < 9:
        return h_rich(R)
    R1 = 2 * R / 3
    m1, m2 = h_rich(R1), h_rich(R)
    return float((R ** 2 * m2 - R1 ** 2 * m1) / (R ** 2 - R1 ** 2))


def plane_ground_state(R: float = 10.0, ppu: int = 8) -> float:
    """Ground energy of the Dirichlet-truncated full-plane operator (-> 1)."""
    return _Truncation2D("plane", R, ppu).ground_energy()


# ---------------------------------------------------------------------------
# nonlinear nonexistence probe
# ---------------------------------------------------------------------------

@dataclass
class ProbeResult:
    sup_norm: float
    coercive: bool
    mu_R: float
    lam: float
    S: float
    R: float
    geometry: str
    converged: bool = True
    edge_mass_fraction: float | None = None

    def __float__(self):
        return self.sup_norm


def nonlinear_limit_probe(lam: float, S: float, R: float, geometry: str = "halfplane",
                          ppu: int = 8, seed: int = 99, grad_tol: float = 1e-6,
                          max_iter: int = 4000) -> ProbeResult:
    """Sup norm of the minimizer of the truncated limiting functional.

    Below the linear threshold the functional is certified positive definite
    (lam <= mu_R) and the exact minimizer 0 is returned; above it, a seeded
    nonlinear CG descent produces the surviving profile.
    """
    if lam < 0 or S < 0:
        raise ValueError("lam and S must be nonnegative")
    trunc = _Truncation2D(geometry, R, ppu)
    K, M = trunc.matrices()
    w, v = spla.eigsh(K, k=trunc._block_size(), M=sp.diags(M), sigma=0.0,
                      which="LM", tol=1e-10)
    iw = int(np.argmin(w))
    mu_R, gvec = float(w[iw]), v[:, iw]
    if lam <= mu_R - 1e-9:
        return ProbeResult(0.0, True, mu_R, lam, S, R, geometry)

    quart = 0.5 * lam * S ** 2
    rng = np.random.Generator(np.random.Philox(seed))
    n = M.size
    # seeded start biased along the linear ground state
    phi = gvec / np.abs(gvec).max() + 0.1 * (rng.standard_normal(n)
                                             + 1j * rng.standard_normal(n))

    def e_and_g(p):
        Kp = K @ p
        dens = np.abs(p) ** 2
        E = (np.vdot(p, Kp).real - lam * float(M @ dens)
             + quart * float(M @ dens ** 2))
        grad = 2 * (Kp - lam * M * p + 2 * quart * M * dens * p)
        return E, grad

    diag = np.real(K.diagonal()) + lam * M
    E, grad = e_and_g(phi)
    alpha = 1.0
    z = grad / diag
    d = -z
    gz = np.vdot(grad, z).real
    scale = max(lam, 1.0) * math.sqrt(float(M.sum()))
    converged = False
    for it in range(1, max_iter + 1):
        slope = np.vdot(grad, d).real
        if slope >= 0:
            d = -z
            slope = -gz
        a = alpha
        ok = False
        for _ in range(60):
            E_new, _ = e_and_g(phi + a * d)
            if E_new <= E + 1e-4 * a * slope:
                ok = True
                break
            a *= 0.5
        if not ok:
            break
        phi = phi + a * d
        alpha = min(2 * a, 1e6)
        g_old, gz_old = grad, gz
        E, grad = e_and_g(phi)
        gnorm = math.sqrt(float(np.sum(np.abs(grad) ** 2 / M)))
        if gnorm <= grad_tol * scale:
            converged = True
            break
        z = grad / diag
        gz = np.vdot(grad, z).real
        beta = max(0.0, np.vdot(grad - g_old, z).real / gz_old) if it % 200 else 0.0
        d = -z + beta * d

    sup = float(np.abs(phi).max())
    frac = None
    if geometry == "halfplane":
        X = np.broadcast_to(trunc.x[:, None], trunc.free.shape)[trunc.free]
        mass = M * np.abs(phi) ** 2
        tot = float(mass.sum())
        frac = float(mass[X <= 3.0].sum() / tot) if tot > 0 else 0.0
    return ProbeResult(sup, False, mu_R, lam, S, R, geometry,
                       converged=converged, edge_mass_fraction=frac)
