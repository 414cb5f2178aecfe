"""Discrete Lp, W^{1,p}, sup, C^1, C^2 and Holder C^{n,alpha} norms.

Norms act on scalar lattices (node-, cell-, or edge-component-indexed arrays
with known origin and spacing); EdgeFields are treated componentwise.  The
C^{n,alpha} norm is

    sum_{|beta| <= n} sup |d^beta f|  +  sum_{|beta| = n} H_alpha(d^beta f),

with H_alpha the Holder quotient sup over point pairs; for alpha = 0 the pair
sum is omitted.  Derivatives are centered differences, one-sided (second
order) at the boundary.  Pair scans are exhaustive up to 128^2 points and
stratified-sampled above (fixed-seed Philox, >= 10^6 pairs, always including
every nearest-neighbor pair).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError, NormSpecError
from .grid import EdgeField, Grid

EXHAUSTIVE_LIMIT = (128 + 1) ** 2     # max point count for the full pair scan
SAMPLED_PAIRS = 1_000_000
_PAIR_SEED = 408311


@dataclass(frozen=True)
class NormSpec:
    kind: str                  # Lp | W1p | W2p | sup | Cn_alpha | C1 | C2
    p: float = 2.0
    n: int = 0
    alpha: float = 0.5
    corner_exclusion: bool = False

    def __post_init__(self):
        kinds = ("Lp", "W1p", "W2p", "sup", "Cn_alpha", "C1", "C2")
        if self.kind not in kinds:
            raise NormSpecError(f"unknown norm kind {self.kind!r}")
        if self.kind in ("Lp", "W1p", "W2p"):
            if not (self.p >= 1):
                raise NormSpecError(f"p must be >= 1 (or inf), got {self.p}")
        if self.kind == "Cn_alpha":
            if not (0 < self.alpha < 1):
                raise NormSpecError(f"alpha must lie in (0,1), got {self.alpha}")
            if self.n < 0:
                raise NormSpecError("n must be >= 0")


@dataclass(frozen=True)
class Lattice:
    """A scalar sample lattice: values[i, j] at (x0 + i dx, y0 + j dy)."""

    values: np.ndarray
    x0: float
    y0: float
    dx: float
    dy: float
    trap_x: bool = True   # trapezoid end-weights (lattice touches boundary)
    trap_y: bool = True

    def positions(self):
        x = self.x0 + np.arange(self.values.shape[0]) * self.dx
        y = self.y0 + np.arange(self.values.shape[1]) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def weights(self):
        n0, n1 = self.values.shape
        wx = np.full(n0, self.dx)
        wy = np.full(n1, self.dy)
        if self.trap_x:
            wx[0] = wx[-1] = self.dx / 2
        if self.trap_y:
            wy[0] = wy[-1] = self.dy / 2
        return np.outer(wx, wy)


def node_lattice(grid: Grid, values) -> Lattice:
    return Lattice(np.asarray(values), 0.0, 0.0, grid.hx, grid.hy, True, True)


def cell_lattice(grid: Grid, values) -> Lattice:
    return Lattice(np.asarray(values), grid.hx / 2, grid.hy / 2,
                   grid.hx, grid.hy, False, False)


def edge_lattices(grid: Grid, A: EdgeField):
    return (Lattice(A.ax, grid.hx / 2, 0.0, grid.hx, grid.hy, False, True),
            Lattice(A.ay, 0.0, grid.hy / 2, grid.hx, grid.hy, True, False))


def _corner_mask(lat: Lattice, grid: Grid):
    """True on points to keep: outside radius-4h disks at the corners."""
    r = 4.0 * max(grid.hx, grid.hy)
    X, Y = lat.positions()
    keep = np.ones(lat.values.shape, dtype=bool)
    for cx in (0.0, grid.Lx):
        for cy in (0.0, grid.Ly):
            keep &= (X - cx) ** 2 + (Y - cy) ** 2 >= r * r
    return keep


def _diff(lat: Lattice, axis: int) -> Lattice:
    """Centered first difference, one-sided second order at the two boundary rows."""
    f = lat.values
    h = lat.dx if axis == 0 else lat.dy
    f = np.moveaxis(f, axis, 0)
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    d[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return Lattice(np.moveaxis(d, 0, axis), lat.x0, lat.y0, lat.dx, lat.dy,
                   lat.trap_x, lat.trap_y)


def _derivative_fields(lat: Lattice, order: int):
    """All d^beta f with |beta| = order, as lattices on the same points."""
    if order == 0:
        return [lat]
    if order == 1:
        return [_diff(lat, 0), _diff(lat, 1)]
    if order == 2:
        return [_diff(_diff(lat, 0), 0), _diff(_diff(lat, 0), 1),
                _diff(_diff(lat, 1), 1)]
    raise NormSpecError(f"derivative order {order} not supported")


def _forward_diff(lat: Lattice, axis: int) -> Lattice:
    """Forward difference living on the staggered (half-shifted) lattice."""
    f = lat.values
    if axis == 0:
        d = (f[1:, :] - f[:-1, :]) / lat.dx
        return Lattice(d, lat.x0 + lat.dx / 2, lat.y0, lat.dx, lat.dy,
                       False, lat.trap_y)
    d = (f[:, 1:] - f[:, :-1]) / lat.dy
    return Lattice(d, lat.x0, lat.y0 + lat.dy / 2, lat.dx, lat.dy,
                   lat.trap_x, False)


def _sobolev_fields(lat: Lattice, order: int):
    """Forward-difference derivative lattices for W^{1,p} / W^{2,p} surrogates."""
    first = [_forward_diff(lat, 0), _forward_diff(lat, 1)]
    if order == 1:
        return first
    dxx = _forward_diff(first[0], 0)
    dxy = _forward_diff(first[0], 1)
    dyy = _forward_diff(first[1], 1)
    return first + [dxx, dxy, dyy]


def _lp(lat: Lattice, p: float, keep=None):
    v = np.abs(lat.values)
    w = lat.weights()
    if keep is not None:
        v = v[keep]
        w = w[keep]
    if np.isinf(p):
        return float(v.max()) if v.size else 0.0
    return float(((v ** p) * w).sum() ** (1.0 / p))


def _sup(lat: Lattice, keep=None):
    v = np.abs(lat.values)
    if keep is not None:
        v = v[keep]
    return float(v.max()) if v.size else 0.0


# ---------------------------------------------------------------------------
# Holder seminorm pair scans
# ---------------------------------------------------------------------------

def _pairs_max(vals, px, py, alpha):
    """Exhaustive max over unordered point pairs of |df| / dist^alpha."""
    n = vals.size
    best = 0.0
    chunk = max(1, int(2 ** 22 // max(n, 1)))
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        dv = np.abs(vals[sl, None] - vals[None, :])
        d2 = (px[sl, None] - px[None, :]) ** 2 + (py[sl, None] - py[None, :]) ** 2
        np.fill_diagonal(d2[:, start:start + (sl.stop - sl.start)], np.inf)
        ratio = dv / d2 ** (alpha / 2)
        best = max(best, float(ratio.max()))
    return best


def _sampled_pairs_max(vals2d, lat: Lattice, alpha, keep=None):
    """Stratified sample: all nearest-neighbor pairs plus ~SAMPLED_PAIRS random
    pairs drawn per dyadic band of index offsets (counter-based generator)."""
    n0, n1 = vals2d.shape
    best = 0.0

    def ratio_of(i0, j0, i1, j1):
        if keep is not None:
            ok = keep[i0, j0] & keep[i1, j1]
            i0, j0, i1, j1 = i0[ok], j0[ok], i1[ok], j1[ok]
        if i0.size == 0:
            return 0.0
        dv = np.abs(vals2d[i0, j0] - vals2d[i1, j1])
        dx = (i0.astype(float) - i1) * lat.dx
        dy = (j0.astype(float) - j1) * lat.dy
        dist2 = dx * dx + dy * dy
        return float((dv / dist2 ** (alpha / 2)).max())

    ii, jj = np.meshgrid(np.arange(n0), np.arange(n1), indexing="ij")
    best = max(best, ratio_of(ii[:-1, :].ravel(), jj[:-1, :].ravel(),
                              ii[1:, :].ravel(), jj[1:, :].ravel()))
    best = max(best, ratio_of(ii[:, :-1].ravel(), jj[:, :-1].ravel(),
                              ii[:, 1:].ravel(), jj[:, 1:].ravel()))

    rng = np.random.Generator(np.random.Philox(_PAIR_SEED))
    n_bands = max(1, int(math.ceil(math.log2(max(n0, n1)))))
    per_band = SAMPLED_PAIRS // n_bands
    for k in range(n_bands):
        lo, hi = 2 ** k, min(2 ** (k + 1), max(n0, n1))
        if lo >= max(n0, n1):
            break
        i0 = rng.integers(0, n0, per_band)
        j0 = rng.integers(0, n1, per_band)
        off_i = rng.integers(-hi + 1, hi, per_band)
        off_j = rng.integers(-hi + 1, hi, per_band)
        big = np.maximum(np.abs(off_i), np.abs(off_j))
        ok = (big >= lo) & (big < hi)
        i1 = np.clip(i0 + off_i, 0, n0 - 1)
        j1 = np.clip(j0 + off_j, 0, n1 - 1)
        ok &= (i1 != i0) | (j1 != j0)
        best = max(best, ratio_of(i0[ok], j0[ok], i1[ok], j1[ok]))
    return best


def holder_seminorm(lat: Lattice, alpha, keep=None, exhaustive=None):
    """sup over point pairs of |f(x) - f(y)| / |x - y|^alpha."""
    vals = lat.values
    n = vals.size
    if exhaustive is None:
        exhaustive = n <= EXHAUSTIVE_LIMIT
    if exhaustive:
        px, py = lat.positions()
        v, x, y = vals.ravel(), px.ravel(), py.ravel()
        if keep is not None:
            m = keep.ravel()
            v, x, y = v[m], x[m], y[m]
        if v.size < 2:
            return 0.0
        return _pairs_max(v, x, y, alpha)
    return _sampled_pairs_max(vals, lat, alpha, keep=keep)


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def _norm_lattice(lat: Lattice, spec: NormSpec, grid: Grid):
    keep = _corner_mask(lat, grid) if spec.corner_exclusion else None
    if spec.kind == "sup":
        return _sup(lat, keep)
    if spec.kind == "Lp":
        return _lp(lat, spec.p, keep)
    if spec.kind in ("W1p", "W2p"):
        order = 1 if spec.kind == "W1p" else 2
        fields = [lat] + _sobolev_fields(lat, order)
        masks = [_corner_mask(f, grid) if spec.corner_exclusion else None for f in fields]
        if np.isinf(spec.p):
            return max(_lp(f, np.inf, m) for f, m in zip(fields, masks))
        return float(sum(_lp(f, spec.p, m) ** spec.p
                         for f, m in zip(fields, masks)) ** (1 / spec.p))
    if spec.kind in ("C1", "C2"):
        order = 1 if spec.kind == "C1" else 2
        total = 0.0
        for m in range(order + 1):
            total += sum(_sup(f, keep) for f in _derivative_fields(lat, m))
        return total
    if spec.kind == "Cn_alpha":
        total = 0.0
        for m in range(spec.n + 1):
            total += sum(_sup(f, keep) for f in _derivative_fields(lat, m))
        for f in _derivative_fields(lat, spec.n):
            total += holder_seminorm(f, spec.alpha, keep=keep)
        return total
    raise NormSpecError(f"unknown norm kind {spec.kind!r}")


def norm(grid: Grid, f, spec: NormSpec):
    """Discrete norm of a node array, cell array, Lattice, or EdgeField."""
    if isinstance(f, EdgeField):
        lx, ly = edge_lattices(grid, f)
        a, b = _norm_lattice(lx, spec, grid), _norm_lattice(ly, spec, grid)
        if spec.kind == "sup":
            return max(a, b)
        if spec.kind in ("Lp", "W1p", "W2p") and not np.isinf(spec.p):
            return float((a ** spec.p + b ** spec.p) ** (1 / spec.p))
        if spec.kind in ("Lp", "W1p", "W2p"):
            return max(a, b)
        return a + b
    if isinstance(f, Lattice):
        return _norm_lattice(f, spec, grid)
    f = np.asarray(f)
    if f.shape == grid.node_shape:
        return _norm_lattice(node_lattice(grid, f), spec, grid)
    if f.shape == grid.cell_shape:
        return _norm_lattice(cell_lattice(grid, f), spec, grid)
    raise NormSpecError(f"cannot infer lattice for array of shape {f.shape}")


def p_conjugate(p):
    if np.isinf(p):
        return 1.0
    if p == 1:
        return np.inf
    return p / (p - 1.0)


def argmax_distance(grid: Grid, psi):
    """Node maximizing |psi| (lexicographic ties) and its distance to the walls."""
    a = np.abs(np.asarray(psi))
    if a.shape != grid.node_shape:
        raise NormSpecError(f"array shape {a.shape} does not match {grid.node_shape}")
    if not a.any():
        raise DegenerateFieldError("argmax undefined for identically zero field")
    flat = int(np.argmax(a))            # first occurrence = lexicographic (i, j)
    i, j = np.unravel_index(flat, a.shape)
    x, y = i * grid.hx, j * grid.hy
    dist = min(x, grid.Lx - x, y, grid.Ly - y)
    return (float(x), float(y)), float(dist)
