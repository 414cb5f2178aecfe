import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gl2d.errors import DegenerateFieldError, NormSpecError
from gl2d.grid import Grid
from gl2d.norms import (NormSpec, argmax_distance, cell_lattice, holder_seminorm,
                        node_lattice, norm, p_conjugate)
from conftest import rng_for


def test_spec_validation():
    with pytest.raises(NormSpecError):
        NormSpec("bogus")
    with pytest.raises(NormSpecError):
        NormSpec("Lp", p=0.5)
    with pytest.raises(NormSpecError):
        NormSpec("Cn_alpha", alpha=1.0)
    NormSpec("Lp", p=np.inf)   # admissible


def test_conjugate_exponents():
    assert p_conjugate(1.0) == np.inf
    assert p_conjugate(np.inf) == 1.0
    assert abs(p_conjugate(4.0) - 4 / 3) < 1e-15


def test_constant_field_norms(grid16):
    c = 2.5 - 1.0j
    f = np.full(grid16.node_shape, c)
    # C^{0,alpha} norm of a constant is |c| (zero seminorm)
    assert abs(norm(grid16, f, NormSpec("Cn_alpha", n=0, alpha=0.5)) - abs(c)) < 1e-12
    # L^p of the unit field is |Omega|^{1/p}
    one = np.ones(grid16.node_shape)
    for p in (1.0, 2.0, 4.0):
        assert abs(norm(grid16, one, NormSpec("Lp", p=p)) - 1.0) < 1e-12
    assert abs(norm(grid16, one, NormSpec("Lp", p=np.inf)) - 1.0) < 1e-15


def test_linear_field_seminorm_attained_at_max_separation(grid16):
    X, _ = grid16.node_coords()
    for alpha in (0.25, 0.5, 0.75):
        s = holder_seminorm(node_lattice(grid16, X), alpha)
        assert abs(s - 1.0) < 1e-12       # = Lx^{1-alpha} = 1 on the unit square


def test_l2_against_direct_summation(grid16):
    r = rng_for(4)
    f = r.standard_normal(grid16.node_shape) + 1j * r.standard_normal(grid16.node_shape)
    w = grid16.node_weights()
    direct = 0.0
    for i in range(grid16.nx + 1):
        for j in range(grid16.ny + 1):
            direct += w[i, j] * abs(f[i, j]) ** 2
    assert abs(norm(grid16, f, NormSpec("Lp", p=2)) - np.sqrt(direct)) < 1e-12


@given(st.integers(0, 10_000), st.sampled_from([1.0, 2.0, 4.0, np.inf]))
def test_norm_axioms(seed, p):
    g = Grid(8, 8, 1.0, 1.0)
    r = rng_for(seed)
    f = r.standard_normal(g.node_shape)
    h = r.standard_normal(g.node_shape)
    spec = NormSpec("Lp", p=p)
    a = -1.75
    # absolute homogeneity
    assert abs(norm(g, a * f, spec) - abs(a) * norm(g, f, spec)) < 1e-12 * (1 + norm(g, f, spec))
    # triangle inequality
    assert norm(g, f + h, spec) <= norm(g, f, spec) + norm(g, h, spec) + 1e-12


def test_holder_monotone_in_alpha_unit_diameter():
    # pair distances <= 1 make d^alpha nonincreasing in alpha, so the
    # seminorm is nondecreasing in alpha on a unit-diameter domain
    g = Grid(16, 16, 0.7, 0.7)
    X, Y = g.node_coords()
    f = np.sin(3 * X) * np.cos(2 * Y) + 0.3 * X
    lat = node_lattice(g, f)
    alphas = [0.25, 0.375, 0.5, 0.625, 0.75]
    vals = [holder_seminorm(lat, a) for a in alphas]
    assert all(v2 >= v1 - 1e-12 for v1, v2 in zip(vals, vals[1:]))


def test_sampled_scan_bounds_exhaustive():
    g = Grid(64, 64, 1.0, 1.0)
    X, Y = g.node_coords()
    f = np.sin(2 * X + Y) + 0.5 * np.cos(3 * Y)
    lat = node_lattice(g, f)
    exact = holder_seminorm(lat, 0.5, exhaustive=True)
    sampled = holder_seminorm(lat, 0.5, exhaustive=False)
    assert sampled <= exact + 1e-12
    assert sampled >= 0.95 * exact       # nearest neighbors dominate smooth fields


def test_c1_c2_norms_on_polynomial(grid16):
    X, Y = grid16.node_coords()
    f = X ** 2 - 2 * Y ** 2 + X * Y
    # sups over [0,1]^2: |f| <= max at corners; derivative fields are exact
    c1 = norm(grid16, f, NormSpec("C1"))
    # |f|max = 2 at (0,1); |fx| = |2x + y| <= 3; |fy| = |x - 4y| <= 4
    assert abs(c1 - (2 + 3 + 4)) < 1e-9
    c2 = norm(grid16, f, NormSpec("C2"))
    assert abs(c2 - (c1 + 2 + 1 + 4)) < 1e-9


def test_w1p_forward_differences(grid16):
    X, _ = grid16.node_coords()
    w = norm(grid16, X, NormSpec("W1p", p=2.0))
    # ||x||_2^2 = 1/3, ||dx||_2^2 = 1 (forward differences exact on linears)
    assert abs(w - np.sqrt(1 / 3 + 1.0)) < 1e-3


def test_corner_exclusion_reduces_corner_spike():
    g = Grid(32, 32, 1.0, 1.0)
    f = np.zeros(g.node_shape)
    f[0, 0] = 10.0                         # corner spike
    full = norm(g, f, NormSpec("sup"))
    masked = norm(g, f, NormSpec("sup", corner_exclusion=True))
    assert full == 10.0 and masked == 0.0


def test_cell_fields_supported(grid16):
    r = rng_for(8)
    f = r.standard_normal(grid16.cell_shape)
    assert norm(grid16, f, NormSpec("Lp", p=2)) > 0
    assert norm(grid16, cell_lattice(grid16, f), NormSpec("Cn_alpha", alpha=0.5)) > 0


def test_argmax_distance(grid16):
    psi = np.zeros(grid16.node_shape, complex)
    psi[5, 7] = 2.0
    (x, y), dist = argmax_distance(grid16, psi)
    assert (x, y) == (5 * grid16.hx, 7 * grid16.hy)
    assert abs(dist - min(x, 1 - x, y, 1 - y)) < 1e-15
    with pytest.raises(DegenerateFieldError):
        argmax_distance(grid16, np.zeros(grid16.node_shape, complex))


def test_argmax_lexicographic_tie(grid16):
    psi = np.zeros(grid16.node_shape, complex)
    psi[3, 9] = 1.0
    psi[3, 2] = 1.0
    psi[8, 1] = 1.0
    (x, y), _ = argmax_distance(grid16, psi)
    assert (x, y) == (3 * grid16.hx, 2 * grid16.hy)
