import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attxray import (DiskGrid, EuclideanMetric, FiberCalculus, FiberFunction,
                     random_polynomial_connection, random_smooth_field)


def _random(rng, grid, n=1, N=3):
    u = FiberFunction.zeros(grid, N, n)
    for k in range(-N, N + 1):
        sf = random_smooth_field(rng, n, grid.radius, 2, 2)
        u.coeffs[N + k] = np.moveaxis(sf(grid.x1, grid.x2), -1, 0) / (1 + k * k)
    return u


@pytest.fixture(scope="module")
def grid():
    return DiskGrid(16, 32, 1.0)


def test_x_of_coordinate_is_cosine(grid):
    # u = x1 on the flat disk: X u = cos(theta)
    u = FiberFunction.from_degree(grid, 0, grid.x1)
    Xu = FiberCalculus(grid, EuclideanMetric()).X(u)
    assert np.allclose(Xu[1], 0.5) and np.allclose(Xu[-1], 0.5)
    assert np.allclose(Xu[0], 0.0)


def test_synthesis_roundtrip(grid, rng):
    u = _random(rng, grid)
    v = FiberFunction.from_samples(grid, u.synthesize(16), N=u.N)
    assert np.max(np.abs(v.coeffs - u.coeffs)) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_product_matches_pointwise(Na, Nb, seed):
    g = DiskGrid(4, 8, 1.0)
    r = np.random.default_rng(seed)
    a = FiberFunction(g, r.standard_normal((2 * Na + 1, 1) + g.shape))
    b = FiberFunction(g, r.standard_normal((2 * Nb + 1, 1) + g.shape))
    Q = 4 * (Na + Nb) + 4
    assert np.allclose(a.times(b).synthesize(Q), a.synthesize(Q) * b.synthesize(Q))


def test_hilbert_parity_split(grid, rng):
    u = _random(rng, grid)
    H = FiberCalculus.hilbert
    fc = FiberCalculus(grid, EuclideanMetric())
    assert np.allclose((fc.hilbert_even(u) + fc.hilbert_odd(u)).coeffs, H(u).coeffs)
    assert np.allclose(H(u)[0], 0.0)


def test_bracket_identity(metric, rng):
    g = DiskGrid(16, 32, metric.radius)
    A = random_polynomial_connection(rng, 2, 2)
    u = _random(rng, g, 2)
    assert FiberCalculus(g, metric, A).bracket_residual(u) < 5e-4


def test_structure_equations(metric, rng):
    g = DiskGrid(16, 32, metric.radius)
    res = FiberCalculus(g, metric).structure_residuals(_random(rng, g))
    assert np.max(res) < 1e-8


def test_star_dA_two_routes(metric, rng):
    g = DiskGrid(16, 32, metric.radius)
    A = random_polynomial_connection(rng, 2, 2)
    fc = FiberCalculus(g, metric, A)
    beta = np.stack([np.moveaxis(random_smooth_field(rng, 2, metric.radius)(g.x1, g.x2), -1, 0)
                     for _ in range(2)])
    a, b = fc.star_dA_via_mu(beta), fc.ext.star_d1(beta)
    assert np.max(np.abs(a - b)) <= 1e-4 * np.max(np.abs(b))


def test_divergence_via_mu_vanishes_on_coclosed(rng):
    # beta = *d f is co-closed for A = 0
    g = DiskGrid(16, 32, 1.0)
    fc = FiberCalculus(g, EuclideanMetric())
    f = np.moveaxis(random_smooth_field(rng, 1, 1.0)(g.x1, g.x2), -1, 0)
    beta = fc.ext.star1(fc.ext.d0(f))
    assert np.max(np.abs(fc.divergence_via_mu(beta))) < 1e-8


def test_projection_and_support(grid, rng):
    u = _random(rng, grid)
    assert u.even().support() == [-2, 0, 2]
    assert u.odd().support() == [-3, -1, 1, 3]
    assert u.resized(1).N == 1 and u.resized(5).norm() == pytest.approx(u.norm())
