import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attxray import (DiskGrid, ExteriorCalculus, GaugeTransformed, PolynomialConnection,
                     ZeroConnection, connection_from_config, random_gauge,
                     random_polynomial_connection, random_smooth_field)
from attxray.connection import SumConnection, gauge_transform_grid, is_skew_hermitian


@pytest.fixture(scope="module")
def grid():
    return DiskGrid(16, 32, 1.0)


def test_quadrature_integrates_polynomials(grid):
    x1, x2 = grid.x1, grid.x2
    assert grid.integrate(np.ones(grid.shape)) == pytest.approx(np.pi, rel=1e-13)
    assert grid.integrate(x1**2) == pytest.approx(np.pi / 4, rel=1e-13)
    assert grid.integrate(x1 * x2**3) == pytest.approx(0.0, abs=1e-14)


def test_spectral_derivatives(grid):
    f = np.exp(grid.x1) * np.sin(2 * grid.x2)
    g1, g2 = grid.gradient(f)
    assert np.max(np.abs(g1 - f)) < 1e-9
    assert np.max(np.abs(g2 - 2 * np.exp(grid.x1) * np.cos(2 * grid.x2))) < 1e-9


def test_interpolant_matches_field(grid, rng):
    sf = random_smooth_field(rng, 1, 1.0, 2, 2)
    f = sf(grid.x1, grid.x2)[..., 0]
    x = rng.uniform(-0.7, 0.7, (2, 50))
    vals = grid.interpolant(f)(x[0], x[1])
    assert np.max(np.abs(vals.reshape(-1) - sf(x[0], x[1])[:, 0])) < 1e-8


def test_smooth_field_vanishing_boundary(rng):
    sf = random_smooth_field(rng, 2, 0.5, 3, 3, vanish_on_boundary=True)
    ph = np.linspace(0, 2 * np.pi, 17)
    assert np.max(np.abs(sf(0.5 * np.cos(ph), 0.5 * np.sin(ph)))) < 1e-12


def test_random_connection_is_skew(rng):
    A = random_polynomial_connection(rng, 3, 2)
    A1, A2 = A.eval(np.array([0.1, 0.3]), np.array([-0.2, 0.4]))
    assert is_skew_hermitian(A1) and is_skew_hermitian(A2)


def test_connection_config_roundtrip(rng):
    A = random_polynomial_connection(rng, 2, 2)
    B = connection_from_config(A.to_config())
    x = np.array([0.3])
    assert np.allclose(A.eval(x, x)[0], B.eval(x, x)[0])
    with pytest.raises(ValueError):
        connection_from_config({"kind": "bogus"})


def test_polynomial_connection_rejects_non_skew():
    with pytest.raises(ValueError):
        PolynomialConnection(np.ones((2, 2, 2, 1, 1)))


def test_gauge_identity_on_boundary(rng):
    A = random_polynomial_connection(rng, 2, 2)
    AG = random_gauge(rng, A, radius=1.0)
    ph = np.linspace(0, 2 * np.pi, 9)
    x1, x2 = np.cos(ph), np.sin(ph)
    G = AG.G(x1, x2)
    assert np.allclose(G, np.eye(2), atol=1e-12)


def test_gauge_analytic_matches_grid_formula(grid, rng):
    A = random_polynomial_connection(rng, 2, 2)
    T = np.array([[1j, 1], [-1, 0.5j]])
    p = np.array([[0.3, 0.2], [0.1, 0.0]])
    AG = GaugeTransformed(A, T, p, 1.0)
    G = np.moveaxis(AG.G(grid.x1, grid.x2), (-2, -1), (0, 1))
    ref = gauge_transform_grid(grid, A.on_grid(grid), G)
    assert np.max(np.abs(ref - AG.on_grid(grid))) < 1e-9


def test_curvature_is_gauge_covariant(rng):
    from attxray import EuclideanMetric

    # gauged connections have larger gradients; resolve them on a finer grid
    grid = DiskGrid(32, 64, 1.0)
    A = random_polynomial_connection(rng, 2, 2)
    AG = random_gauge(rng, A, radius=1.0)
    F = ExteriorCalculus(grid, EuclideanMetric(), A).curvature()
    FG = ExteriorCalculus(grid, EuclideanMetric(), AG).curvature()
    # |F| is gauge invariant pointwise (Frobenius norm of a conjugate)
    assert np.max(np.abs(np.linalg.norm(F, axis=(0, 1)) - np.linalg.norm(FG, axis=(0, 1)))) < 1e-8


def test_dA_squared_is_curvature(grid, metric, rng):
    g = DiskGrid(16, 32, metric.radius)
    A = random_polynomial_connection(rng, 2, 2)
    ext = ExteriorCalculus(g, metric, A)
    s = np.moveaxis(random_smooth_field(rng, 2, metric.radius, 2, 2)(g.x1, g.x2), -1, 0)
    lhs = ext.d1(ext.d0(s))
    rhs = np.einsum("ab...,b...->a...", ext.curvature(), s)
    assert np.max(np.abs(lhs - rhs)) < 1e-8 * max(1.0, np.max(np.abs(rhs)))


def test_codifferential_is_adjoint(metric, rng):
    g = DiskGrid(16, 32, metric.radius)
    A = random_polynomial_connection(rng, 1, 2)
    ext = ExteriorCalculus(g, metric, A)
    sf = random_smooth_field(rng, 1, metric.radius, 2, 2, vanish_on_boundary=True)
    s = np.moveaxis(sf(g.x1, g.x2), -1, 0)
    beta = np.stack([np.moveaxis(random_smooth_field(rng, 1, metric.radius, 2, 2)(g.x1, g.x2),
                                 -1, 0) for _ in range(2)])
    lhs = ext.inner1(ext.d0(s), beta)
    rhs = ext.inner0(s, ext.codiff1(beta))
    assert abs(lhs - rhs) < 1e-8 * ext.norm1(ext.d0(s)) * ext.norm1(beta)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_sm_coefficients_roundtrip(b1, b2):
    g = DiskGrid(4, 8, 1.0)
    from attxray import CapMetric

    ext = ExteriorCalculus(g, CapMetric(1.0, 1.0))
    beta = np.stack([np.full((1,) + g.shape, b1), np.full((1,) + g.shape, b2)]).astype(complex)
    cm, cp = ext.sm_coefficients(beta)
    assert np.allclose(ext.from_sm_coefficients(cm, cp), beta)
    assert np.allclose(ExteriorCalculus.star1(ExteriorCalculus.star1(beta)), -beta)


def test_sum_and_zero_connections(grid):
    from attxray import MetricConnection, CapMetric

    m = CapMetric(1.0, 1.0)
    a = MetricConnection(m, 1.0)
    s = SumConnection(a, MetricConnection(m, -1.0))
    x = np.array([0.2])
    assert np.allclose(s.eval(x, x)[0], 0.0)
    assert np.allclose(ZeroConnection(2).eval(x, x)[1], 0.0)
