import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attxray import (CapMetric, EuclideanMetric, FanGrid, HyperbolicMetric, flow_to_boundary,
                     geodesic_from_boundary, metric_from_config, scattering_relation,
                     simplicity_check)
from attxray.geometry import NonTerminationError, fan_to_phase, santalo_volumes, wrap_angle


@given(st.floats(-50, 50, allow_nan=False))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -np.pi <= w < np.pi
    assert np.isclose(np.cos(w), np.cos(a), atol=1e-9)


def test_diameter_anchor():
    res = flow_to_boundary(EuclideanMetric(), np.array([1.0]), np.array([0.0]), np.array([np.pi]))
    assert res.t[0] == pytest.approx(2.0, abs=1e-12)
    assert res.x1[0] == pytest.approx(-1.0, abs=1e-12)


def test_vertical_chord_anchor():
    res = flow_to_boundary(EuclideanMetric(), np.array([0.0]), np.array([-1.0]),
                           np.array([np.pi / 2]))
    assert (res.x1[0], res.x2[0]) == pytest.approx((0.0, 1.0), abs=1e-12)
    assert res.theta[0] % (2 * np.pi) == pytest.approx(np.pi / 2, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(-1.4, 1.4))
def test_euclidean_chord_formula(phi, a):
    phi_o, a_o, tau = scattering_relation(EuclideanMetric(), phi, a)
    assert tau == pytest.approx(2 * np.cos(a), abs=1e-10)
    assert abs(wrap_angle(phi_o - (phi + np.pi + 2 * a))) < 1e-10
    assert a_o == pytest.approx(-a, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_euclidean_exit_time_interior(r, ph, th):
    x1, x2 = r * np.cos(ph), r * np.sin(ph)
    res = flow_to_boundary(EuclideanMetric(), np.array([x1]), np.array([x2]), np.array([th]))
    b = x1 * np.cos(th) + x2 * np.sin(th)
    assert res.t[0] == pytest.approx(-b + np.sqrt(b * b + 1 - r * r), abs=1e-10)


def test_curvature_signs():
    z = np.zeros(1)
    assert EuclideanMetric().gaussian_curvature(z, z)[0] == pytest.approx(0.0)
    assert CapMetric(1.0, 0.5).gaussian_curvature(z, z)[0] == pytest.approx(1.0, rel=1e-8)
    assert HyperbolicMetric(1.0, 0.6).gaussian_curvature(z, z)[0] == pytest.approx(-1.0, rel=1e-8)


def test_metric_config_roundtrip(metric):
    again = metric_from_config(metric.to_config())
    x = np.array([0.1 * metric.radius])
    assert again.lam(x, x) == pytest.approx(metric.lam(x, x))


def test_with_radius_keeps_family(metric):
    big = metric.with_radius(1.1 * metric.radius)
    x = np.array([0.2 * metric.radius])
    assert type(big) is type(metric)
    assert big.lam(x, x) == pytest.approx(metric.lam(x, x))


def test_trace_samples_and_csv(tmp_path):
    tr = geodesic_from_boundary(CapMetric(1.0, 0.5), 0.3, 0.2)
    assert tr.speed_defect(CapMetric(1.0, 0.5)) < 1e-12
    tr.to_csv(tmp_path / "t.csv")
    data = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
    assert data.shape[1] == 4 and data[-1, 0] == pytest.approx(tr.tau)


def test_glancing_margin_is_enforced():
    with pytest.raises(ValueError):
        geodesic_from_boundary(EuclideanMetric(), 0.0, 1.55, delta=0.05)


def test_simplicity(metric):
    rep = simplicity_check(metric, n_phi=16, n_a=16)
    assert rep.passed and rep.min_boundary_curvature > 0


def test_large_cap_is_not_simple():
    # beyond the equator of the unit sphere the boundary is concave
    rep = simplicity_check(CapMetric(1.0, 1.5), n_phi=8, n_a=8)
    assert not rep.passed


def test_santalo_volume(metric):
    vol, bnd = santalo_volumes(metric, FanGrid(64, 48, 0.0, metric.radius))
    assert bnd == pytest.approx(vol, rel=1e-6)


def test_fan_points_point_inward():
    fan = FanGrid(16, 8, 0.05, 1.0)
    x1, x2, th = fan.points()
    assert np.all(x1 * np.cos(th) + x2 * np.sin(th) < 0)
    assert np.allclose(np.hypot(x1, x2), 1.0)
    x1b, x2b, thb = fan_to_phase(fan.PHI, fan.A, 1.0)
    assert np.allclose(thb, th)


def test_start_outside_raises():
    with pytest.raises(ValueError):
        flow_to_boundary(EuclideanMetric(), np.array([1.5]), np.array([0.0]), np.array([0.0]))
    assert issubclass(NonTerminationError, RuntimeError)
