import numpy as np
import pytest

from attxray import (CapMetric, DiskGrid, EuclideanMetric, FanGrid, FiberFunction,
                     TransportModel, connection_from_h, reduction_check)
from attxray.tensor import (conjugation_residual, entry_phase, shift_degree,
                            twisted_scattering_check, unit_section)


@pytest.fixture(scope="module")
def setup():
    met = CapMetric(1.0, 0.5)
    g = DiskGrid(12, 24, 0.5)
    fan = FanGrid(32, 16, 0.05, 0.5)
    return met, g, fan


def test_shift_degree_moves_coefficients(setup):
    _, g, _ = setup
    u = FiberFunction.from_degree(g, -1, np.ones(g.shape))
    v = shift_degree(u, 2)
    assert v.support() == [1]
    assert shift_degree(v, -2).support() == [-1]


def test_flat_h_gives_zero_connection():
    g = DiskGrid(8, 16, 1.0)
    a, leak, mism = connection_from_h(g, EuclideanMetric())
    assert np.max(np.abs(a)) < 1e-12 and leak == 0.0


def test_h_connection_matches_closed_form(setup):
    met, g, _ = setup
    a, leak, mism = connection_from_h(g, met)
    assert mism < 1e-10 and leak < 1e-12
    assert unit_section(g).support() == [1]


@pytest.mark.parametrize("m", [-2, 1, 2])
def test_reduction(setup, m):
    met, g, fan = setup
    f = np.exp(-(g.x1**2 + g.x2**2) / 0.05)
    plain = TransportModel(met, fan=fan, grid=g)
    assert reduction_check(met, f, m, plain=plain).discrepancy < 1e-6


def test_degree_one_flat_reduction_is_plain_transform():
    g = DiskGrid(8, 16, 1.0)
    fan = FanGrid(16, 8, 0.05)
    r = reduction_check(EuclideanMetric(), np.cos(g.x1), 1, fan=fan, grid=g)
    assert r.discrepancy < 1e-10


def test_twist_sign(setup):
    met, g, fan = setup
    assert twisted_scattering_check(met, 2, fan=fan, grid=g) < 1e-6


def test_conjugation_identity(setup):
    met, g, _ = setup
    u = FiberFunction.from_degree(g, 1, np.exp(g.x1) + 1j * g.x2)
    assert conjugation_residual(g, met, u, 2) < 1e-12


def test_entry_phase_is_unimodular(setup):
    _, _, fan = setup
    assert np.allclose(np.abs(entry_phase(fan, 3)), 1.0)
