import numpy as np
import pytest

from attxray import (CapMetric, CollarWitnessBasis, DiskGrid, FanGrid, HodgeSolver,
                     TransportModel, WitnessBasis, adjoint_duality, factorization_check,
                     random_smooth_field, range_test_0form, solve_adjoint0)
from attxray.range_ops import mu_norm, odd_noise, tsvd_solve


@pytest.fixture(scope="module")
def cap_model():
    met = CapMetric(1.0, 0.5)
    return TransportModel(met, fan=FanGrid(48, 24, 0.02, 0.5), grid=DiskGrid(12, 24, 0.5),
                          n_theta=48, torus_theta=96, torus_phi=96)


def _field(rng, grid):
    return np.moveaxis(random_smooth_field(rng, 1, grid.radius, 2, 2)(grid.x1, grid.x2), -1, 0)


def test_tsvd_truncates():
    M = np.diag([1.0, 1e-3, 1e-12])
    x, info = tsvd_solve(M, np.ones(3), rel=1e-6)
    assert info["rank"] == 2 and x[2] == 0.0
    assert x[:2] == pytest.approx([1.0, 1e3])


def test_duality(cap_model, rng):
    b = WitnessBasis(1, 2, 2, cap_model.fan.delta, 0.8)
    g = cap_model.grid
    out = adjoint_duality(cap_model, b, _field(rng, g), np.stack([_field(rng, g), _field(rng, g)]))
    assert max(out.values()) < 1e-3


def test_factorization_small(cap_model):
    r = factorization_check(cap_model, WitnessBasis(1, 1, 1, cap_model.fan.delta, 0.8))
    assert r["minus"] < 2e-2 and r["plus"] < 2e-2


def test_range0_in_range_and_noise(cap_model, rng):
    basis = CollarWitnessBasis(cap_model.metric, None, 1, 4, 6)
    b = _field(rng, cap_model.grid)
    u = cap_model.I0(b)
    hs = HodgeSolver(cap_model.grid, cap_model.metric)
    synth = range_test_0form(cap_model, u, basis, b=b, hodge=hs, rel=1e-10)
    blind = range_test_0form(cap_model, u, basis, rel=1e-10)
    noisy = range_test_0form(cap_model, u + odd_noise(cap_model, rng, 0.05, u), basis, rel=1e-10)
    assert synth.residual_rel < 2e-2
    assert noisy.residual_rel > 5 * blind.residual_rel
    assert synth.as_dict()["method"] == "forward-identity"


def test_odd_noise_parity(cap_model, rng):
    u = cap_model.I0(_field(rng, cap_model.grid))
    nu = odd_noise(cap_model, rng, 0.05, u)
    assert float(mu_norm(cap_model, nu)) == pytest.approx(0.05 * float(mu_norm(cap_model, u)))


def test_surjectivity_small(cap_model, rng):
    basis = CollarWitnessBasis(cap_model.metric, None, 1, 4, 6)
    _, res, info = solve_adjoint0(cap_model, basis, _field(rng, cap_model.grid), rel=1e-10)
    assert res < 5e-2 and info["rank"] > 0
