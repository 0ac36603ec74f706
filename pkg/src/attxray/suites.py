"""Named verification suites and the runner behind the command line.

Each check takes a :class:`Context` and returns a list of :class:`CheckResult`.
Checks draw random inputs from a generator seeded by (seed, check name), so a
report does not depend on which checks ran before it or on the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .connection import ZeroConnection, random_gauge, random_polynomial_connection
from .fiber import FiberCalculus, FiberFunction
from .geometry import (EuclideanMetric, FanGrid, metric_from_config, santalo_volumes,
                       simplicity_check, wrap_angle)
from .grid import DiskGrid, random_smooth_field
from .hodge import HodgeSolver, IndeterminateDimensionError
from .io import check_rng, max_workers, validate_config, write_json
from .range_ops import (adjoint_duality, factorization_check, odd_noise, range_test_0form,
                        range_test_1form, solve_adjoint0, solve_adjoint1)
from .tensor import (TensorRangeModel, connection_from_h, conjugation_residual,
                     invariant_witness, potential_insensitivity, reduction_check,
                     tensor_transform, twisted_scattering_check)
from .transport import BoundaryFunction, CollarWitnessBasis, TransportModel, WitnessBasis

__all__ = ["THRESHOLDS", "SUITES", "CheckResult", "Context", "run_suite", "run_checks"]

# acceptance thresholds, keyed by check family
THRESHOLDS = {
    "euclidean_anchor": 1e-8,
    "unitarity": 1e-8,
    "gauge_invariance": 1e-6,
    "scattering_identity": 1e-4,
    "kernel_containment": 1e-3,
    "bracket": 5e-4,
    "star_dA": 1e-4,
    "duality": 1e-3,
    "factorization": 5e-3,
    "range0_synth": 1e-2,
    "range0_noise_ratio": 10.0,
    "range1": 1e-2,
    "range1_noise_ratio": 10.0,
    "hodge_decomposition": 1e-3,
    "tensor_reduction": 1e-2,
    "tensor_range": 2e-2,
    "tensor_insensitivity": 2.0,
    "surjectivity": 1e-2,
    "simplicity_santalo": 1e-6,
    "tensor_sign": 1e-6,
    "connection_from_h": 1e-8,
    "invariant_witness": 5e-2,
    "roundoff_floor": 1e-12,
    "decay_ratio": 4.0,
}


@dataclass
class CheckResult:
    name: str
    criterion: str
    identity: str
    passed: bool
    residual_abs: float | None
    residual_rel: float | None
    threshold: float | None
    resolution: dict
    details: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict, repr=False)
    seconds: float = 0.0

    def as_dict(self):
        return {
            "name": self.name,
            "criterion": self.criterion,
            "identity": self.identity,
            "passed": bool(self.passed),
            "residual_abs": self.residual_abs,
            "residual_rel": self.residual_rel,
            "threshold": self.threshold,
            "resolution": self.resolution,
            "details": self.details,
        }


class Context:
    """Resolved configuration plus factories for metrics, grids and models."""

    def __init__(self, cfg):
        self.cfg = validate_config(cfg)
        self.seed = int(self.cfg["seed"])
        self.res = self.cfg["resolution"]
        self.metrics = [metric_from_config(m) for m in self.cfg["metrics"]]
        self.n_values = list(self.cfg["n_values"])
        self.refine = bool(self.cfg["refine"])
        self.tsvd_rel = float(self.cfg["tsvd_rel"])
        self.witness = self.cfg["witness"]

    def rng(self, name):
        return check_rng(self.seed, name)

    def label(self, metric):
        return f"{metric.kind}(R={metric.radius:g})"

    def connection(self, rng, n):
        """A = 0 for n = 1, a seeded polynomial connection otherwise."""
        if n == 1:
            return ZeroConnection(1)
        c = self.cfg.get("connection")
        if c and c.get("kind") == "random_poly":
            return random_polynomial_connection(rng, n, int(c.get("degree", 2)),
                                                float(c.get("scale", 1.0)))
        return random_polynomial_connection(rng, n, 2, 1.0)

    def grid(self, metric, scale=1.0, dense=False):
        r = self.res
        if dense:
            # dense Hodge matrices: keep the grid small
            return DiskGrid(min(16, r["N_r"]), min(32, r["N_phi"]), metric.radius)
        nr = max(8, int(round(r["N_r"] * scale)))
        nphi = max(8, 2 * int(round(r["N_phi"] * scale / 2)))
        return DiskGrid(nr, nphi, metric.radius)

    def fan(self, metric, delta=None, scale=1.0):
        f = self.res["fan"]
        return FanGrid(max(8, int(round(f["n_phi"] * scale))), max(4, int(round(f["n_a"] * scale))),
                       self.res["delta_glancing"] if delta is None else delta, metric.radius)

    def model(self, metric, connection=None, scale=1.0, fan=None, grid=None, n_fan=1.0):
        r = self.res
        t = r["torus"]
        return TransportModel(
            metric, connection, fan=fan or self.fan(metric, scale=n_fan),
            grid=grid or self.grid(metric, scale),
            n_theta=max(16, int(round(r["n_theta"] * scale))),
            torus_theta=max(32, int(round(t["n_theta"] * scale))),
            torus_phi=max(32, int(round(t["n_phi"] * scale))),
            h=r["h_ode"], n_simpson=r["n_simpson"])

    def collar_model(self, metric, connection=None):
        g = self.grid(metric, dense=True)
        fan = self.fan(metric, delta=self.witness["collar"]["delta_glancing"])
        return self.model(metric, connection, fan=fan, grid=g)

    def margin_basis(self, n, fan):
        w = self.witness
        return WitnessBasis(n, w["J"], w["L"], fan.delta, w["width"])

    def collar_basis(self, metric, connection, n):
        c = self.witness["collar"]
        conn = None if isinstance(connection, ZeroConnection) else connection
        return CollarWitnessBasis(metric, conn, n, c["J"], c["L"], c["factor"])

    @staticmethod
    def describe(model):
        return {"grid": [model.grid.n_r, model.grid.n_phi],
                "fan": [model.fan.n_phi, model.fan.n_a], "delta_glancing": model.fan.delta,
                "n_theta": model.n_theta, "torus": [model.torus_phi, model.torus_theta],
                "h_ode": model.h, "n": model.n}


def _field(rng, n, grid, vanish=False, K=3, J=3):
    sf = random_smooth_field(rng, n, grid.radius, K, J, vanish_on_boundary=vanish)
    return np.moveaxis(sf(grid.x1, grid.x2), -1, 0)


def _one_form(rng, n, grid):
    return np.stack([_field(rng, n, grid) for _ in range(2)])


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# geometry ------------------------------------------------------------------------------


def check_euclidean_anchors(ctx):
    t0 = time.time()
    met = EuclideanMetric(1.0)
    model = ctx.model(met)
    ex = model.fan_exit
    x1, x2, th = model.fan.points()
    tau_ref = -2 * (x1 * np.cos(th) + x2 * np.sin(th))
    e_tau = _rel(ex["tau"], tau_ref)
    I_grid = model.I0(np.ones((1,) + model.grid.shape))[..., 0]
    I_call = model.I_callable(lambda a, b, c: np.ones((np.size(a), 1)))[..., 0]
    e_I = max(_rel(I_grid, tau_ref), _rel(I_call, tau_ref))
    F = model.fan
    e_phi = float(np.max(np.abs(wrap_angle(ex["phi_out"] - (F.PHI + np.pi + 2 * F.A)))))
    e_a = float(np.max(np.abs(wrap_angle(ex["a_out"] + F.A))))
    e_alpha = max(e_phi, e_a) / np.pi
    thr = THRESHOLDS["euclidean_anchor"]
    res = ctx.describe(model)
    out = [
        CheckResult("euclidean_exit_time", "1", "tau(x,v) = -2<x,v>", e_tau <= thr,
                    float(np.max(np.abs(ex["tau"] - tau_ref))), e_tau, thr, res),
        CheckResult("euclidean_transform_of_one", "1", "I^0(1) = tau", e_I <= thr, None, e_I,
                    thr, res, {"grid_route": _rel(I_grid, tau_ref),
                               "callable_route": _rel(I_call, tau_ref)}),
        CheckResult("euclidean_scattering_relation", "1",
                    "alpha(phi, a) = (phi + pi + 2a, -a)", e_alpha <= thr, max(e_phi, e_a),
                    e_alpha, thr, res),
    ]
    dt = (time.time() - t0) / len(out)
    for r in out:
        r.seconds = dt
    if ctx.cfg["csv"]:
        out[0].artifacts["euclidean_tau"] = BoundaryFunction(F, ex["tau"][..., None])
    return out


def check_simplicity(ctx):
    out = []
    thr = THRESHOLDS["simplicity_santalo"]
    for met in ctx.metrics:
        t0 = time.time()
        rep = simplicity_check(met)
        vol, bnd = santalo_volumes(met)
        e = abs(vol - bnd) / vol
        out.append(CheckResult(f"simplicity_{met.kind}", "geometry",
                               "simple surface; Santalo volume 2 pi Area = int tau dmu",
                               bool(rep.passed and e <= thr), abs(vol - bnd), e, thr,
                               {"fan": [128, 64]}, {"simplicity": rep.as_dict(),
                                                    "metric": met.to_config()},
                               seconds=time.time() - t0))
    return out


# scattering --------------------------------------------------------------------------------


def check_scattering(ctx):
    """Unitarity, gauge invariance of C_A and C_A^{-1} o alpha = D_A."""
    rng = ctx.rng("scattering")
    out = []
    for met in ctx.metrics:
        for n in ctx.n_values:
            t0 = time.time()
            A = random_polynomial_connection(rng, n, 2, 1.0)
            AG = random_gauge(rng, A, radius=met.radius)
            m = ctx.model(met, A)
            mg = ctx.model(met, AG, fan=m.fan, grid=m.grid)
            sd = m.scattering_data()
            sg = mg.scattering_data(with_D=False)
            tr = [m.propagate(phi, a).unitarity_defect()
                  for phi, a in zip(rng.uniform(0, 2 * np.pi, 4), rng.uniform(-1.4, 1.4, 4))]
            u = max(sd.unitarity_defect(), sg.unitarity_defect(), max(tr))
            g = float(np.max(np.abs(sg.C - sd.C)))
            ident = sd.identity_residual()
            lab = f"{met.kind}_n{n}"
            res = ctx.describe(m)
            dt = (time.time() - t0) / 3
            out += [
                CheckResult(f"unitarity_{lab}", "2", "|U*U - Id|_F on all traces",
                            u <= THRESHOLDS["unitarity"], u, u, THRESHOLDS["unitarity"], res,
                            {"trace_defects": tr}, seconds=dt),
                CheckResult(f"gauge_scattering_{lab}", "2", "C_{A^G} = C_A for G|bdry = Id",
                            g <= THRESHOLDS["gauge_invariance"], g, g,
                            THRESHOLDS["gauge_invariance"], res, seconds=dt),
                CheckResult(f"scattering_identity_{lab}", "3", "C_A^{-1} o alpha = D_A",
                            ident <= THRESHOLDS["scattering_identity"], ident, ident,
                            THRESHOLDS["scattering_identity"], res,
                            {"time_reversal_defect": sd.meta["time_reversal_defect"]},
                            seconds=dt),
            ]
    return out


def _c1_norm(met, sf, n_r=48, n_phi=96):
    g = DiskGrid(n_r, n_phi, met.radius)
    v = sf(g.x1, g.x2)
    gr = sf.grad(g.x1, g.x2)
    el = np.exp(-met.lam(g.x1, g.x2))[..., None, None]
    return float(np.max(np.abs(v)) + np.max(np.abs(gr * el)))


def check_kernel_containment(ctx):
    """I_A((X + A) p) = 0 for sections p vanishing on the boundary.

    (X + A) p is the restriction to SM of the 1-form d_A p, so the transform
    is I_A^1(d_A p) with d_A p differentiated spectrally on the grid.
    """
    rng = ctx.rng("kernel")
    out = []
    thr = THRESHOLDS["kernel_containment"]
    for met in ctx.metrics:
        for n in ctx.n_values:
            t0 = time.time()
            A = ctx.connection(rng, n)
            p = random_smooth_field(rng, n, met.radius, 3, 3, vanish_on_boundary=True)
            m = ctx.model(met, A)
            g = m.grid
            pg = np.moveaxis(p(g.x1, g.x2), -1, 0)
            I = m.I1(m.ext.d0(pg))
            c1 = _c1_norm(met, p)
            val = float(np.max(np.abs(I)))
            out.append(CheckResult(f"kernel_containment_{met.kind}_n{n}", "4",
                                   "I_A((X + A) p) = 0, p|bdry = 0", val <= thr * c1, val,
                                   val / c1, thr, ctx.describe(m),
                                   {"p_C1_norm": c1, "p_boundary_max": float(np.abs(pg[..., 0, :]).max())},
                                   seconds=time.time() - t0))
    return out


# fibre calculus ----------------------------------------------------------------------------


def _random_fiber(rng, grid, n, N=4):
    u = FiberFunction.zeros(grid, N, n)
    for k in range(-N, N + 1):
        u.coeffs[N + k] = _field(rng, n, grid, K=2, J=2) / (1 + k * k)
    return u


def check_bracket(ctx):
    rng = ctx.rng("bracket")
    out = []
    thr = THRESHOLDS["bracket"]
    scales = (0.5, 2 / 3, 1.0) if ctx.refine else (1.0,)
    for met in ctx.metrics:
        for n in ctx.n_values:
            t0 = time.time()
            A = ctx.connection(rng, n)
            seed = int(rng.integers(2**31))
            resid = []
            for s in scales:
                g = ctx.grid(met, s)
                u = _random_fiber(np.random.default_rng(seed), g, n)
                resid.append(FiberCalculus(g, met, A).bracket_residual(u))
            floor = THRESHOLDS["roundoff_floor"]
            decay_ok = all(b <= a / THRESHOLDS["decay_ratio"] or max(a, b) <= floor
                           for a, b in zip(resid, resid[1:]))
            out.append(CheckResult(f"bracket_{met.kind}_n{n}", "5",
                                   "[H, X + A] u = (X_perp + *A) u_0 + {(X_perp + *A) u}_0",
                                   resid[-1] <= thr and decay_ok, None, resid[-1], thr,
                                   {"grids": [list(ctx.grid(met, s).shape) for s in scales]},
                                   {"refinement_residuals": resid, "decay_ok": decay_ok},
                                   seconds=time.time() - t0))
    return out


def check_star_dA(ctx):
    rng = ctx.rng("star_dA")
    out = []
    thr = THRESHOLDS["star_dA"]
    for met in ctx.metrics:
        for n in ctx.n_values:
            t0 = time.time()
            A = ctx.connection(rng, n)
            g = ctx.grid(met)
            fc = FiberCalculus(g, met, A)
            beta = _one_form(rng, n, g)
            a = fc.star_dA_via_mu(beta)
            b = fc.ext.star_d1(beta)
            e = _rel(a, b)
            st = fc.structure_residuals(_random_fiber(rng, g, n))
            out.append(CheckResult(f"star_dA_{met.kind}_n{n}", "6",
                                   "*d_A beta via mu_+- equals exterior *d_A beta", e <= thr,
                                   float(np.max(np.abs(a - b))), e, thr,
                                   {"grid": list(g.shape)},
                                   {"structure_equations": np.asarray(st).tolist()},
                                   seconds=time.time() - t0))
    return out


# duality and factorization -------------------------------------------------------------------


def check_factorization(ctx):
    rng = ctx.rng("factorization")
    out = []
    thr = THRESHOLDS["factorization"]
    ns = sorted({1, *ctx.n_values})
    for met in ctx.metrics:
        for n in ns:
            t0 = time.time()
            A = ctx.connection(rng, n)
            levels = ((2 / 3, 1.0) if ctx.refine else (1.0,))
            fac = []
            for s in levels:
                m = ctx.model(met, A, scale=s)
                basis = ctx.margin_basis(n, m.fan)
                fac.append(factorization_check(m, basis))
            f = _field(rng, n, m.grid)
            beta = _one_form(rng, n, m.grid)
            dual = adjoint_duality(m, basis, f, beta)
            lab = f"{met.kind}_n{n}"
            res = ctx.describe(m)
            res["witness"] = basis.describe()
            dt = (time.time() - t0) / 3
            for key, ident in (("minus", "-2 pi P_- = I^0 *d_A (I^1)^*"),
                               ("plus", "-2 pi P_+ = I^1 *d_A (I^0)^*")):
                v = fac[-1][key]
                seq = [a[key] for a in fac]
                ok = all(b < a for a, b in zip(seq, seq[1:]))
                out.append(CheckResult(f"factorization_{key}_{lab}", "8", ident,
                                       v <= thr and ok, None, v, thr, res,
                                       {"refinement_residuals": seq, "decay_ok": ok,
                                        "l2": fac[-1][key + "_l2"],
                                        "witnesses": "margin-supported"}, seconds=dt))
            dthr = THRESHOLDS["duality"]
            d = max(dual.values())
            out.append(CheckResult(f"duality_{lab}", "7",
                                   "<I_A f, w>_mu = <f, I_A^* w> (2 pi and pi factors)",
                                   d <= dthr, None, d, dthr, res, dual, seconds=dt))
    return out


# range tests and surjectivity -----------------------------------------------------------------


def check_range0(ctx):
    rng = ctx.rng("range0")
    out = []
    for met in ctx.metrics:
        for n in ctx.n_values:
            t0 = time.time()
            A = ctx.connection(rng, n)
            m = ctx.collar_model(met, A)
            basis = ctx.collar_basis(met, A, n)
            hs = HodgeSolver(m.grid, met, A)
            b = _field(rng, n, m.grid)
            u = m.I0(b)
            rel = ctx.tsvd_rel
            synth = range_test_0form(m, u, basis, b=b, hodge=hs, rel=rel)
            blind = range_test_0form(m, u, basis, rel=rel)
            nu = odd_noise(m, rng, 0.05, u)
            noisy = range_test_0form(m, u + nu, basis, rel=rel)
            ratio = noisy.residual_rel / max(blind.residual_rel, 1e-300)
            x0, r0, info0 = solve_adjoint0(m, basis, b, rel)
            x1, r1, info1 = solve_adjoint1(m, basis, hs.solenoidal_potential(b).beta, rel)
            lab = f"{met.kind}_n{n}"
            res = ctx.describe(m)
            res["witness"] = basis.describe()
            dt = (time.time() - t0) / 4
            sthr = THRESHOLDS["range0_synth"]
            nthr = THRESHOLDS["range0_noise_ratio"]
            jthr = THRESHOLDS["surjectivity"]
            r_syn = CheckResult(f"range0_synthesized_{lab}", "9",
                                "u = I_A^0 b  =>  u + 2 pi P_- w = 0, w from (I^1)^* w = beta",
                                synth.residual_rel <= sthr, synth.residual_abs,
                                synth.residual_rel, sthr, res, synth.as_dict(), seconds=dt)
            if ctx.cfg["csv"]:
                r_syn.artifacts[f"range0_data_{lab}"] = BoundaryFunction(m.fan, u)
                r_syn.artifacts[f"range0_noise_{lab}"] = BoundaryFunction(m.fan, nu)
            out += [
                r_syn,
                CheckResult(f"range0_odd_noise_{lab}", "9",
                            "5% odd noise raises the blind residual by >= 10x",
                            ratio >= nthr, noisy.residual_abs, ratio, nthr, res,
                            {"blind_in_range": blind.as_dict(), "blind_noisy": noisy.as_dict()},
                            seconds=dt),
                CheckResult(f"surjectivity_I0_{lab}", "12", "I_{0,A}^* w = b", r0 <= jthr, None,
                            r0, jthr, res, {"lstsq": info0}, seconds=dt),
                CheckResult(f"surjectivity_I1_{lab}", "12",
                            "(I_A^1)^* w = beta, beta solenoidal", r1 <= jthr, None, r1, jthr,
                            res, {"lstsq": info1}, seconds=dt),
            ]
    return out


def check_range1(ctx):
    rng = ctx.rng("range1")
    out = []
    for met in ctx.metrics:
        for n in ctx.n_values:
            t0 = time.time()
            A = ctx.connection(rng, n)
            m = ctx.collar_model(met, A)
            basis = ctx.collar_basis(met, A, n)
            harm = HodgeSolver(m.grid, met, A).harmonic_space()
            alpha = _one_form(rng, n, m.grid)
            u = m.I1(alpha)
            rel = ctx.tsvd_rel
            rep = range_test_1form(m, u, basis, harm, rel)
            nu = odd_noise(m, rng, 0.05, u, sign=1)
            noisy = range_test_1form(m, u + nu, basis, harm, rel)
            ratio = noisy.residual_rel / max(rep.residual_rel, 1e-300)
            lab = f"{met.kind}_n{n}"
            res = ctx.describe(m)
            res["witness"] = basis.describe()
            dt = (time.time() - t0) / 2
            thr = THRESHOLDS["range1"]
            nthr = THRESHOLDS["range1_noise_ratio"]
            out += [
                CheckResult(f"range1_{lab}", "range1",
                            "u = I_A^1 alpha  =>  u = P_+ w + sum c_j I^1 eta_j",
                            rep.residual_rel <= thr, rep.residual_abs, rep.residual_rel, thr,
                            res, {**rep.as_dict(), "harmonic": harm.as_dict()}, seconds=dt),
                CheckResult(f"range1_noise_{lab}", "range1",
                            "5% noise of the wrong parity raises the residual by >= 10x",
                            ratio >= nthr, noisy.residual_abs, ratio, nthr, res,
                            {"noisy": noisy.as_dict()}, seconds=dt),
            ]
    return out


# Hodge theory ---------------------------------------------------------------------------------


def _dimension(grid, met, A):
    try:
        h = HodgeSolver(grid, met, A).harmonic_space()
        return h.dimension, h.as_dict()
    except IndeterminateDimensionError as exc:
        return -1, {"error": str(exc)}


def check_hodge(ctx):
    rng = ctx.rng("hodge")
    out = []
    thr = THRESHOLDS["hodge_decomposition"]
    for met in ctx.metrics:
        t0 = time.time()
        g = ctx.grid(met, dense=True)
        gc = DiskGrid(max(8, g.n_r * 3 // 4), max(8, (g.n_phi * 3 // 4) // 2 * 2), met.radius)
        cases = {}
        for n in ctx.n_values:
            Z = ZeroConnection(n)
            cases[f"zero_n{n}"] = Z
            cases[f"gauge_trivial_n{n}"] = random_gauge(rng, Z, radius=met.radius)
        n2 = max(ctx.n_values)
        Ar = random_polynomial_connection(rng, n2, 2, 1.0)
        cases[f"random_n{n2}"] = Ar
        cases[f"random_gauged_n{n2}"] = random_gauge(rng, Ar, radius=met.radius)
        dims = {}
        info = {}
        for key, A in cases.items():
            d_fine, i_fine = _dimension(g, met, A)
            d_coarse, _ = _dimension(gc, met, A) if ctx.refine else (d_fine, None)
            dims[key] = (d_coarse, d_fine)
            info[key] = i_fine
        dt = time.time() - t0
        lab = met.kind
        res = {"grids": [list(gc.shape), list(g.shape)]}
        for key in cases:
            if key.startswith("random"):
                continue
            dc, df = dims[key]
            ok = dc == df == 0
            out.append(CheckResult(f"harmonic_dim_{key}_{lab}", "10",
                                   "dim h_A = 0 (trivial or gauge-trivial A)", ok, float(df),
                                   None, 0.0, res, {"dimensions": [dc, df], **info[key]},
                                   seconds=dt / len(cases)))
        k1, k2 = f"random_n{n2}", f"random_gauged_n{n2}"
        inv = dims[k1][0] == dims[k1][1] == dims[k2][0] == dims[k2][1] >= 0
        out.append(CheckResult(f"harmonic_dim_invariance_{lab}", "10",
                               "dim h_A invariant under refinement and gauge", inv, None, None,
                               None, res, {"dimensions": {k1: dims[k1], k2: dims[k2]},
                                           k1: info[k1], k2: info[k2]},
                               seconds=dt / len(cases)))
        for n in ctx.n_values:
            t1 = time.time()
            A = cases[f"random_n{n2}"] if n == n2 else ctx.connection(rng, n)
            hs = HodgeSolver(g, met, A)
            alpha = _one_form(rng, n, g)
            dec = hs.decompose(alpha)
            out.append(CheckResult(f"hodge_decomposition_{lab}_n{n}", "10",
                                   "alpha = d_A p + *d_A a + eta, p|bdry = 0",
                                   dec.residual <= thr and dec.boundary_p <= 1e-8, None,
                                   dec.residual, thr, {"grid": list(g.shape)},
                                   {"boundary_p": dec.boundary_p,
                                    "harmonic_dimension": len(dec.eta_coeffs)},
                                   seconds=time.time() - t1))
    return out


# tensors ---------------------------------------------------------------------------------------


def _curved(ctx):
    return [m for m in ctx.metrics if m.kind != "euclidean"] or ctx.metrics


def check_tensor(ctx):
    rng = ctx.rng("tensor")
    out = []
    for met in _curved(ctx):
        t0 = time.time()
        g = ctx.grid(met, dense=True)
        fan = ctx.fan(met, delta=ctx.witness["collar"]["delta_glancing"])
        plain = ctx.model(met, fan=fan, grid=g)
        res = ctx.describe(plain)
        f = _field(rng, 1, g)[0]
        thr = THRESHOLDS["tensor_reduction"]
        red = [reduction_check(met, f, m, plain=plain) for m in range(-2, 3)]
        worst = max(r.discrepancy for r in red)
        out.append(CheckResult(f"tensor_reduction_{met.kind}", "11",
                               "I(f h^m) = h^m|entry I^0_{-m a}(f), m = -2..2", worst <= thr,
                               None, worst, thr, res, {"per_m": [r.as_dict() for r in red]},
                               seconds=time.time() - t0))
        t1 = time.time()
        sg = max(twisted_scattering_check(met, m, fan=fan, grid=g) for m in (-2, -1, 1, 2))
        _, leak, mism = connection_from_h(g, met)
        u = _random_fiber(rng, g, 1, 2)
        conj = max(conjugation_residual(g, met, u, m) for m in (-2, 2))
        sthr = THRESHOLDS["tensor_sign"]
        out.append(CheckResult(f"tensor_twist_conventions_{met.kind}", "11",
                               "e^{m I_1(a)} = C_{-ma}; a = -h^-1 X h = i *d lambda",
                               sg <= sthr and mism <= THRESHOLDS["connection_from_h"]
                               and conj <= THRESHOLDS["connection_from_h"],
                               sg, sg, sthr, res,
                               {"connection_mismatch": mism, "degree_leakage": leak,
                                "conjugation_residual": conj,
                                "convention": "h = dz(v)/|dz(v)| = e^{i theta}"},
                               seconds=time.time() - t1))
        t2 = time.time()
        c = ctx.witness["collar"]
        trm = TensorRangeModel(met, 2, fan=fan, grid=g, J=c["J"], L=c["L"], factor=c["factor"],
                               n_theta=plain.n_theta, torus_theta=plain.torus_theta,
                               torus_phi=plain.torus_phi, h=ctx.res["h_ode"])
        parts = {k: _field(rng, 1, g, K=2, J=2)[0] for k in (-2, 0, 2)}
        X, Y = g.x1 / met.radius, g.x2 / met.radius
        bump = (1 - X * X - Y * Y) ** 2
        hm = bump * _field(rng, 1, g, K=1, J=2)[0]
        hp = bump * _field(rng, 1, g, K=1, J=2)[0]
        r1, r2, ratio = potential_insensitivity(trm, parts, hm, hp, ctx.tsvd_rel)
        u = tensor_transform(trm.plain, parts)
        noisy = trm.test(u + odd_noise(trm.plain, rng, 0.05, u), ctx.tsvd_rel)
        rthr = THRESHOLDS["tensor_range"]
        ithr = THRESHOLDS["tensor_insensitivity"]
        res2 = dict(res, witness={"kind": "collar", "J": c["J"], "L": c["L"],
                                  "factor": c["factor"]})
        dt = (time.time() - t2) / 2
        out += [
            CheckResult(f"tensor_range_m2_{met.kind}", "11",
                        "I f = sum_k h^{2k} P^{(2k)}_- w_k for m = 2", r1.residual_rel <= rthr,
                        r1.residual_abs, r1.residual_rel, rthr, res2,
                        {**r1.as_dict(), "odd_noise_residual": noisy.residual_rel},
                        seconds=dt),
            CheckResult(f"tensor_potential_insensitivity_{met.kind}", "11",
                        "adding X h with h|bdry = 0 changes the residual by <= 2x",
                        r2.residual_rel <= rthr and ratio <= ithr, r2.residual_abs, ratio, ithr,
                        res2, {"residual_with_potential": r2.residual_rel}, seconds=dt),
        ]
        t3 = time.time()
        wf = _field(rng, 1, g, K=1, J=2)[0]
        _, info = invariant_witness(met, wf, 2, model=trm.models[1],
                                    basis=trm.bases[1], rel=ctx.tsvd_rel)
        wthr = THRESHOLDS["invariant_witness"]
        out.append(CheckResult(f"invariant_witness_m2_{met.kind}", "tensor",
                               "X w = 0 with w_2 = f", info["leading_residual"] <= wthr,
                               None, info["leading_residual"], wthr, res2,
                               info, seconds=time.time() - t3))
    return out


# runner -----------------------------------------------------------------------------------------

SUITES = {
    "geometry": [check_euclidean_anchors, check_simplicity],
    "scattering": [check_scattering, check_kernel_containment],
    "bracket": [check_bracket, check_star_dA],
    "factorization": [check_factorization],
    "range0": [check_range0],
    "range1": [check_range1],
    "tensor": [check_tensor],
    "hodge": [check_hodge],
}
SUITES["all"] = [c for k in ("geometry", "scattering", "bracket", "factorization", "range0",
                             "range1", "tensor", "hodge") for c in SUITES[k]]


def _run_one(args):
    fn, cfg = args
    return fn(Context(cfg))


def run_checks(cfg, checks, workers=None):
    """Run check functions, in parallel up to ``workers``; results keep the input order."""
    workers = workers or max_workers()
    if workers <= 1 or len(checks) <= 1:
        ctx = Context(cfg)
        return [r for fn in checks for r in fn(ctx)]
    with ProcessPoolExecutor(max_workers=min(workers, len(checks))) as ex:
        parts = list(ex.map(_run_one, [(fn, cfg) for fn in checks]))
    return [r for p in parts for r in p]


def run_suite(cfg, suite, out_dir=None, workers=None):
    """Run a named suite; write one JSON per check, CSV exports and summary.json.

    Returns (results, summary). Timing is kept out of the files so that a fixed
    seed and config give byte-identical output.
    """
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    cfg = validate_config(cfg)
    results = run_checks(cfg, SUITES[suite], workers)
    summary = {
        "suite": suite,
        "seed": cfg["seed"],
        "passed": all(r.passed for r in results),
        "n_checks": len(results),
        "n_failed": sum(not r.passed for r in results),
        "checks": [{"name": r.name, "criterion": r.criterion, "passed": bool(r.passed),
                    "residual_rel": r.residual_rel, "threshold": r.threshold}
                   for r in results],
        "config": cfg,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            d = r.as_dict()
            files = []
            for name, bf in sorted(r.artifacts.items()):
                p = out / "csv" / f"{name}.csv"
                p.parent.mkdir(exist_ok=True)
                bf.to_csv(p)
                files.append(str(p.relative_to(out)))
            if files:
                d["csv_files"] = files
            write_json(out / f"{r.name}.json", d)
        write_json(out / "summary.json", summary)
    return results, summary
