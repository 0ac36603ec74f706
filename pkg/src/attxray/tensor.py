"""Reduction of tensor ray transforms to attenuated scalar transforms.

A function of degree m on SM is written f = h^m (h^{-m} f) with the unit
section h = e^{i theta}, which satisfies X h = i a(v) h for the metric
connection a = i * d(lambda). Then I(f) = h^m|_{entry} I^0_{-m a}(h^{-m} f),
so every question about degree-m integrands becomes one about a scalar
transform with a twisted attenuation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .connection import MetricConnection, SumConnection, ZeroConnection
from .fiber import FiberCalculus, FiberFunction
from .range_ops import (P_minus_columns, _fan_matrix, _fan_vector, mu_norm, solve_adjoint0,
                        tsvd_solve)
from .transport import CollarWitnessBasis, TransportModel

__all__ = [
    "unit_section",
    "connection_from_h",
    "shift_degree",
    "entry_phase",
    "TensorReduction",
    "TensorRangeReport",
    "reduction_check",
    "twisted_scattering_check",
    "conjugation_residual",
    "tensor_transform",
    "tensor_range_test",
    "potential_insensitivity",
    "invariant_witness",
]


def unit_section(grid, N=1):
    """h = e^{i theta} as a FiberFunction (degree 1, coefficient 1)."""
    return FiberFunction.from_degree(grid, 1, np.ones(grid.shape), N)


def shift_degree(u, m):
    """Multiply by h^m = e^{i m theta}: coefficient k moves to k + m."""
    N = u.N + abs(m)
    out = FiberFunction.zeros(u.grid, N, u.n)
    out.coeffs[N - u.N + m : N + u.N + m + 1] = u.coeffs
    return out


def connection_from_h(grid, metric, tol=1e-8):
    """a = -h^{-1} X h computed with the fiber calculus, as a grid 1-form.

    Returns (a, leakage, mismatch): ``leakage`` is the relative size of
    degrees other than +-1 in -h^{-1} X h, ``mismatch`` the relative sup
    distance to the closed form i * d(lambda).
    """
    fc = FiberCalculus(grid, metric, ZeroConnection(1))
    h = unit_section(grid)
    v = -shift_degree(fc.X(h), -1)
    odd = v.project([-1, 1])
    leak = (v - odd).sup() / max(odd.sup(), 1e-300)
    a = fc.ext.from_sm_coefficients(v[-1], v[1])
    ref = np.stack(MetricConnection(metric).on_grid(grid))
    mism = float(np.max(np.abs(a[:, 0] - ref[:, 0, 0])) / max(np.max(np.abs(ref)), 1e-300))
    return a, float(leak), mism


def entry_phase(fan, m):
    """h^m at the fan entry points, e^{i m (phi + pi + a)}."""
    return np.exp(1j * m * (fan.PHI + np.pi + fan.A))


def _twisted(metric, m, **kw):
    """Scalar model with connection -m a (plain when m = 0)."""
    conn = MetricConnection(metric, scale=-m) if m else None
    return TransportModel(metric, conn, **kw)


# cross-route checks ----------------------------------------------------------------


@dataclass
class TensorReduction:
    m: int
    discrepancy: float
    norm: float

    def as_dict(self):
        return asdict(self)


def reduction_check(metric, f, m, fan=None, grid=None, plain=None):
    """Compare h^{-m}|_{entry} I(f e^{i m theta}) with I^0_{-m a}(f).

    ``f`` is a scalar grid field. The left side integrates the degree-m
    function directly, the right side runs the twisted attenuated transport.
    """
    plain = plain or TransportModel(metric, fan=fan, grid=grid)
    fan, grid = plain.fan, plain.grid
    direct = plain.I_fiber(FiberFunction.from_degree(grid, m, f))[..., 0]
    lhs = np.conj(entry_phase(fan, m)) * direct
    rhs = _twisted(metric, m, fan=fan, grid=grid).I0(np.asarray(f)[None])[..., 0]
    nrm = float(np.max(np.abs(rhs)))
    return TensorReduction(int(m), float(np.max(np.abs(lhs - rhs)) / max(nrm, 1e-300)), nrm)


def twisted_scattering_check(metric, m, fan=None, grid=None):
    """The twisted scattering phase e^{m I_1(a)} against C for the connection -m a.

    I_1(a) is the plain ray transform of the 1-form a; C comes from the
    matrix propagator. Returns the sup difference.
    """
    plain = TransportModel(metric, fan=fan, grid=grid)
    a = np.stack(MetricConnection(metric).on_grid(plain.grid))[:, :, 0]  # (2, 1, r, p)
    I1a = plain.I1(a)[..., 0]
    C = _twisted(metric, m, fan=plain.fan, grid=plain.grid).fan_exit["C"][..., 0, 0]
    return float(np.max(np.abs(np.exp(m * I1a) - C)))


def twisted_Q(I1a, m, w_in):
    """Q_m w = (w, e^{m I_1(a)} w o alpha) on the fan, for fan data w_in."""
    return w_in, np.exp(m * I1a)[..., None] * w_in


def twisted_B(I1a, m, g_in, g_out):
    """B_m g = e^{-m I_1(a)} (g o alpha) - g."""
    return np.exp(-m * I1a)[..., None] * g_out - g_in


def conjugation_residual(grid, metric, u, m, connection=None):
    """|| (X + A - m a) u - h^{-m} (X + A)(h^m u) || relative to the left side."""
    A = connection if connection is not None else ZeroConnection(u.n)
    fc = FiberCalculus(grid, metric, A)
    tw = FiberCalculus(grid, metric, SumConnection(A, MetricConnection(metric, -m, u.n))
                       if not isinstance(A, ZeroConnection)
                       else MetricConnection(metric, -m, u.n))
    lhs = tw.XA(u)
    rhs = shift_degree(fc.XA(shift_degree(u, m)), -m)
    return float((lhs - rhs).norm(metric) / max(lhs.norm(metric), 1e-300))


# tensor transforms and range ---------------------------------------------------------


def tensor_transform(model, parts):
    """I of sum_k parts[k] e^{i k theta}; ``parts`` maps degree to scalar grid field."""
    N = max(abs(k) for k in parts)
    u = FiberFunction.zeros(model.grid, N, 1)
    for k, fk in parts.items():
        u.coeffs[N + k, 0] += fk
    return model.I_fiber(u)


@dataclass
class TensorRangeReport:
    m: int
    residual_abs: float
    residual_rel: float
    columns: int
    meta: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


class TensorRangeModel:
    """Range of I on even tensors of order m = 2l, through the twisted projectors.

    Data u lie in the range iff u = sum_{|k| <= l} h^{2k}|_{entry} P^{(2k)}_- w_{2k},
    where P^{(2k)}_- is the odd projector for the scalar connection -2k a.
    """

    def __init__(self, metric, m=2, fan=None, grid=None, J=6, L=12, factor=1.1, **kw):
        if m % 2:
            raise ValueError("the tensor range model covers even orders")
        self.metric = metric
        self.m = int(m)
        self.models = {}
        self.bases = {}
        for k in range(-(m // 2), m // 2 + 1):
            mod = _twisted(metric, 2 * k, fan=fan, grid=grid, **kw)
            fan, grid = mod.fan, mod.grid
            self.models[k] = mod
            self.bases[k] = CollarWitnessBasis(metric, mod.connection, 1, J, L, factor)
        self.fan, self.grid = fan, grid

    @property
    def plain(self):
        return self.models[0]

    def columns(self):
        cols = []
        for k, mod in self.models.items():
            P = P_minus_columns(mod, self.bases[k])
            cols.append(entry_phase(self.fan, 2 * k)[..., None, None] * P)
        return np.concatenate(cols, axis=-1)

    def test(self, u, rel=1e-10):
        u = np.asarray(u)
        if u.ndim == 2:
            u = u[..., None]
        cols = self.model_columns = self.columns()
        x, info = tsvd_solve(_fan_matrix(self.plain, cols), _fan_vector(self.plain, u), rel)
        r = u - np.einsum("ijnc,c->ijn", cols, x)
        un = float(mu_norm(self.plain, u))
        ra = float(mu_norm(self.plain, r))
        return TensorRangeReport(self.m, ra, ra / un if un else 0.0, cols.shape[-1],
                                 {"lstsq": info})


def tensor_range_test(metric, u, m=2, **kw):
    return TensorRangeModel(metric, m, **kw).test(u)


def potential_insensitivity(trm, parts, hm, hp, rel=1e-10):
    """Range residual for f and for f + X p with p = hm e^{-i theta} + hp e^{i theta}.

    ``hm`` and ``hp`` must vanish on the boundary. Returns (report_f, report_f_dp, ratio).
    """
    plain = trm.plain
    u = tensor_transform(plain, parts)
    fc = FiberCalculus(plain.grid, trm.metric, ZeroConnection(1))
    p = FiberFunction.zeros(plain.grid, 1, 1)
    p.coeffs[0, 0] = hm
    p.coeffs[2, 0] = hp
    dp = fc.X(p)
    N = max(max(abs(k) for k in parts), dp.N)
    g = dp.resized(N)
    for k, fk in parts.items():
        g.coeffs[N + k, 0] += fk
    r1 = trm.test(u, rel)
    r2 = trm.test(plain.I_fiber(g), rel)
    return r1, r2, r2.residual_rel / max(r1.residual_rel, 1e-300)


def invariant_witness(metric, f, m, basis=None, model=None, rel=1e-10, **kw):
    """Invariant w of degree-m leading part f: X w = 0 with w_m close to f.

    Solves I_{0,-m a}^* v = f over collar witnesses, takes u = v# and returns
    w = h^m u as a FiberFunction with a dict of residuals.
    """
    model = model or _twisted(metric, m, **kw)
    basis = basis or CollarWitnessBasis(metric, model.connection, 1, 6, 12)
    f = np.asarray(f)[None]
    x, res, info = solve_adjoint0(model, basis, f, rel)
    u = model.invariant_extension(lambda P, A: basis.combine(x, P, A))
    w = shift_degree(u, m)
    fc = FiberCalculus(model.grid, metric, ZeroConnection(1))
    ext = model.ext
    lead = float(ext.norm0(w[m] - f) / ext.norm0(f))
    flow = float(fc.X(w).resized(w.N - 1).norm(metric) / w.norm(metric))
    return w, {"adjoint_residual": res, "leading_residual": lead, "flow_residual": flow,
               "lstsq": info}
