"""Attenuated transport along geodesics: propagators, scattering data, I_A, w#.

Conventions
-----------
* U_A solves X U + A U = 0 with U = Id on the influx boundary. Along the
  geodesic started at an influx point, U(t) solves U' = -A(phi_t) U, U(0) = Id.
* C_A = U_A on the efflux boundary; D_A = W_A on the influx boundary, where W_A
  solves the same equation with W = Id on the efflux boundary.
* I_A f(x, v) = int_0^tau U_A^{-1}(phi_t) f(phi_t) dt.
* w#(x, v) = U_A(x, v) w(entry point of the geodesic through (x, v)).

Boundary functions live on a :class:`~attxray.geometry.FanGrid`; their values
have shape (n_phi, n_a, n) or (n_phi, n_a, n, C) for a batch of C columns.
Batched grid fields put the column axis just before the grid axes, e.g. a batch
of sections is (n, C, n_r, n_phi).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .connection import ExteriorCalculus, ZeroConnection
from .fiber import FiberFunction
from .geometry import (FanGrid, _System, fan_to_phase, flow_to_boundary,
                       geodesic_from_boundary, wrap_angle)
from .grid import DiskGrid

__all__ = [
    "BoundaryFunction",
    "ScatteringData",
    "AttenuationPropagator",
    "WitnessBasis",
    "CollarWitnessBasis",
    "margin_cutoff",
    "TransportModel",
    "inner_mu",
]


def _dagger(M):
    return np.conj(np.swapaxes(M, -1, -2))


# boundary functions ----------------------------------------------------------------


@dataclass
class BoundaryFunction:
    """C^n valued samples on the influx fan grid."""

    fan: FanGrid
    values: np.ndarray
    margin_supported: bool = False

    def to_csv(self, path):
        v = self.values.reshape(self.fan.shape + (-1,))
        cols = [self.fan.PHI.ravel(), self.fan.A.ravel()]
        names = ["phi", "a"]
        for c in range(v.shape[-1]):
            cols += [v[..., c].real.ravel(), v[..., c].imag.ravel()]
            names += [f"re{c}", f"im{c}"]
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(names),
                   comments="", fmt="%.17g")


def connection_scale(metric, connection, n_r=16, n_phi=32):
    """max over a polar sample of |A(v)| for g-unit v (operator norm, both directions)."""
    if connection is None:
        return 0.0
    R = metric.radius
    r = R * np.linspace(0.0, 1.0, n_r)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    x1 = np.outer(r, np.cos(ph))
    x2 = np.outer(r, np.sin(ph))
    A1, A2 = connection.eval(x1, x2)
    el = np.exp(-metric.lam(x1, x2))[..., None, None]
    s1 = np.linalg.norm(A1, 2, axis=(-2, -1))
    s2 = np.linalg.norm(A2, 2, axis=(-2, -1))
    return float(np.max(np.hypot(s1, s2) * el[..., 0, 0]))


def default_step(metric, connection=None, per_length=256, turn=0.04):
    """RK4 step: tau_bound / 256, shortened so that h |A| <= 0.04 for strong connections."""
    h = metric.tau_bound / per_length
    a = connection_scale(metric, connection)
    return min(h, turn / a) if a > 0 else h


def inner_mu(fan, metric, u, w):
    """<u, w>_mu over the fan, summing the C^n components (batched columns allowed)."""
    mu = fan.measure(metric)
    u = np.asarray(u)
    w = np.asarray(w)
    ex = (slice(None), slice(None)) + (None,) * (max(u.ndim, w.ndim) - 2)
    return np.sum(mu[ex] * u * np.conj(w), axis=(0, 1, 2))


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1)), 0.0)
    return a / (a + b)


def margin_cutoff(a, delta=0.05, width=0.5):
    """Smooth cutoff equal to 1 for |a| <= pi/2 - delta - width and 0 for |a| >= pi/2 - delta."""
    a_max = np.pi / 2 - delta
    return _smooth_step((a_max - np.abs(a)) / width)


class WitnessBasis:
    """Margin-supported functions chi(a) e^{i j phi} T_l(a / a_max) e_c on the influx set.

    Columns are ordered (c, j, l); ``scalar`` returns the scalar factors only.
    """

    def __init__(self, n=1, J=6, L=6, delta=0.05, width=0.8):
        self.n, self.J, self.L = int(n), int(J), int(L)
        self.delta, self.width = float(delta), float(width)
        self.a_max = np.pi / 2 - self.delta

    @property
    def n_scalar(self):
        return (2 * self.J + 1) * (self.L + 1)

    @property
    def size(self):
        return self.n * self.n_scalar

    def scalar(self, phi, a):
        phi = np.asarray(phi, dtype=float)
        a = np.asarray(a, dtype=float)
        chi = margin_cutoff(a, self.delta, self.width)
        js = np.arange(-self.J, self.J + 1)
        E = np.exp(1j * phi[..., None] * js)
        t = np.clip(a / self.a_max, -1, 1)
        T = np.polynomial.chebyshev.chebvander(t, self.L)
        out = chi[..., None, None] * E[..., :, None] * T[..., None, :]
        return out.reshape(phi.shape + (-1,))

    def __call__(self, phi, a):
        s = self.scalar(phi, a)
        out = np.zeros(s.shape[:-1] + (self.n, self.n, s.shape[-1]), dtype=complex)
        for c in range(self.n):
            out[..., c, c, :] = s
        return out.reshape(s.shape[:-1] + (self.n, self.size))

    @property
    def key(self):
        return ("margin", self.n, self.J, self.L, self.delta, self.width)

    def describe(self):
        return {"kind": "margin", "n": self.n, "J": self.J, "L": self.L,
                "delta": self.delta, "width": self.width}

    def combine(self, coef, phi, a):
        """Evaluate the function with coefficient vector ``coef``."""
        return self(phi, a) @ coef


class CollarWitnessBasis:
    """Smooth invariant witnesses built on a slightly larger disk.

    A function w1 on the influx set of the disk of radius ``factor * R`` is
    carried to the influx set of M along geodesics, with the attenuation:
    w(x, v) = U(x, v) w1(entry on the outer circle). The resulting w is the
    boundary value of a solution of (X + A) u = 0 that is smooth on all of SM,
    so Qw is smooth, but w does not vanish near glancing. The outer functions
    are e^{i j phi1} T_l(2 a1 / pi) e_c with columns ordered (c, j, l).
    """

    def __init__(self, metric, connection=None, n=1, J=6, L=6, factor=1.1, h=None):
        self.R = metric.radius
        self.factor = float(factor)
        self.outer = metric.with_radius(self.factor * self.R)
        conn = connection
        self.n = conn.n if conn is not None else int(n)
        self._conn = None if conn is None or isinstance(conn, ZeroConnection) else conn
        self.J, self.L = int(J), int(L)
        self.h = float(h or min(self.outer.tau_bound / 512, default_step(self.outer, self._conn)))

    @property
    def n_scalar(self):
        return (2 * self.J + 1) * (self.L + 1)

    @property
    def size(self):
        return self.n * self.n_scalar

    @property
    def key(self):
        return ("collar", self.n, self.J, self.L, self.factor, id(self._conn))

    def describe(self):
        return {"kind": "collar", "n": self.n, "J": self.J, "L": self.L, "factor": self.factor}

    def outer_entry(self, phi, a):
        """Entry point (phi1, a1) on the outer circle and the propagator U."""
        phi = np.asarray(phi, dtype=float)
        x1, x2, th = fan_to_phase(phi, np.asarray(a, dtype=float), self.R)
        res = flow_to_boundary(self.outer, x1, x2, th + np.pi, connection=self._conn, h=self.h)
        shp = phi.shape
        phi1 = np.arctan2(res.x2, res.x1).reshape(shp) % (2 * np.pi)
        a1 = wrap_angle(res.theta.reshape(shp) - phi1)
        U = None if res.U is None else _dagger(res.U).reshape(shp + (self.n, self.n))
        return phi1, a1, U

    def scalar_outer(self, phi1, a1):
        js = np.arange(-self.J, self.J + 1)
        E = np.exp(1j * phi1[..., None] * js)
        T = np.polynomial.chebyshev.chebvander(np.clip(2 * a1 / np.pi, -1, 1), self.L)
        out = E[..., :, None] * T[..., None, :]
        return out.reshape(phi1.shape + (-1,))

    def __call__(self, phi, a):
        phi1, a1, U = self.outer_entry(phi, a)
        s = self.scalar_outer(phi1, a1)
        if U is None:
            U = np.broadcast_to(np.eye(self.n), phi1.shape + (self.n, self.n))
        v = U[..., :, :, None] * s[..., None, None, :]
        return v.reshape(v.shape[:-2] + (-1,))

    def combine(self, coef, phi, a):
        return self(phi, a) @ coef


# scattering data ------------------------------------------------------------------


@dataclass
class ScatteringData:
    """Scattering relation and propagator boundary values on a fan grid.

    ``C`` is C_A at the exit point alpha(x, v) of each influx point (x, v);
    ``D`` is D_A(x, v), computed by an independent reversed integration.
    """

    fan: FanGrid
    phi_out: np.ndarray
    a_out: np.ndarray
    tau: np.ndarray
    C: np.ndarray
    D: np.ndarray | None = None
    length_element: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.C.shape[-1]

    def unitarity_defect(self):
        I = np.eye(self.n)
        d = [np.linalg.norm(_dagger(self.C) @ self.C - I, axis=(-2, -1)).max()]
        if self.D is not None:
            d.append(np.linalg.norm(_dagger(self.D) @ self.D - I, axis=(-2, -1)).max())
        return float(max(d))

    def identity_residual(self):
        """max |C_A^{-1} o alpha - D_A|."""
        return float(np.max(np.abs(_dagger(self.C) - self.D)))

    def Q(self, w_in):
        """Values of Qw on the efflux points alpha(fan): C_A (w o alpha)."""
        return np.einsum("ijab,ijb...->ija...", self.C, w_in)

    def B(self, g_in, g_out):
        """Bg = (C_A^{-1} g) o alpha - g on the influx fan."""
        return np.einsum("ijba,ijb...->ija...", np.conj(self.C), g_out) - g_in


@dataclass
class AttenuationPropagator:
    trace: object
    U: np.ndarray

    def unitarity_defect(self):
        I = np.eye(self.U.shape[-1])
        return float(np.linalg.norm(_dagger(self.U) @ self.U - I, axis=(-2, -1)).max())


# the model -------------------------------------------------------------------------


class TransportModel:
    """Geodesic data for one metric and connection, with cached boundary maps.

    Parameters
    ----------
    metric : ConformalMetric
    connection : Connection, optional
        Zero connection when omitted (fibre dimension ``n``).
    fan : FanGrid, optional
        Influx grid; default 64 x 32 with glancing margin 0.05.
    grid : DiskGrid, optional
        Interior collocation grid; default 16 x 32.
    n_theta : int
        Direction samples per interior node for invariant extensions.
    torus_theta : int
        Direction samples per boundary point for the boundary Hilbert transform.
    torus_phi : int, optional
        Boundary points on the torus; default ``fan.n_phi``.
    h : float, optional
        RK4 step; default from :func:`default_step`.
    n_simpson : int
        Intervals per ray for the recorded Simpson rule used by grid fields.
    """

    def __init__(self, metric, connection=None, n=1, fan=None, grid=None, n_theta=64,
                 torus_theta=128, h=None, n_simpson=128, torus_phi=None):
        self.metric = metric
        R = metric.radius
        self.connection = connection if connection is not None else ZeroConnection(n)
        self.n = self.connection.n
        self._flow_conn = None if isinstance(self.connection, ZeroConnection) else self.connection
        self.fan = fan or FanGrid(64, 32, 0.05, R)
        self.grid = grid or DiskGrid(16, 32, R)
        if abs(self.fan.radius - R) > 1e-14 or abs(self.grid.radius - R) > 1e-14:
            raise ValueError("fan, grid and metric must share the disk radius")
        self.n_theta = int(n_theta)
        self.torus_theta = int(torus_theta)
        self.torus_phi = int(torus_phi or self.fan.n_phi)
        self.h = float(h or default_step(metric, self._flow_conn))
        self.n_simpson = int(n_simpson) + int(n_simpson) % 2
        self._cache = {}
        self.ext = ExteriorCalculus(self.grid, metric, self.connection)

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def _flow(self, x1, x2, th, integrand=None, n_int=None, with_connection=True):
        conn = self._flow_conn if with_connection else None
        return flow_to_boundary(self.metric, x1, x2, th, connection=conn, integrand=integrand,
                                n_int=n_int, h=self.h)

    def _U(self, res, shape):
        if res.U is None:
            return np.broadcast_to(np.eye(self.n, dtype=complex), shape + (self.n, self.n))
        return res.U.reshape(shape + (self.n, self.n))

    # forward fan data ------------------------------------------------------------

    @property
    def fan_exit(self):
        def build():
            x1, x2, th = self.fan.points()
            res = self._flow(x1, x2, th)
            shp = self.fan.shape
            phi_o = np.arctan2(res.x2, res.x1) % (2 * np.pi)
            return {
                "tau": res.t.reshape(shp),
                "x1": res.x1.reshape(shp),
                "x2": res.x2.reshape(shp),
                "theta": res.theta.reshape(shp),
                "phi_out": phi_o.reshape(shp),
                "a_out": wrap_angle(res.theta - phi_o).reshape(shp),
                "C": self._U(res, shp),
            }

        return self._cached("fan_exit", build)

    def propagate(self, phi, a):
        """Trace with propagator samples for one fan point."""
        tr = geodesic_from_boundary(self.metric, phi, a, h=self.h, connection=self._flow_conn)
        U = tr.U if tr.U is not None else np.broadcast_to(np.eye(self.n), tr.times.shape + (self.n, self.n))
        return AttenuationPropagator(tr, U)

    def scattering_data(self, with_D=True):
        ex = self.fan_exit
        D = None
        if with_D:
            # W_A = Id on the efflux side: integrate from the reversed exit point
            res = self._flow(ex["x1"], ex["x2"], ex["theta"] + np.pi)
            D = self._U(res, self.fan.shape)
            back_phi = np.arctan2(res.x2, res.x1).reshape(self.fan.shape) % (2 * np.pi)
            back_th = res.theta.reshape(self.fan.shape)
            x1, x2, th = self.fan.points()
            rev = max(float(np.max(np.abs(wrap_angle(back_phi - self.fan.PHI)))),
                      float(np.max(np.abs(wrap_angle(back_th + np.pi - th)))))
        else:
            rev = float("nan")
        return ScatteringData(
            fan=self.fan, phi_out=ex["phi_out"], a_out=ex["a_out"], tau=ex["tau"],
            C=np.array(ex["C"]), D=D,
            length_element=self.metric.boundary_length_element(self.fan.PHI),
            meta={"time_reversal_defect": rev, "h_ode": self.h},
        )

    # recorded Simpson samples ---------------------------------------------------------

    @property
    def fan_samples(self):
        """Uniform samples along every fan geodesic, with Simpson weights."""

        def build():
            tau = self.fan_exit["tau"].ravel()
            x1, x2, th = (v.ravel() for v in self.fan.points())
            S = self.n_simpson
            hs = tau / S
            sysm = _System(self.metric, self._flow_conn, None, False)
            m = tau.size
            U = None
            if self._flow_conn is not None:
                U = np.broadcast_to(np.eye(self.n, dtype=complex), (m, self.n, self.n)).copy()
            y = (x1.copy(), x2.copy(), th.copy(), U, None, None)
            X1 = np.empty((m, S + 1))
            X2 = np.empty((m, S + 1))
            TH = np.empty((m, S + 1))
            UU = None if U is None else np.empty((m, S + 1, self.n, self.n), dtype=complex)
            for k in range(S + 1):
                X1[:, k], X2[:, k], TH[:, k] = y[0], y[1], y[2]
                if UU is not None:
                    UU[:, k] = y[3]
                if k < S:
                    y = sysm.step(y, hs)
            w = np.ones(S + 1)
            w[1:-1:2] = 4
            w[2:-1:2] = 2
            W = hs[:, None] * w[None, :] / 3
            return {"x1": X1, "x2": X2, "theta": TH, "U": UU, "w": W}

        return self._cached("fan_samples", build)

    def _integrate_samples(self, f):
        """sum_t w_t U_t^H f_t for f of shape (m, S+1, n, ...); returns (n_phi, n_a, n, ...)."""
        s = self.fan_samples
        f = np.asarray(f)
        wf = s["w"].reshape(s["w"].shape + (1,) * (f.ndim - 2)) * f
        if s["U"] is None:
            out = wf.sum(axis=1)
        else:
            out = np.einsum("mtba,mtb...->ma...", np.conj(s["U"]), wf)
        return out.reshape(self.fan.shape + out.shape[1:])

    @property
    def projection(self):
        """Linear maps from grid values to I_A of sections and 1-forms.

        Shape (n_phi * n_a, n, n, 3, n_nodes) (or (m, 3, n_nodes) with no
        connection); slot 0 integrates a section, slots 1 and 2 integrate the
        dx1 and dx2 parts of a 1-form.
        """

        def build():
            s = self.fan_samples
            m, T = s["x1"].shape
            nodes = self.grid.size
            chunk = max(1, int(2e7 // (T * nodes)))
            if s["U"] is None:
                K = np.empty((m, 3, nodes))
            else:
                K = np.empty((m, self.n, self.n, 3, nodes), dtype=complex)
            for i0 in range(0, m, chunk):
                sl = slice(i0, min(m, i0 + chunk))
                x1, x2, th = s["x1"][sl], s["x2"][sl], s["theta"][sl]
                W = self.grid.interp_weights(x1, x2).reshape(x1.shape + (nodes,))
                el = np.exp(-self.metric.lam(x1, x2))
                fac = np.stack([np.ones_like(el), el * np.cos(th), el * np.sin(th)], axis=-1)
                fac = fac * s["w"][sl][..., None]
                if s["U"] is None:
                    K[sl] = np.swapaxes(fac, 1, 2) @ W
                else:
                    Uh = np.conj(s["U"][sl])  # (m, t, b, a)
                    X = (np.swapaxes(Uh, 2, 3)[..., None] * fac[:, :, None, None, :])
                    X = X.reshape(X.shape[:2] + (-1,)).transpose(0, 2, 1)
                    KK = (X.real @ W) + 1j * (X.imag @ W)
                    K[sl] = KK.reshape(KK.shape[:1] + (self.n, self.n, 3, nodes))
            return K

        return self._cached("projection", build)

    def _apply_projection(self, slots, fields):
        # fields[k] has shape (n, C, nodes) for each slot k
        K = self.projection
        out = 0
        for k, F in zip(slots, fields):
            if K.ndim == 3:
                out = out + np.einsum("mn,acn->mac", K[:, k], F)
            else:
                out = out + np.einsum("mabn,bcn->mac", K[:, :, :, k], F)
        return out.reshape(self.fan.shape + out.shape[1:])

    # ray transforms -------------------------------------------------------------------

    def I0(self, s):
        """I_A of a grid section, shape (n, [C,] n_r, n_phi) -> (n_phi, n_a, n[, C])."""
        s = np.asarray(s)
        batched = s.ndim == 4
        F = s.reshape(self.n, -1, self.grid.size) if batched else s.reshape(self.n, 1, -1)
        out = self._apply_projection([0], [F])
        return out if batched else out[..., 0]

    def I1(self, beta):
        """I_A of a grid 1-form, shape (2, n, [C,] n_r, n_phi)."""
        beta = np.asarray(beta)
        batched = beta.ndim == 5
        F = [beta[j].reshape(self.n, -1, self.grid.size) for j in range(2)]
        out = self._apply_projection([1, 2], F)
        return out if batched else out[..., 0]

    def I_fiber(self, u):
        """I_A of a FiberFunction, evaluated on the recorded samples."""
        s = self.fan_samples
        f = u.evaluator()(s["x1"], s["x2"], s["theta"])
        return self._integrate_samples(f)

    def I_callable(self, f, n_int=None):
        """I_A of ``f(x1, x2, theta) -> (m, n[, p])`` by augmented RK4 quadrature."""
        x1, x2, th = self.fan.points()
        res = self._flow(x1, x2, th, integrand=f, n_int=n_int)
        out = res.integral.reshape(self.fan.shape + res.integral.shape[1:])
        return out[..., 0] if n_int is None or len(n_int) == 1 else out

    # transport solution ------------------------------------------------------------------

    def transport_solve(self, f, n_theta=None):
        """u^f on grid nodes x directions: X u + A u = -f, u = 0 on the efflux side.

        ``f(x1, x2, theta) -> (m, n)``. Returns a FiberFunction.
        """
        Q = n_theta or self.n_theta
        th = 2 * np.pi * np.arange(Q) / Q
        X1 = np.repeat(self.grid.x1[..., None], Q, axis=-1)
        X2 = np.repeat(self.grid.x2[..., None], Q, axis=-1)
        TH = np.broadcast_to(th, X1.shape)
        res = self._flow(X1, X2, TH, integrand=f, n_int=(self.n, 1))
        vals = res.integral[..., 0].reshape(self.grid.shape + (Q, self.n))
        return FiberFunction.from_samples(self.grid, np.moveaxis(vals, -1, 0))

    # backward maps -------------------------------------------------------------------------

    def _entries(self, X1, X2, TH):
        res = self._flow(X1, X2, TH + np.pi)
        shp = np.shape(X1)
        phi_e = np.arctan2(res.x2, res.x1).reshape(shp) % (2 * np.pi)
        a_e = wrap_angle(res.theta.reshape(shp) - phi_e)
        U = None if res.U is None else _dagger(res.U).reshape(shp + (self.n, self.n))
        return {"phi": phi_e, "a": a_e, "U": U, "t": res.t.reshape(shp)}

    @property
    def interior_entries(self):
        """Entry points and U_A for grid nodes x n_theta directions."""

        def build():
            Q = self.n_theta
            th = 2 * np.pi * np.arange(Q) / Q
            X1 = np.repeat(self.grid.x1[..., None], Q, axis=-1)
            X2 = np.repeat(self.grid.x2[..., None], Q, axis=-1)
            return self._entries(X1, X2, np.broadcast_to(th, X1.shape))

        return self._cached("interior_entries", build)

    @property
    def torus_entries(self):
        """Entry points and U_A on torus_phi boundary points x torus_theta directions."""

        def build():
            Q = self.torus_theta
            th = 2 * np.pi * np.arange(Q) / Q
            R = self.metric.radius
            phi = 2 * np.pi * np.arange(self.torus_phi) / self.torus_phi
            P, T = np.meshgrid(phi, th, indexing="ij")
            return self._entries(R * np.cos(P), R * np.sin(P), T)

        return self._cached("torus_entries", build)

    def _sharp(self, ent, w, ks=None):
        """w# at the sampled points of ``ent``.

        ``w`` is a WitnessBasis or a callable (phi, a) -> (..., n). With ``ks``
        the vertical Fourier modes over the last sample axis are returned,
        shape (len(ks), ..., n, C); otherwise samples (..., n, C).
        """
        phi, a, U = ent["phi"], ent["a"], ent["U"]
        Q = phi.shape[-1]
        if isinstance(w, WitnessBasis):
            if w.n != self.n:
                raise ValueError("witness basis has the wrong fibre dimension")
            s = w.scalar(phi, a)  # (..., Q, S)
            if U is None:
                Ue = np.broadcast_to(np.eye(self.n), phi.shape + (self.n, self.n))
            else:
                Ue = U
            if ks is None:
                v = Ue[..., :, :, None] * s[..., None, None, :]  # (..., a, c, S)
                return v.reshape(v.shape[:-2] + (-1,))
            th = 2 * np.pi * np.arange(Q) / Q
            E = np.exp(-1j * np.outer(ks, th)) / Q
            v = np.einsum("kq,...qac,...qs->k...acs", E, Ue, s, optimize=True)
            return v.reshape(v.shape[:-2] + (-1,))
        if ks is not None:
            th = 2 * np.pi * np.arange(Q) / Q
            E = np.exp(-1j * np.outer(ks, th)) / Q
        out = []
        for i in range(phi.shape[0]):
            vals = np.asarray(w(phi[i], a[i]))
            if vals.ndim == phi.ndim:
                vals = vals[..., None]
            if U is not None:
                vals = np.einsum("...ab,...bc->...ac", U[i], vals)
            out.append(vals if ks is None else np.einsum("kq,...qac->k...ac", E, vals))
        return np.stack(out, axis=0 if ks is None else 1)

    def invariant_extension(self, w, N=None):
        """w# as a FiberFunction on the interior grid (single callable w)."""
        vals = self._sharp(self.interior_entries, w)[..., 0]  # (r, p, Q, n)
        return FiberFunction.from_samples(self.grid, np.moveaxis(vals, -1, 0), N)

    def sharp_modes(self, w, ks=(-1, 0, 1)):
        """Fourier modes of w# on the grid, shape (len(ks), n, C, n_r, n_phi)."""
        v = self._sharp(self.interior_entries, w, np.asarray(ks))  # (k, r, p, n, C)
        return np.moveaxis(v, (1, 2), (-2, -1))

    def adjoint_I0(self, w):
        """(I_A^0)^* w = 2 pi (w#)_0, shape (n, C, n_r, n_phi)."""
        return 2 * np.pi * self.sharp_modes(w, (0,))[0]

    def adjoint_I1(self, w):
        """(I_A^1)^* w: the 1-form with SM restriction pi((w#)_{-1} + (w#)_1)."""
        m = self.sharp_modes(w, (-1, 1))
        return self.ext.from_sm_coefficients(np.pi * m[0], np.pi * m[1])

    # boundary operators -----------------------------------------------------------------------

    def Q(self, w):
        """(w on the fan, C_A (w o alpha) on the efflux points)."""
        phi, a = self.fan.PHI, self.fan.A
        w_in = np.asarray(w(phi, a))
        return w_in, np.einsum("ijab,ijb...->ija...", self.fan_exit["C"], w_in)

    def B(self, g_in, g_out):
        C = self.fan_exit["C"]
        return np.einsum("ijba,ijb...->ija...", np.conj(C), g_out) - g_in

    def boundary_hilbert(self, w, parity=None):
        """H_{+-} of w# restricted to the boundary, at the fan entries and exits.

        ``parity`` is "even", "odd" or None (full H). Returns (g_in, g_out),
        each of shape (n_phi, n_a, n, C).
        """
        G = self._sharp(self.torus_entries, w)  # (n_b, n_q, n, C)
        nb, nq = G.shape[:2]
        Gh = np.fft.fft(G, axis=1) / nq
        k = np.fft.fftfreq(nq, 1.0 / nq)
        mult = -1j * np.sign(k)
        mult[nq // 2] = 0.0
        if parity == "even":
            mult[k % 2 != 0] = 0.0
        elif parity == "odd":
            mult[k % 2 == 0] = 0.0
        Gh *= mult[None, :, None, None]
        G2 = np.fft.fft(Gh, axis=0) / nb
        g_in = self._torus_eval(G2, self.fan.PHI, self.fan.PHI + np.pi + self.fan.A)
        ex = self.fan_exit
        g_out = self._torus_eval(G2, ex["phi_out"], ex["theta"])
        return g_in, g_out

    @staticmethod
    def _torus_eval(G2, phi, theta, step=64):
        """Trigonometric interpolant with 2D coefficients G2 (n_b, n_q, ...) at (phi, theta)."""
        nb, nq = G2.shape[:2]
        rest = G2.shape[2:]
        kp = np.fft.fftfreq(nb, 1.0 / nb)
        k = np.fft.fftfreq(nq, 1.0 / nq)
        ph = np.ravel(phi)
        th = np.ravel(theta)
        G2f = G2.reshape(nb, -1)
        out = np.empty((ph.size,) + rest, dtype=complex)
        for i0 in range(0, ph.size, step):
            sl = slice(i0, i0 + step)
            Ep = np.exp(1j * np.outer(ph[sl], kp))
            if nb % 2 == 0:
                Ep[:, nb // 2] = np.cos(nb // 2 * ph[sl])
            Et = np.exp(1j * np.outer(th[sl], k))
            Y = (Ep @ G2f).reshape((-1, nq) + rest)
            out[sl] = np.einsum("tq,tq...->t...", Et, Y)
        return out.reshape(np.shape(phi) + rest)

    def P_minus(self, w):
        """P_- w = B H_- Q w, shape (n_phi, n_a, n, C)."""
        return self.B(*self.boundary_hilbert(w, "odd"))

    def P_plus(self, w):
        return self.B(*self.boundary_hilbert(w, "even"))

    def sharp_boundary(self, w):
        """w# on the fan entries, reconstructed from the torus samples."""
        G = self._sharp(self.torus_entries, w)
        nb, nq = G.shape[:2]
        G2 = np.fft.fft2(G, axes=(0, 1)) / (nb * nq)
        return self._torus_eval(G2, self.fan.PHI, self.fan.PHI + np.pi + self.fan.A)

    # normal operator -----------------------------------------------------------------------------

    def normal_operator0(self, f, n_int=None):
        """N_{0,A} f(x) = (1/2 pi) int over S_x of (I_A f)#, on the grid.

        ``f(x1, x2, theta) -> (m, n)``. I_A f is evaluated at the exact entry
        points of the interior backward geodesics.
        """
        ent = self.interior_entries
        R = self.metric.radius
        x1, x2, th = fan_to_phase(ent["phi"], ent["a"], R)
        res = self._flow(x1, x2, th, integrand=f, n_int=(self.n, 1))
        If = res.integral[..., 0].reshape(ent["phi"].shape + (self.n,))
        if ent["U"] is not None:
            If = np.einsum("...ab,...b->...a", ent["U"], If)
        return np.moveaxis(If.mean(axis=-2), -1, 0)


def check_margin(w, fan, tol=1e-12):
    """Warn when a boundary callable does not vanish near glancing."""
    a = np.linspace(np.pi / 2 - fan.delta, np.pi / 2, 5)
    phi = np.linspace(0, 2 * np.pi, 7)
    P, A = np.meshgrid(phi, np.concatenate([a, -a]))
    v = np.max(np.abs(w(P, A)))
    if v > tol:
        warnings.warn("boundary function is not margin-supported; results near glancing "
                      "are untrusted", RuntimeWarning, stacklevel=2)
        return False
    return True
