"""Conformal disk metrics, the geodesic flow and boundary fan coordinates.

A metric is g = exp(2 lam) |dx|^2 on the closed disk |x| <= R. A unit vector is
stored by its Euclidean angle theta, v = exp(-lam) (cos theta, sin theta), so
|v|_g = 1 holds identically. The geodesic equations in (x, theta) are

    x'     = exp(-lam) (cos theta, sin theta)
    theta' = exp(-lam) (-sin theta d1 lam + cos theta d2 lam)

Boundary points of the influx set are addressed by fan coordinates (phi, a):
x = R (cos phi, sin phi) and theta = phi + pi + a, with a the incidence angle
measured from the inward normal (conformal metrics preserve angles).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConformalMetric",
    "EuclideanMetric",
    "CapMetric",
    "HyperbolicMetric",
    "GridMetric",
    "metric_from_config",
    "FanGrid",
    "FlowResult",
    "GeodesicTrace",
    "NonTerminationError",
    "flow_to_boundary",
    "geodesic_from_boundary",
    "scattering_relation",
    "simplicity_check",
    "boundary_measure",
    "santalo_volumes",
    "wrap_angle",
]


class NonTerminationError(RuntimeError):
    """Raised when a geodesic fails to leave the disk within the step budget."""


def wrap_angle(a):
    """Wrap angles to [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


# metrics ---------------------------------------------------------------------


class ConformalMetric:
    """Base class: subclasses provide ``lam_and_grad`` and ``laplacian_lam``."""

    kind = "abstract"

    def __init__(self, radius=1.0):
        self.radius = float(radius)
        self._tau_bound = None

    def lam_and_grad(self, x1, x2):
        raise NotImplementedError

    def laplacian_lam(self, x1, x2):
        raise NotImplementedError

    def lam(self, x1, x2):
        return self.lam_and_grad(x1, x2)[0]

    def _check_domain(self, x1, x2):
        r = np.hypot(x1, x2)
        if np.any(r > self.radius * (1 + 1e-9)):
            raise ValueError("point outside the closed disk")

    def gaussian_curvature(self, x1, x2):
        """K = -exp(-2 lam) Laplacian(lam)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        self._check_domain(x1, x2)
        return -np.exp(-2 * self.lam(x1, x2)) * self.laplacian_lam(x1, x2)

    def boundary_curvature(self, phi):
        """Geodesic curvature of the boundary circle at polar angle ``phi``."""
        c, s = np.cos(phi), np.sin(phi)
        R = self.radius
        l, l1, l2 = self.lam_and_grad(R * c, R * s)
        return np.exp(-l) * (1.0 / R + c * l1 + s * l2)

    def boundary_length_element(self, phi):
        """ds/dphi along the boundary in the metric g."""
        R = self.radius
        return R * np.exp(self.lam(R * np.cos(phi), R * np.sin(phi)))

    @property
    def tau_bound(self):
        """Longest g-length of a straight diameter (16 directions, Gauss-Legendre).

        Geodesic chords of a simple metric are minimizing, so this sets the
        scale for the default step and the non-termination budget.
        """
        if self._tau_bound is None:
            xg, wg = np.polynomial.legendre.leggauss(64)
            psi = np.pi * np.arange(16) / 16
            t = self.radius * xg
            l = self.lam(np.outer(np.cos(psi), t), np.outer(np.sin(psi), t))
            self._tau_bound = float(np.max(np.exp(l) @ (wg * self.radius)))
        return self._tau_bound

    def volume(self, n=64):
        """Area of M, int exp(2 lam) dx, by Gauss-Legendre in r and trapezoid in phi."""
        xg, wg = np.polynomial.legendre.leggauss(n)
        r = 0.5 * self.radius * (xg + 1)
        wr = 0.5 * self.radius * wg * r
        p = 2 * np.pi * np.arange(2 * n) / (2 * n)
        Rr, Pp = np.meshgrid(r, p, indexing="ij")
        dens = np.exp(2 * self.lam(Rr * np.cos(Pp), Rr * np.sin(Pp)))
        return float(np.sum(wr[:, None] * dens) * 2 * np.pi / (2 * n))

    def to_config(self):
        return {"type": self.kind, "disk_radius": self.radius}

    def with_radius(self, radius):
        """The same conformal factor on a disk of another radius."""
        raise NotImplementedError(f"{type(self).__name__} cannot be restricted or extended")


class EuclideanMetric(ConformalMetric):
    kind = "euclidean"

    def lam_and_grad(self, x1, x2):
        z = np.zeros(np.broadcast(x1, x2).shape)
        return z, z, z

    def laplacian_lam(self, x1, x2):
        return np.zeros(np.broadcast(x1, x2).shape)

    def with_radius(self, radius):
        return EuclideanMetric(radius)


class CapMetric(ConformalMetric):
    """Round sphere metric 4 kappa / (1 + kappa |x|^2)^2 |dx|^2, curvature +1.

    The disk of radius R is a cap of the unit sphere; it is strictly convex and
    free of conjugate points iff kappa R^2 < 1 (smaller than a hemisphere).
    """

    kind = "cap"

    def __init__(self, kappa=1.0, radius=0.5):
        super().__init__(radius)
        self.kappa = float(kappa)

    def lam_and_grad(self, x1, x2):
        k = self.kappa
        q = 1 + k * (x1 * x1 + x2 * x2)
        lam = 0.5 * np.log(4 * k) - np.log(q)
        return lam, -2 * k * x1 / q, -2 * k * x2 / q

    def laplacian_lam(self, x1, x2):
        k = self.kappa
        q = 1 + k * (x1 * x1 + x2 * x2)
        return -4 * k / q**2

    def with_radius(self, radius):
        return CapMetric(self.kappa, radius)

    def to_config(self):
        return {"type": self.kind, "kappa": self.kappa, "disk_radius": self.radius}


class HyperbolicMetric(ConformalMetric):
    """Poincare-type metric 4 kappa / (1 - kappa |x|^2)^2 |dx|^2, curvature -1."""

    kind = "hyperbolic"

    def __init__(self, kappa=1.0, radius=0.9):
        if kappa * radius**2 >= 1:
            raise ValueError("need kappa R^2 < 1 for the hyperbolic factor")
        super().__init__(radius)
        self.kappa = float(kappa)

    def lam_and_grad(self, x1, x2):
        k = self.kappa
        q = 1 - k * (x1 * x1 + x2 * x2)
        lam = 0.5 * np.log(4 * k) - np.log(q)
        return lam, 2 * k * x1 / q, 2 * k * x2 / q

    def laplacian_lam(self, x1, x2):
        k = self.kappa
        q = 1 - k * (x1 * x1 + x2 * x2)
        return 4 * k / q**2

    def with_radius(self, radius):
        return HyperbolicMetric(self.kappa, radius)

    def to_config(self):
        return {"type": self.kind, "kappa": self.kappa, "disk_radius": self.radius}


class GridMetric(ConformalMetric):
    """User supplied lam sampled on a :class:`~attxray.grid.DiskGrid`.

    Derivatives are spectral on the grid; off-grid values come from quintic
    spline interpolants of lam, its gradient and its Laplacian.
    """

    kind = "grid"

    def __init__(self, grid, lam_values):
        super().__init__(grid.radius)
        self.grid = grid
        self.lam_values = np.asarray(lam_values, dtype=float)
        if not np.all(np.isfinite(self.lam_values)):
            raise ValueError("lambda grid must be finite")
        g1, g2 = grid.gradient(self.lam_values)
        lap = grid.laplacian(self.lam_values)
        self._interp = grid.interpolant(np.stack([self.lam_values, g1, g2, lap]))

    def lam_and_grad(self, x1, x2):
        v = self._interp(x1, x2)
        return v[..., 0], v[..., 1], v[..., 2]

    def laplacian_lam(self, x1, x2):
        return self._interp(x1, x2)[..., 3]

    def to_config(self):
        return {
            "type": self.kind,
            "disk_radius": self.radius,
            "N_r": self.grid.n_r,
            "N_phi": self.grid.n_phi,
            "lambda_grid": self.lam_values.tolist(),
        }


def metric_from_config(cfg):
    """Build a metric from a config mapping (see ``io.validate_metric_config``)."""
    kind = cfg.get("type", "euclidean")
    R = float(cfg.get("disk_radius", 1.0))
    if kind == "euclidean":
        return EuclideanMetric(R)
    if kind == "cap":
        return CapMetric(float(cfg.get("kappa", 1.0)), R)
    if kind == "hyperbolic":
        return HyperbolicMetric(float(cfg.get("kappa", 1.0)), R)
    if kind == "grid":
        from .grid import DiskGrid

        lam = np.asarray(cfg["lambda_grid"], dtype=float)
        grid = DiskGrid(lam.shape[0], lam.shape[1], R)
        return GridMetric(grid, lam)
    raise ValueError(f"unknown metric type {kind!r}")


# fan coordinates -------------------------------------------------------------


class FanGrid:
    """Tensor grid on the influx boundary in fan coordinates (phi, a).

    ``phi`` is uniform on [0, 2 pi); ``a`` sits on Gauss-Legendre nodes of
    (-pi/2 + delta, pi/2 - delta). Arrays have shape (n_phi, n_a).
    """

    def __init__(self, n_phi=64, n_a=32, delta=0.05, radius=1.0):
        if delta < 0 or delta >= np.pi / 2:
            raise ValueError("glancing margin must lie in [0, pi/2)")
        self.n_phi = int(n_phi)
        self.n_a = int(n_a)
        self.delta = float(delta)
        self.radius = float(radius)
        self.a_max = np.pi / 2 - self.delta
        xg, wg = np.polynomial.legendre.leggauss(self.n_a)
        self.a = self.a_max * xg
        self.a_weights = self.a_max * wg
        self.phi = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.PHI, self.A = np.meshgrid(self.phi, self.a, indexing="ij")

    @property
    def shape(self):
        return (self.n_phi, self.n_a)

    def points(self):
        """Base points and directions (x1, x2, theta), each of shape ``shape``."""
        return fan_to_phase(self.PHI, self.A, self.radius)

    def measure(self, metric):
        """Quadrature weights of d mu = |<v, nu>| dSigma^2 on the grid."""
        return boundary_measure(metric, self.PHI, self.A) * (
            2 * np.pi / self.n_phi * self.a_weights[None, :]
        )

    def to_config(self):
        return {"n_phi": self.n_phi, "n_a": self.n_a, "delta_glancing": self.delta}


def fan_to_phase(phi, a, radius=1.0):
    """Influx fan coordinates to (x1, x2, theta)."""
    phi = np.asarray(phi, dtype=float)
    return radius * np.cos(phi), radius * np.sin(phi), phi + np.pi + np.asarray(a)


def phase_to_fan(x1, x2, theta):
    """Boundary phase point to (phi, a), a measured from the inward normal."""
    phi = np.arctan2(x2, x1) % (2 * np.pi)
    return phi, wrap_angle(theta - phi - np.pi)


def boundary_measure(metric, phi, a):
    """Density of d mu in (phi, a): cos(a) times the g-length element R exp(lam)."""
    return np.cos(a) * metric.boundary_length_element(phi)


# flow --------------------------------------------------------------------------


@dataclass
class FlowResult:
    """End state of a batch of geodesics flowed to the boundary.

    ``U`` is the propagator solving U' = -A U, U(0) = Id (None when no
    connection is given); ``integral`` holds int_0^T U^H f dt with shape
    (m, n, p); ``jacobi_min`` is min J(t) over the recorded steps t > 0.
    """

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    theta: np.ndarray
    U: np.ndarray | None = None
    integral: np.ndarray | None = None
    jacobi_min: np.ndarray | None = None
    jacobi_end: np.ndarray | None = None
    records: list | None = field(default=None, repr=False)


def _axpy(y, k, h):
    return tuple(a if (a is None or b is None) else a + _bc(h, a) * b for a, b in zip(y, k))


def _bc(h, a):
    h = np.asarray(h)
    if h.ndim == 0:
        return h
    return h.reshape(h.shape + (1,) * (a.ndim - 1))


def _polar_fix(U):
    # one Newton-Schulz polar iteration; quadratic in the unitarity defect
    if U.shape[-1] == 1:
        return U / np.abs(U)
    UhU = np.conj(np.swapaxes(U, -1, -2)) @ U
    return 0.5 * U @ (3 * np.eye(U.shape[-1]) - UhU)


class _System:
    def __init__(self, metric, connection, integrand, jacobi):
        self.metric = metric
        self.conn = connection
        self.integrand = integrand
        self.jacobi = jacobi

    def rhs(self, y, geo_only=False):
        x1, x2, th, U, Q, J = y
        l, l1, l2 = self.metric.lam_and_grad(x1, x2)
        e = np.exp(-l)
        c, s = np.cos(th), np.sin(th)
        v1, v2 = e * c, e * s
        dth = e * (-s * l1 + c * l2)
        if geo_only:
            return (v1, v2, dth, None, None, None)
        dU = dQ = dJ = None
        if U is not None:
            dU = -(self.conn.contract(x1, x2, v1, v2) @ U)
        if Q is not None:
            f = self.integrand(x1, x2, th)
            f = f.reshape(Q.shape)
            dQ = f if U is None else np.conj(np.swapaxes(U, -1, -2)) @ f
        if J is not None:
            K = -np.exp(-2 * l) * self.metric.laplacian_lam(x1, x2)
            dJ = np.stack([J[:, 1], -K * J[:, 0]], axis=1)
        return (v1, v2, dth, dU, dQ, dJ)

    def step(self, y, h, geo_only=False):
        k1 = self.rhs(y, geo_only)
        k2 = self.rhs(_axpy(y, k1, h / 2), geo_only)
        k3 = self.rhs(_axpy(y, k2, h / 2), geo_only)
        k4 = self.rhs(_axpy(y, k3, h), geo_only)
        out = []
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4):
            if a is None or b1 is None:
                out.append(None if a is None else a)
                continue
            out.append(a + _bc(h, a) / 6 * (b1 + 2 * b2 + 2 * b3 + b4))
        if out[3] is not None and not geo_only:
            out[3] = _polar_fix(out[3])
        return tuple(out)


def _take(y, idx):
    return tuple(None if a is None else a[idx] for a in y)


def flow_to_boundary(metric, x1, x2, theta, connection=None, integrand=None, n_int=None,
                     h=None, jacobi=False, record=False):
    """Flow unit-speed geodesics from (x, theta) until they leave the disk.

    Parameters
    ----------
    metric : ConformalMetric
    x1, x2, theta : array_like
        Starting points (inside or on the closed disk) and direction angles.
    connection : Connection, optional
        Attenuation; the propagator U' = -A(x, v) U is carried along.
    integrand : callable, optional
        ``f(x1, x2, theta)`` returning shape (m, n) or (m, n, p). The result
        ``integral`` is int_0^T U^H f dt, integrated as an extra RK4 component
        (Simpson's rule on the step midpoints).
    n_int : tuple, optional
        Shape (n, p) of the integrand values; inferred when omitted.
    h : float, optional
        Step size; defaults to ``metric.tau_bound / 256``.
    jacobi : bool
        Also integrate J'' + K J = 0, J(0) = 0, J'(0) = 1 and report min J.
    record : bool
        Keep every accepted state (for traces; use for few rays only).

    Returns
    -------
    FlowResult
        Flattened arrays of length m = number of rays.
    """
    x1 = np.asarray(x1, dtype=float).ravel().copy()
    x2 = np.asarray(x2, dtype=float).ravel().copy()
    th = np.broadcast_to(np.asarray(theta, dtype=float), np.asarray(theta).shape).ravel().copy()
    m = x1.size
    R = metric.radius
    r = np.hypot(x1, x2)
    if np.any(r > R * (1 + 1e-9)):
        raise ValueError("starting point outside the disk")
    h = float(h or metric.tau_bound / 256)
    max_steps = int(np.ceil(2 * metric.tau_bound / h)) + 2
    sysm = _System(metric, connection, integrand, jacobi)

    U = None
    if connection is not None:
        n = connection.n
        U = np.broadcast_to(np.eye(n, dtype=complex), (m, n, n)).copy()
    Q = None
    if integrand is not None:
        if n_int is None:
            f0 = np.asarray(integrand(x1[:1], x2[:1], th[:1]))
            n_int = f0.shape[1:] if f0.ndim > 2 else f0.shape[1:] + (1,)
        n_int = tuple(n_int) if len(n_int) == 2 else tuple(n_int) + (1,)
        Q = np.zeros((m,) + n_int, dtype=complex)
    J = np.zeros((m, 2)) if jacobi else None
    if jacobi:
        J[:, 1] = 1.0

    y = (x1, x2, th, U, Q, J)
    T = np.zeros(m)
    out = [a.copy() if a is not None else None for a in y]
    jmin = np.full(m, np.inf) if jacobi else None

    # rays on the boundary pointing outward (or tangent) are already done
    outward = (r >= R * (1 - 1e-13)) & (x1 * np.cos(th) + x2 * np.sin(th) >= 0)
    active = np.nonzero(~outward)[0]
    ya = _take(y, active)
    t = 0.0
    recs = [] if record else None
    if record:
        recs.append((np.arange(m), np.zeros(m), *(None if a is None else a.copy() for a in y)))
    nsteps = 0
    while active.size:
        nsteps += 1
        if nsteps > max_steps:
            raise NonTerminationError(
                f"{active.size} geodesics still inside after {max_steps} steps"
            )
        yn = sysm.step(ya, h)
        rn = np.hypot(yn[0], yn[1])
        cross = rn >= R
        keep = ~cross
        if jacobi:
            jmin[active[keep]] = np.minimum(jmin[active[keep]], yn[5][keep, 0])
        if cross.any():
            yc = _take(ya, cross)
            s = _exit_step(sysm, yc, h, R)
            yf = sysm.step(yc, s)
            idx = active[cross]
            T[idx] = t + s
            for j in range(6):
                if out[j] is not None:
                    out[j][idx] = yf[j]
            if jacobi:
                jmin[idx] = np.minimum(jmin[idx], yf[5][:, 0])
            if record:
                recs.append((idx, t + s, *yf))
        t += h
        active = active[keep]
        ya = _take(yn, keep)
        if record and active.size:
            recs.append((active.copy(), np.full(active.size, t), *ya))

    res = FlowResult(t=T, x1=out[0], x2=out[1], theta=out[2], U=out[3], integral=out[4])
    if jacobi:
        res.jacobi_min = jmin
        res.jacobi_end = out[5][:, 0]
    if record:
        res.records = recs
    return res


def _exit_step(sysm, y, h, R, iters=60):
    """Partial step s in (0, h] with |x(s)| = R, by safeguarded Newton."""
    m = y[0].size
    lo = np.zeros(m)
    hi = np.full(m, h)
    # linear first guess from the radial velocity
    x1, x2 = y[0], y[1]
    g0 = x1 * x1 + x2 * x2 - R * R
    k = sysm.rhs(y, geo_only=True)
    rdot = 2 * (x1 * k[0] + x2 * k[1])
    s = np.where(rdot > 0, np.clip(-g0 / np.where(rdot > 0, rdot, 1), 0, h), h / 2)
    for _ in range(iters):
        z = sysm.step(y, s, geo_only=True)
        g = z[0] ** 2 + z[1] ** 2 - R * R
        if np.all(np.abs(g) < 1e-15 * R * R):
            break
        lo = np.where(g < 0, s, lo)
        hi = np.where(g >= 0, s, hi)
        kz = sysm.rhs(z, geo_only=True)
        dg = 2 * (z[0] * kz[0] + z[1] * kz[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            sn = s - g / dg
        bad = ~np.isfinite(sn) | (sn <= lo) | (sn >= hi)
        s = np.where(bad, 0.5 * (lo + hi), sn)
    return s


# traces and boundary maps ---------------------------------------------------


@dataclass
class GeodesicTrace:
    """Sampled unit-speed geodesic from an influx point to its exit."""

    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    theta: np.ndarray
    U: np.ndarray | None = None

    @property
    def tau(self):
        return float(self.times[-1])

    def speed_defect(self, metric):
        """max | |v|_g - 1 | along the trace, from finite differences of x(t)."""
        # the stored angle makes |v|_g = 1 exact; this checks the position samples
        l = metric.lam(self.x1, self.x2)
        v1 = np.exp(-l) * np.cos(self.theta)
        v2 = np.exp(-l) * np.sin(self.theta)
        return float(np.max(np.abs(np.exp(l) * np.hypot(v1, v2) - 1)))

    def to_csv(self, path):
        data = np.column_stack([self.times, self.x1, self.x2, self.theta % (2 * np.pi)])
        np.savetxt(path, data, delimiter=",", header="t,x1,x2,theta", comments="", fmt="%.17g")


def _assemble_traces(res, m):
    per = [[] for _ in range(m)]
    for rec in res.records:
        idx, t, x1, x2, th, U = rec[:6]
        for j, i in enumerate(idx):
            per[i].append((t[j], x1[j], x2[j], th[j], None if U is None else U[j]))
    traces = []
    for rows in per:
        times = np.array([r[0] for r in rows])
        U = None if rows[0][4] is None else np.array([r[4] for r in rows])
        traces.append(GeodesicTrace(times, np.array([r[1] for r in rows]),
                                    np.array([r[2] for r in rows]),
                                    np.array([r[3] for r in rows]), U))
    return traces


def geodesic_from_boundary(metric, phi, a, h=None, connection=None, delta=0.0):
    """Trace the geodesic entering at fan point (phi, a) until it exits.

    Returns a list of :class:`GeodesicTrace` (a single trace for scalar input).
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    phi, a = np.broadcast_arrays(phi, a)
    if np.any(np.abs(a) > np.pi / 2 - delta):
        raise ValueError("fan point violates the glancing margin")
    x1, x2, th = fan_to_phase(phi.ravel(), a.ravel(), metric.radius)
    res = flow_to_boundary(metric, x1, x2, th, connection=connection, h=h, record=True)
    traces = _assemble_traces(res, x1.size)
    return traces[0] if traces.__len__() == 1 else traces


def scattering_relation(metric, phi, a, h=None):
    """Exit point and direction for influx fan points.

    Returns ``(phi_out, a_out, tau)`` where the exit direction is
    theta_out = phi_out + a_out (a_out measured from the outward normal).
    """
    phi = np.asarray(phi, dtype=float)
    a = np.asarray(a, dtype=float)
    shp = np.broadcast(phi, a).shape
    x1, x2, th = fan_to_phase(*np.broadcast_arrays(phi, a), metric.radius)
    res = flow_to_boundary(metric, x1, x2, th, h=h)
    phi_o = np.arctan2(res.x2, res.x1) % (2 * np.pi)
    a_o = wrap_angle(res.theta - phi_o)
    return phi_o.reshape(shp), a_o.reshape(shp), res.t.reshape(shp)


@dataclass
class SimplicityReport:
    passed: bool
    min_boundary_curvature: float
    min_jacobi: float
    n_conjugate: int
    n_geodesics: int

    def as_dict(self):
        return {
            "passed": bool(self.passed),
            "min_boundary_curvature": self.min_boundary_curvature,
            "min_jacobi": self.min_jacobi,
            "n_conjugate": self.n_conjugate,
            "n_geodesics": self.n_geodesics,
        }


def simplicity_check(metric, n_phi=32, n_a=32, delta=0.01, h=None, n_boundary=256):
    """Strict convexity of the boundary and absence of conjugate points.

    Jacobi fields J'' + K J = 0, J(0) = 0, J'(0) = 1 are integrated along every
    fan geodesic; a conjugate point is flagged when J <= 0 somewhere in (0, tau].
    Rays that reach a non-convex boundary may fail to terminate; that counts as
    a failure.
    """
    phi_b = 2 * np.pi * np.arange(n_boundary) / n_boundary
    kg = float(np.min(metric.boundary_curvature(phi_b)))
    if kg <= 0:
        return SimplicityReport(False, kg, float("nan"), 0, 0)
    fan = FanGrid(n_phi, n_a, delta, metric.radius)
    x1, x2, th = fan.points()
    try:
        res = flow_to_boundary(metric, x1, x2, th, h=h, jacobi=True)
    except NonTerminationError:
        return SimplicityReport(False, kg, float("nan"), -1, x1.size)
    bad = res.jacobi_min <= 0
    return SimplicityReport(not bad.any(), kg, float(res.jacobi_min.min()), int(bad.sum()), x1.size)


def santalo_volumes(metric, fan=None, h=None):
    """Both sides of Santalo's formula for F = 1.

    Returns ``(vol_SM, boundary_integral)`` with vol_SM = 2 pi Area(M) and the
    boundary integral of tau against d mu on the fan grid.
    """
    fan = fan or FanGrid(128, 64, 0.0, metric.radius)
    x1, x2, th = fan.points()
    res = flow_to_boundary(metric, x1, x2, th, h=h)
    tau = res.t.reshape(fan.shape)
    return 2 * np.pi * metric.volume(), float(np.sum(tau * fan.measure(metric)))
