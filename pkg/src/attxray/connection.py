"""Unitary connections on the trivial bundle M x C^n and exterior calculus.

A connection is a skew-Hermitian matrix of 1-forms A = A1 dx1 + A2 dx2.
Pointwise evaluation returns trailing matrix axes, ``x.shape + (n, n)``.

Grid fields use leading component axes followed by the (radial, angular) grid
axes of :class:`~attxray.grid.DiskGrid`:

* section (0-form):          (n, n_r, n_phi)
* 1-form b1 dx1 + b2 dx2:     (2, n, n_r, n_phi), Euclidean components
* 2-form c dx1 ^ dx2:         (n, n_r, n_phi), the coefficient c
* matrix connection on grid:  (2, n, n, n_r, n_phi)

Orientation: *dx1 = dx2, *dx2 = -dx1. On 0- and 2-forms the star carries the
conformal factor, *1 = exp(2 lam) dx1 ^ dx2 and *(c dx1 ^ dx2) = exp(-2 lam) c.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Connection",
    "ZeroConnection",
    "PolynomialConnection",
    "GaugeTransformed",
    "MetricConnection",
    "SumConnection",
    "GridConnection",
    "random_polynomial_connection",
    "random_gauge",
    "connection_from_config",
    "ExteriorCalculus",
    "gauge_transform_grid",
    "is_skew_hermitian",
]


def _dagger(M):
    return np.conj(np.swapaxes(M, -1, -2))


def is_skew_hermitian(M, tol=1e-12):
    """Check M^H + M = 0 on the trailing (n, n) axes."""
    return bool(np.max(np.abs(M + _dagger(M)), initial=0.0) <= tol)


def _random_skew(rng, n, size=()):
    X = rng.standard_normal(size + (n, n)) + 1j * rng.standard_normal(size + (n, n))
    return 0.5 * (X - _dagger(X))


class Connection:
    """Interface: subclasses implement ``eval(x1, x2) -> (A1, A2)``."""

    n = 1

    def eval(self, x1, x2):
        raise NotImplementedError

    def contract(self, x1, x2, v1, v2):
        """A(x, v) = A1 v1 + A2 v2 for Euclidean components of v."""
        A1, A2 = self.eval(x1, x2)
        return A1 * np.asarray(v1)[..., None, None] + A2 * np.asarray(v2)[..., None, None]

    def on_sphere_bundle(self, metric, x1, x2, theta):
        """A evaluated on the g-unit vector with angle ``theta`` at x."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        metric._check_domain(x1, x2)
        e = np.exp(-metric.lam(x1, x2))
        return self.contract(x1, x2, e * np.cos(theta), e * np.sin(theta))

    def on_grid(self, grid):
        """Matrix components sampled on a DiskGrid, shape (2, n, n, n_r, n_phi)."""
        A1, A2 = self.eval(grid.x1, grid.x2)
        return np.moveaxis(np.stack([A1, A2]), (1, 2), (-2, -1))

    def to_config(self):
        raise NotImplementedError(type(self).__name__)


class ZeroConnection(Connection):
    def __init__(self, n=1):
        self.n = int(n)

    def eval(self, x1, x2):
        shp = np.broadcast(x1, x2).shape + (self.n, self.n)
        z = np.zeros(shp, dtype=complex)
        return z, z

    def contract(self, x1, x2, v1, v2):
        return np.zeros(np.shape(v1) + (self.n, self.n), dtype=complex)

    def to_config(self):
        return {"n": self.n, "kind": "zero"}


class PolynomialConnection(Connection):
    """A_j(x) = sum_{p+q <= d} C[j, p, q] x1^p x2^q with skew-Hermitian C[j, p, q].

    ``coeffs`` has shape (2, d+1, d+1, n, n); entries with p + q > d are ignored.
    """

    def __init__(self, coeffs):
        C = np.asarray(coeffs, dtype=complex)
        if C.ndim != 5 or C.shape[0] != 2 or C.shape[-1] != C.shape[-2]:
            raise ValueError("coeffs must have shape (2, d+1, d+1, n, n)")
        if not is_skew_hermitian(C, 1e-12):
            raise ValueError("polynomial coefficients must be skew-Hermitian")
        self.coeffs = C
        self.n = C.shape[-1]
        self.degree = C.shape[1] - 1

    def eval(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        d, n = self.degree, self.n
        p1 = np.stack([x1**p for p in range(d + 1)], axis=-1)
        p2 = np.stack([x2**q for q in range(d + 1)], axis=-1)
        mono = (p1[..., :, None] * p2[..., None, :]).reshape(x1.shape + (-1,))
        mask = np.add.outer(np.arange(d + 1), np.arange(d + 1)) <= d
        C = (self.coeffs * mask[None, :, :, None, None]).reshape(2, -1, n * n)
        A1 = (mono @ C[0]).reshape(x1.shape + (n, n))
        A2 = (mono @ C[1]).reshape(x1.shape + (n, n))
        return A1, A2

    def to_config(self):
        return {
            "n": self.n,
            "kind": "matrix_poly" if self.n > 1 else "abelian_poly",
            "coefficients": {"re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()},
        }


def random_polynomial_connection(rng, n=1, degree=2, scale=1.0):
    """Seeded polynomial connection with coefficients shrinking with degree."""
    C = _random_skew(rng, n, (2, degree + 1, degree + 1))
    w = 1.0 / (1.0 + np.add.outer(np.arange(degree + 1), np.arange(degree + 1)))
    return PolynomialConnection(scale * C * w[None, :, :, None, None])


class GaugeTransformed(Connection):
    """A^G = G^-1 dG + G^-1 A G for G = exp(rho T), rho = (R^2 - |x|^2) p(x).

    T is skew-Hermitian and p is a polynomial with coefficients ``p[i, j]`` of
    x1^i x2^j, so G is unitary and G = Id on the boundary circle. Repeated
    application composes gauges.
    """

    def __init__(self, base, T, p, radius=1.0):
        self.base = base
        self.n = base.n
        self.T = np.asarray(T, dtype=complex)
        if not is_skew_hermitian(self.T, 1e-12):
            raise ValueError("gauge generator must be skew-Hermitian")
        self.p = np.asarray(p, dtype=float)
        self.radius = float(radius)
        # T = V diag(i w) V^H
        w, V = np.linalg.eigh(-1j * self.T)
        self._w, self._V = w, V
        P = np.polynomial.polynomial
        self._p1 = P.polyder(self.p, axis=0)
        self._p2 = P.polyder(self.p, axis=1)

    def rho_and_grad(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        P = np.polynomial.polynomial
        pv = P.polyval2d(x1, x2, self.p)
        p1 = P.polyval2d(x1, x2, self._p1)
        p2 = P.polyval2d(x1, x2, self._p2)
        q = self.radius**2 - x1 * x1 - x2 * x2
        return q * pv, q * p1 - 2 * x1 * pv, q * p2 - 2 * x2 * pv

    def G(self, x1, x2):
        rho = self.rho_and_grad(x1, x2)[0]
        ph = np.exp(1j * rho[..., None] * self._w)
        return (self._V * ph[..., None, :]) @ np.conj(self._V.T)

    def _conjugate(self, rho, B):
        # G^-1 B G computed in the eigenbasis of T
        V = self._V
        ph = np.exp(1j * rho[..., None] * self._w)
        Bt = np.conj(V.T) @ B @ V
        Bt = Bt * np.conj(ph)[..., :, None] * ph[..., None, :]
        return V @ Bt @ np.conj(V.T)

    def eval(self, x1, x2):
        rho, r1, r2 = self.rho_and_grad(x1, x2)
        B1, B2 = self.base.eval(x1, x2)
        A1 = self.T * r1[..., None, None] + self._conjugate(rho, B1)
        A2 = self.T * r2[..., None, None] + self._conjugate(rho, B2)
        return A1, A2

    def contract(self, x1, x2, v1, v2):
        rho, r1, r2 = self.rho_and_grad(x1, x2)
        B = self.base.contract(x1, x2, v1, v2)
        return self.T * (r1 * v1 + r2 * v2)[..., None, None] + self._conjugate(rho, B)


def random_gauge(rng, base, n_factors=2, degree=2, scale=1.0, radius=1.0):
    """Apply ``n_factors`` seeded gauge factors exp(rho_k T_k) to ``base``."""
    A = base
    for _ in range(n_factors):
        T = _random_skew(rng, base.n)
        p = scale * rng.standard_normal((degree + 1, degree + 1))
        p *= np.add.outer(np.arange(degree + 1), np.arange(degree + 1)) <= degree
        A = GaugeTransformed(A, T, p, radius)
    return A


class MetricConnection(Connection):
    """scale * i *d(lam) Id_n, the scalar connection -h^-1 X h for h = e^{i theta}."""

    def __init__(self, metric, scale=1.0, n=1):
        self.metric = metric
        self.scale = float(scale)
        self.n = int(n)

    def eval(self, x1, x2):
        _, l1, l2 = self.metric.lam_and_grad(np.asarray(x1, float), np.asarray(x2, float))
        I = np.eye(self.n)
        A1 = (-1j * self.scale * l2)[..., None, None] * I
        A2 = (1j * self.scale * l1)[..., None, None] * I
        return A1, A2


class SumConnection(Connection):
    def __init__(self, *parts):
        ns = {p.n for p in parts}
        if len(ns) != 1:
            raise ValueError("summands must share the fibre dimension")
        self.parts = parts
        self.n = ns.pop()

    def eval(self, x1, x2):
        out = [p.eval(x1, x2) for p in self.parts]
        return sum(o[0] for o in out), sum(o[1] for o in out)


class GridConnection(Connection):
    """Connection given by samples on a DiskGrid; off-grid values by spline."""

    def __init__(self, grid, values):
        V = np.asarray(values, dtype=complex)
        if V.shape[:1] != (2,) or V.shape[1] != V.shape[2] or V.shape[3:] != grid.shape:
            raise ValueError("grid connection must have shape (2, n, n, n_r, n_phi)")
        if not is_skew_hermitian(np.moveaxis(V, (1, 2), (-2, -1)), 1e-12):
            raise ValueError("grid connection must be skew-Hermitian at every node")
        self.grid = grid
        self.values = V
        self.n = V.shape[1]
        self._interp = grid.interpolant(V)

    def eval(self, x1, x2):
        v = self._interp(x1, x2)
        return v[..., 0, :, :], v[..., 1, :, :]

    def on_grid(self, grid):
        if grid is self.grid:
            return self.values
        return super().on_grid(grid)


def connection_from_config(cfg, grid_values=None, grid=None):
    """Build a connection from ``{n, kind, coefficients}``.

    ``kind`` is one of "zero", "abelian_poly", "matrix_poly" or "matrix_grid";
    for "matrix_grid" pass the loaded array and its grid.
    """
    kind = cfg.get("kind", "zero")
    n = int(cfg.get("n", 1))
    if kind == "zero":
        return ZeroConnection(n)
    if kind in ("abelian_poly", "matrix_poly"):
        c = cfg["coefficients"]
        C = np.asarray(c["re"], dtype=float) + 1j * np.asarray(c.get("im", 0.0), dtype=float)
        conn = PolynomialConnection(C)
        if conn.n != n:
            raise ValueError("coefficient shape does not match n")
        return conn
    if kind == "random_poly":
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        return random_polynomial_connection(rng, n, int(cfg.get("degree", 2)),
                                            float(cfg.get("scale", 1.0)))
    if kind == "matrix_grid":
        if grid_values is None or grid is None:
            raise ValueError("matrix_grid connections need grid values")
        return GridConnection(grid, grid_values)
    raise ValueError(f"unknown connection kind {kind!r}")


# exterior calculus on the grid --------------------------------------------------


def _mat(A, s):
    # (n, n, ...) x (n, ...) -> (n, ...)
    return np.einsum("ab...,b...->a...", A, s)


class ExteriorCalculus:
    """d_A, d_A^*, Hodge star and curvature for grid fields.

    Parameters
    ----------
    grid : DiskGrid
    metric : ConformalMetric
    connection : Connection or ndarray, optional
        Either a connection or its grid samples (2, n, n, n_r, n_phi).
    n : int
        Fibre dimension when no connection is given.
    """

    def __init__(self, grid, metric, connection=None, n=1):
        self.grid = grid
        self.metric = metric
        if connection is None:
            connection = ZeroConnection(n)
        A = connection if isinstance(connection, np.ndarray) else connection.on_grid(grid)
        self.A = np.asarray(A, dtype=complex)
        self.n = self.A.shape[1]
        self.lam = metric.lam(grid.x1, grid.x2)
        self.e2l = np.exp(2 * self.lam)

    # stars
    @staticmethod
    def star1(beta):
        """*(b1 dx1 + b2 dx2) = -b2 dx1 + b1 dx2."""
        return np.stack([-beta[1], beta[0]])

    def star0(self, s):
        """0-form to the coefficient of the 2-form s vol_g."""
        return self.e2l * s

    def star2(self, c):
        """2-form coefficient to the 0-form *(c dx1 ^ dx2)."""
        return c / self.e2l

    # differentials
    def d0(self, s):
        """d_A s = ds + A s."""
        g1, g2 = self.grid.gradient(s)
        return np.stack([g1 + _mat(self.A[0], s), g2 + _mat(self.A[1], s)])

    def d1(self, beta):
        """Coefficient of d_A beta = d beta + A ^ beta."""
        b1, b2 = beta
        return (self.grid.d1(b2) - self.grid.d2(b1)
                + _mat(self.A[0], b2) - _mat(self.A[1], b1))

    def star_d1(self, beta):
        return self.star2(self.d1(beta))

    def codiff1(self, beta):
        """d_A^* beta = -* d_A * beta (a section)."""
        return -self.star2(self.d1(self.star1(beta)))

    def codiff2(self, c):
        """d_A^* of the 2-form c dx1 ^ dx2 (a 1-form)."""
        s = self.star2(c)
        return -self.star1(self.d0(s))

    def curvature(self):
        """F_A = dA + A ^ A as a 2-form coefficient, shape (n, n, n_r, n_phi)."""
        A1, A2 = self.A
        g = self.grid
        return (g.d1(A2) - g.d2(A1)
                + np.einsum("ab...,bc...->ac...", A1, A2)
                - np.einsum("ab...,bc...->ac...", A2, A1))

    def laplacian0(self, s):
        """-Delta_A on sections, d_A^* d_A s."""
        return self.codiff1(self.d0(s))

    def laplacian1(self, beta):
        """-Delta_A on 1-forms, d_A^* d_A beta + d_A d_A^* beta."""
        return self.codiff2(self.d1(beta)) + self.d0(self.codiff1(beta))

    def laplacian2(self, c):
        return self.d1(self.codiff2(c))

    # pairings
    def inner0(self, s, t):
        return np.sum(self.grid.integrate(s * np.conj(t), self.e2l))

    def inner1(self, a, b):
        # the conformal factors cancel for 1-forms in two dimensions
        return np.sum(self.grid.integrate(a * np.conj(b)))

    def inner2(self, c, d):
        return np.sum(self.grid.integrate(c * np.conj(d), 1.0 / self.e2l))

    def norm0(self, s):
        return float(np.sqrt(abs(self.inner0(s, s))))

    def norm1(self, b):
        return float(np.sqrt(abs(self.inner1(b, b))))

    # degree +-1 parts
    @staticmethod
    def fourier_parts(beta):
        """(beta_{-1}, beta_{1}) with beta_{+-1} = (beta +- i *beta) / 2."""
        sb = ExteriorCalculus.star1(beta)
        return 0.5 * (beta - 1j * sb), 0.5 * (beta + 1j * sb)

    def sm_coefficients(self, beta):
        """Coefficients (c_{-1}, c_1) of e^{-+i theta} in the restriction to SM."""
        el = np.exp(-self.lam)
        b1, b2 = beta
        return 0.5 * el * (b1 + 1j * b2), 0.5 * el * (b1 - 1j * b2)

    def from_sm_coefficients(self, cm, cp):
        """Inverse of :meth:`sm_coefficients`."""
        el = np.exp(self.lam)
        return np.stack([el * (cp + cm), 1j * el * (cp - cm)])


def gauge_transform_grid(grid, A, G, tol=1e-10):
    """A^G = G^-1 dG + G^-1 A G for grid samples; G has shape (n, n, n_r, n_phi)."""
    Gm = np.moveaxis(G, (0, 1), (-2, -1))
    defect = np.max(np.abs(_dagger(Gm) @ Gm - np.eye(G.shape[0])))
    if defect > tol:
        raise ValueError(f"G is not unitary (defect {defect:.2e})")
    Gi = np.conj(np.swapaxes(G, 0, 1))
    dG = grid.gradient(G)
    out = []
    for j in range(2):
        t = np.einsum("ab...,bc...->ac...", Gi, dG[j])
        t = t + np.einsum("ab...,bc...,cd...->ad...", Gi, A[j], G)
        out.append(t)
    return np.stack(out)
