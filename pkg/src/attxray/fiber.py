"""Vertical Fourier analysis on SM.

A function on SM is stored as u(x, theta) = sum_k u_k(x) e^{i k theta}, with
coefficient fields on a :class:`~attxray.grid.DiskGrid`. For the conformal
metric g = exp(2 lam)|dx|^2 the frame operators act on a single mode as

    eta_+(u_k e^{ik theta}) = e^{-lam} (dz u_k - k (dz lam) u_k) e^{i(k+1) theta}
    eta_-(u_k e^{ik theta}) = e^{-lam} (dzbar u_k + k (dzbar lam) u_k) e^{i(k-1) theta}

with dz = (d1 - i d2)/2, X = eta_+ + eta_-, X_perp = i (eta_- - eta_+), V = d_theta.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = ["FiberFunction", "FiberCalculus"]


class FiberFunction:
    """Vertical Fourier coefficients u_k, |k| <= N, of a C^n valued function on SM.

    Parameters
    ----------
    grid : DiskGrid
    coeffs : ndarray, shape (2N+1, n, n_r, n_phi)
        ``coeffs[N + k]`` is u_k.
    """

    def __init__(self, grid, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 3:
            c = c[:, None]
        if c.shape[0] % 2 != 1 or c.shape[-2:] != grid.shape:
            raise ValueError("coeffs must have shape (2N+1, n, n_r, n_phi)")
        self.grid = grid
        self.coeffs = c

    # construction ------------------------------------------------------------

    @classmethod
    def zeros(cls, grid, N, n=1):
        return cls(grid, np.zeros((2 * N + 1, n) + grid.shape, dtype=complex))

    @classmethod
    def from_degree(cls, grid, k, field, N=None):
        """Single-degree function field(x) e^{i k theta}; ``field`` is (n, n_r, n_phi)."""
        field = np.asarray(field, dtype=complex)
        if field.ndim == 2:
            field = field[None]
        N = max(abs(k), N or 0)
        u = cls.zeros(grid, N, field.shape[0])
        u.coeffs[N + k] = field
        return u

    @classmethod
    def from_samples(cls, grid, values, N=None):
        """Analysis of samples on equispaced theta_q = 2 pi q / Q.

        ``values`` has shape (n, n_r, n_phi, Q); the result keeps |k| <= N
        (default Q // 2 - 1).
        """
        values = np.asarray(values)
        if values.ndim == 3:
            values = values[None]
        Q = values.shape[-1]
        N = Q // 2 - 1 if N is None else N
        if 2 * N + 1 > Q:
            raise ValueError("need at least 2N+1 theta samples")
        fh = np.fft.fft(values, axis=-1) / Q
        ks = np.arange(-N, N + 1)
        c = np.moveaxis(fh[..., ks % Q], -1, 0)
        return cls(grid, c)

    # basic properties -----------------------------------------------------------

    @property
    def N(self):
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def n(self):
        return self.coeffs.shape[1]

    @property
    def degrees(self):
        return np.arange(-self.N, self.N + 1)

    def __getitem__(self, k):
        if abs(k) > self.N:
            return np.zeros((self.n,) + self.grid.shape, dtype=complex)
        return self.coeffs[self.N + k]

    def copy(self):
        return FiberFunction(self.grid, self.coeffs.copy())

    def resized(self, N):
        """Zero-pad or truncate to |k| <= N."""
        out = FiberFunction.zeros(self.grid, N, self.n)
        M = min(N, self.N)
        out.coeffs[N - M : N + M + 1] = self.coeffs[self.N - M : self.N + M + 1]
        return out

    def _aligned(self, other):
        N = max(self.N, other.N)
        return self.resized(N), other.resized(N)

    def __add__(self, other):
        a, b = self._aligned(other)
        return FiberFunction(self.grid, a.coeffs + b.coeffs)

    def __sub__(self, other):
        a, b = self._aligned(other)
        return FiberFunction(self.grid, a.coeffs - b.coeffs)

    def __mul__(self, c):
        return FiberFunction(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return FiberFunction(self.grid, -self.coeffs)

    def times(self, other):
        """Pointwise product of two scalar (n = 1) or scalar-times-vector functions."""
        a = self.coeffs
        b = other.coeffs
        Na, Nb = self.N, other.N
        out = np.zeros((2 * (Na + Nb) + 1,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]),
                       dtype=complex)
        for i in range(a.shape[0]):
            out[i : i + b.shape[0]] += a[i] * b
        return FiberFunction(self.grid, out)

    def project(self, ks):
        """Keep only the listed degrees."""
        out = FiberFunction.zeros(self.grid, self.N, self.n)
        for k in ks:
            if abs(k) <= self.N:
                out.coeffs[self.N + k] = self.coeffs[self.N + k]
        return out

    def even(self):
        return self.project([k for k in self.degrees if k % 2 == 0])

    def odd(self):
        return self.project([k for k in self.degrees if k % 2])

    def degree_norms(self, metric=None):
        """L2(M) norm of each coefficient field (area weight exp(2 lam) if metric given)."""
        dens = None if metric is None else np.exp(2 * metric.lam(self.grid.x1, self.grid.x2))
        a = np.abs(self.coeffs) ** 2
        return np.sqrt(np.sum(self.grid.integrate(a, dens), axis=-1))

    def norm(self, metric=None):
        """L2(SM) norm, 2 pi sum_k ||u_k||^2 under the square root."""
        return float(np.sqrt(2 * np.pi * np.sum(self.degree_norms(metric) ** 2)))

    def sup(self):
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def support(self, tol=1e-10):
        """Degrees whose coefficient exceeds ``tol`` times the largest one."""
        m = np.max(np.abs(self.coeffs), axis=(1, 2, 3))
        top = m.max(initial=0.0)
        return [int(k) for k, v in zip(self.degrees, m) if v > tol * top and top > 0]

    # synthesis and evaluation -------------------------------------------------------

    def synthesize(self, Q):
        """Samples on theta_q = 2 pi q / Q, shape (n, n_r, n_phi, Q)."""
        th = 2 * np.pi * np.arange(Q) / Q
        E = np.exp(1j * np.outer(self.degrees, th))
        return np.einsum("kcij,kq->cijq", self.coeffs, E)

    def evaluator(self, tol=0.0):
        """Callable ``(x1, x2, theta) -> (..., n)`` using spline interpolants per degree."""
        mags = np.max(np.abs(self.coeffs), axis=(1, 2, 3))
        keep = np.nonzero(mags > tol * max(mags.max(initial=0.0), 1e-300))[0]
        if keep.size == 0:
            n = self.n
            return lambda x1, x2, th: np.zeros(np.shape(x1) + (n,), dtype=complex)
        ks = self.degrees[keep]
        interp = self.grid.interpolant(self.coeffs[keep])

        def f(x1, x2, theta):
            v = interp(x1, x2)  # (..., K, n)
            e = np.exp(1j * np.asarray(theta)[..., None] * ks)
            return np.einsum("...kc,...k->...c", v, e)

        return f


class FiberCalculus:
    """Frame operators and Hilbert transforms for a metric and connection on a grid."""

    def __init__(self, grid, metric, connection=None, max_degree=None):
        from .connection import ExteriorCalculus

        self.grid = grid
        self.metric = metric
        self.ext = ExteriorCalculus(grid, metric, connection)
        self.n = self.ext.n
        self.lam = self.ext.lam
        self.el = np.exp(-self.lam)
        l1, l2 = grid.gradient(self.lam)
        self.lz = 0.5 * (l1 - 1j * l2)
        self.lzb = 0.5 * (l1 + 1j * l2)
        A1, A2 = self.ext.A
        # restriction of A to SM: e^{-lam}(A1 cos + A2 sin) = A_{+1} e^{i th} + A_{-1} e^{-i th}
        self.A_plus = 0.5 * self.el * (A1 - 1j * A2)
        self.A_minus = 0.5 * self.el * (A1 + 1j * A2)
        # *A = -A2 dx1 + A1 dx2
        self.sA_plus = 0.5 * self.el * (-A2 - 1j * A1)
        self.sA_minus = 0.5 * self.el * (-A2 + 1j * A1)
        self.max_degree = max_degree

    # helpers
    def _dz(self, f):
        g1, g2 = self.grid.gradient(f)
        return 0.5 * (g1 - 1j * g2), 0.5 * (g1 + 1j * g2)

    def _grow(self, u):
        N = u.N + 1
        if self.max_degree is not None and N > self.max_degree:
            warnings.warn(f"fibre degree {N} exceeds the truncation {self.max_degree}",
                          RuntimeWarning, stacklevel=3)
        return N

    @staticmethod
    def _matmul(M, c):
        return np.einsum("ab...,kb...->ka...", M, c)

    # vertical and horizontal operators ------------------------------------------------

    def V(self, u):
        return FiberFunction(u.grid, 1j * u.degrees[:, None, None, None] * u.coeffs)

    def eta_plus(self, u):
        N = self._grow(u)
        out = FiberFunction.zeros(u.grid, N, u.n)
        dz, _ = self._dz(u.coeffs)
        ks = u.degrees[:, None, None, None]
        out.coeffs[2:] = self.el * (dz - ks * self.lz * u.coeffs)
        return out

    def eta_minus(self, u):
        N = self._grow(u)
        out = FiberFunction.zeros(u.grid, N, u.n)
        _, dzb = self._dz(u.coeffs)
        ks = u.degrees[:, None, None, None]
        out.coeffs[:-2] = self.el * (dzb + ks * self.lzb * u.coeffs)
        return out

    def X(self, u):
        return self.eta_plus(u) + self.eta_minus(u)

    def Xperp(self, u):
        return 1j * (self.eta_minus(u) - self.eta_plus(u))

    def mult_A(self, u, star=False):
        """Multiplication by A (or *A) restricted to SM."""
        Ap, Am = (self.sA_plus, self.sA_minus) if star else (self.A_plus, self.A_minus)
        return self.mult_plus(u, Ap) + self.mult_minus(u, Am)

    def mult_plus(self, u, Ap=None):
        Ap = self.A_plus if Ap is None else Ap
        out = FiberFunction.zeros(u.grid, u.N + 1, u.n)
        out.coeffs[2:] = self._matmul(Ap, u.coeffs)
        return out

    def mult_minus(self, u, Am=None):
        Am = self.A_minus if Am is None else Am
        out = FiberFunction.zeros(u.grid, u.N + 1, u.n)
        out.coeffs[:-2] = self._matmul(Am, u.coeffs)
        return out

    def mu_plus(self, u):
        return self.eta_plus(u) + self.mult_plus(u)

    def mu_minus(self, u):
        return self.eta_minus(u) + self.mult_minus(u)

    def XA(self, u):
        """(X + A) u."""
        return self.X(u) + self.mult_A(u)

    # physical-space application -----------------------------------------------------

    def _physical(self, u, perp, Q=None):
        N = u.N + 1
        Q = Q or 4 * N + 4
        vals = u.synthesize(Q)  # (n, r, p, Q)
        th = 2 * np.pi * np.arange(Q) / Q
        c, s = np.cos(th), np.sin(th)
        g1, g2 = self.grid.gradient(np.moveaxis(vals, -1, 0))
        g1 = np.moveaxis(g1, 0, -1)
        g2 = np.moveaxis(g2, 0, -1)
        dth = self.V(u).synthesize(Q)
        l1, l2 = self.grid.gradient(self.lam)
        el = self.el[..., None]
        if perp:
            out = el * (s * g1 - c * g2 + (l1[..., None] * c + l2[..., None] * s) * dth)
        else:
            out = el * (c * g1 + s * g2 + (-l1[..., None] * s + l2[..., None] * c) * dth)
        return FiberFunction.from_samples(self.grid, out, N)

    def X_physical(self, u, Q=None):
        """X applied in (x, theta) space: synthesize, differentiate, analyse."""
        return self._physical(u, False, Q)

    def Xperp_physical(self, u, Q=None):
        return self._physical(u, True, Q)

    # Hilbert transforms ------------------------------------------------------------

    @staticmethod
    def hilbert(u):
        """H u_k = -i sgn(k) u_k."""
        return FiberFunction(u.grid, -1j * np.sign(u.degrees)[:, None, None, None] * u.coeffs)

    def hilbert_even(self, u):
        return self.hilbert(u.even())

    def hilbert_odd(self, u):
        return self.hilbert(u.odd())

    # identities ------------------------------------------------------------------

    def bracket_sides(self, u, physical=True):
        """Both sides of [H, X + A] u = (X_perp + *A)(u_0) + {(X_perp + *A) u}_0."""
        Xf = self.X_physical if physical else self.X
        Xp = self.Xperp_physical if physical else self.Xperp
        H = self.hilbert

        def XA(v):
            return Xf(v) + self.mult_A(v)

        def XpsA(v):
            return Xp(v) + self.mult_A(v, star=True)

        lhs = H(XA(u)) - XA(H(u))
        u0 = u.project([0])
        rhs = XpsA(u0) + XpsA(u).project([0])
        return lhs, rhs

    def bracket_residual(self, u, physical=True):
        """Relative sup-norm residual of the bracket identity."""
        lhs, rhs = self.bracket_sides(u, physical)
        d = lhs - rhs
        return d.sup() / max(lhs.sup(), rhs.sup(), 1e-300)

    def star_dA_via_mu(self, beta):
        """*d_A beta = 2i (mu_-(beta_1) - mu_+(beta_{-1})) for a grid 1-form."""
        cm, cp = self.ext.sm_coefficients(beta)
        b1 = FiberFunction.from_degree(self.grid, 1, cp)
        bm = FiberFunction.from_degree(self.grid, -1, cm)
        out = 2j * (self.mu_minus(b1) - self.mu_plus(bm))
        return out[0]

    def divergence_via_mu(self, beta):
        """mu_+(beta_{-1}) + mu_-(beta_1); vanishes iff d_A * beta = 0."""
        cm, cp = self.ext.sm_coefficients(beta)
        b1 = FiberFunction.from_degree(self.grid, 1, cp)
        bm = FiberFunction.from_degree(self.grid, -1, cm)
        return (self.mu_plus(bm) + self.mu_minus(b1))[0]

    def structure_residuals(self, u):
        """Residuals of [X,V] = X_perp, [V,X_perp] = X, [X,X_perp] = -K V (relative)."""
        K = self.metric.gaussian_curvature(self.grid.x1, self.grid.x2)
        X, Xp, V = self.X, self.Xperp, self.V
        r1 = X(V(u)) - V(X(u)) - Xp(u)
        r2 = V(Xp(u)) - Xp(V(u)) - X(u)
        KV = FiberFunction(u.grid, K * V(u).coeffs)
        r3 = X(Xp(u)) - Xp(X(u)) + KV
        scale = max(X(u).sup(), Xp(u).sup(), 1e-300)
        return r1.sup() / scale, r2.sup() / scale, r3.sup() / max(KV.sup(), scale)
