"""Spectral polar grid on the closed disk and smooth test fields.

Fields on M are stored as samples on a polar collocation grid: Chebyshev-Lobatto
nodes in r (the "double cover" trick, r in [-R, R] with f(-r, phi) = f(r, phi+pi),
so no node sits at the origin) and equispaced nodes in phi. Derivatives are
spectral; fast arbitrary-point evaluation goes through a quintic spline fitted
to a uniform (r, phi) resampling of the spectral interpolant.

Array layout: the last two axes are (radial, angular); any leading axes are
components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.interpolate import RectBivariateSpline


def cheb(N):
    """Chebyshev-Lobatto differentiation matrix and nodes x_j = cos(pi j / N)."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


def _fourier_diff_matrix(P):
    """Periodic spectral first-derivative matrix on P equispaced nodes (P even)."""
    h = 2 * np.pi / P
    i = np.arange(P)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        D = 0.5 * (-1.0) ** d / np.tan(d * h / 2)
    D[d == 0] = 0.0
    return D


class DiskGrid:
    """Polar collocation grid on the disk of radius ``radius``.

    Parameters
    ----------
    n_r : int
        Number of radial nodes in (0, R]; node 0 is on the boundary.
    n_phi : int
        Number of angular nodes (even).
    radius : float
        Disk radius R.
    """

    def __init__(self, n_r=16, n_phi=32, radius=1.0, n_cart=None):
        if n_phi % 2:
            raise ValueError("n_phi must be even")
        if n_r < 2:
            raise ValueError("n_r must be at least 2")
        self.n_r = int(n_r)
        self.n_phi = int(n_phi)
        self.radius = float(radius)
        N = 2 * self.n_r - 1
        D, x = cheb(N)
        self._N = N
        self._x = x
        self._D1 = D[: self.n_r, : self.n_r] / self.radius
        self._D2 = D[: self.n_r, self.n_r :][:, ::-1] / self.radius
        self.r = self.radius * x[: self.n_r]
        self.phi = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.R, self.PHI = np.meshgrid(self.r, self.phi, indexing="ij")
        self.x1 = self.R * np.cos(self.PHI)
        self.x2 = self.R * np.sin(self.PHI)
        self._k = np.fft.fftfreq(self.n_phi, 1.0 / self.n_phi)
        self._kd = self._k.copy()
        self._kd[self.n_phi // 2] = 0.0
        self.weights = self._quadrature_weights()
        self.n_cart = n_cart or max(241, 6 * max(self.n_r, self.n_phi // 2) + 1)
        bw = np.ones(N + 1)
        bw[0] = bw[-1] = 0.5
        bw *= (-1.0) ** np.arange(N + 1)
        self._bary = bw

    @property
    def shape(self):
        return (self.n_r, self.n_phi)

    @property
    def size(self):
        return self.n_r * self.n_phi

    @property
    def boundary_mask(self):
        m = np.zeros(self.shape, dtype=bool)
        m[0] = True
        return m

    def _quadrature_weights(self):
        # the angular mean of a smooth function is a smooth function of rho = r^2
        M, R = self.n_r, self.radius
        t = 2 * self.r**2 / R**2 - 1
        V = np.polynomial.chebyshev.chebvander(t, M - 1).T
        l = np.arange(M)
        mom = np.where(l % 2 == 0, 2.0 / (1.0 - l**2 + (l % 2)), 0.0)
        # int_0^R G r dr = (R^2/4) int_{-1}^{1} G dt
        wr = np.linalg.solve(V, mom) * R**2 / 4
        return np.outer(wr, np.full(self.n_phi, 2 * np.pi / self.n_phi))

    def integrate(self, f, density=None):
        """Integral over the disk of ``f`` (last two axes) against dx1 dx2."""
        w = self.weights if density is None else self.weights * density
        return np.sum(f * w, axis=(-2, -1))

    # derivatives -------------------------------------------------------------

    def d_r(self, f):
        fs = np.roll(f, self.n_phi // 2, axis=-1)
        return np.einsum("ij,...jk->...ik", self._D1, f) + np.einsum("ij,...jk->...ik", self._D2, fs)

    def d_phi(self, f):
        fh = np.fft.fft(f, axis=-1)
        out = np.fft.ifft(1j * self._kd * fh, axis=-1)
        return out if np.iscomplexobj(f) else out.real

    def gradient(self, f):
        """Cartesian partial derivatives (d1 f, d2 f)."""
        fr = self.d_r(f)
        fp = self.d_phi(f)
        c, s = np.cos(self.PHI), np.sin(self.PHI)
        return c * fr - s / self.R * fp, s * fr + c / self.R * fp

    def d1(self, f):
        return self.gradient(f)[0]

    def d2(self, f):
        return self.gradient(f)[1]

    def laplacian(self, f):
        g1, g2 = self.gradient(f)
        return self.d1(g1) + self.d2(g2)

    def derivative_matrices(self):
        """Dense matrices (D1, D2) acting on grid vectors flattened in C order."""
        M, P = self.shape
        shift = np.roll(np.eye(P), P // 2, axis=0).T
        Dr = np.kron(self._D1, np.eye(P)) + np.kron(self._D2, shift)
        Dp = np.kron(np.eye(M), _fourier_diff_matrix(P))
        c = np.cos(self.PHI).ravel()
        s = np.sin(self.PHI).ravel()
        r = self.R.ravel()
        D1 = c[:, None] * Dr - (s / r)[:, None] * Dp
        D2 = s[:, None] * Dr + (c / r)[:, None] * Dp
        return D1, D2

    # sampling and interpolation ---------------------------------------------

    def sample(self, func):
        """Sample ``func(x1, x2)`` on the grid; trailing component axes move to the front."""
        v = np.asarray(func(self.x1, self.x2))
        if v.ndim > 2:
            v = np.moveaxis(v, (0, 1), (-2, -1))
        return v

    def evaluate(self, f, x1, x2):
        """Spectral interpolation of grid values ``f`` at arbitrary points."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        shp = x1.shape
        lead = f.shape[:-2]
        F = f.reshape((-1,) + self.shape)
        r = np.hypot(x1, x2).ravel()
        ph = np.arctan2(x2, x1).ravel()
        fh = np.fft.fft(F, axis=-1) / self.n_phi
        k = self._k.copy()
        E = np.exp(1j * np.outer(ph, k))
        if self.n_phi % 2 == 0:
            # symmetric treatment of the Nyquist mode
            E[:, self.n_phi // 2] = np.cos(self.n_phi // 2 * ph)
        sign = (-1.0) ** k
        # values along the diameter through angle ph at all N+1 Chebyshev nodes
        pos = np.einsum("pk,cik->cpi", E, fh)
        neg = np.einsum("pk,cik->cpi", E * sign, fh)
        line = np.concatenate([pos, neg[..., ::-1]], axis=-1)
        xs = self._x * self.radius
        diff = r[:, None] - xs[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        wts = self._bary / diff
        vals = np.einsum("cpj,pj->cp", line, wts) / wts.sum(axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            j = np.argmax(exact[hit], axis=1)
            vals[:, hit] = line[:, np.nonzero(hit)[0], j]
        if not np.iscomplexobj(f):
            vals = vals.real
        return vals.reshape(lead + shp)

    def interp_weights(self, x1, x2):
        """Weights W with ``evaluate(f, x) = sum W[..., i, j] f[i, j]``, shape x.shape + grid.shape."""
        x1 = np.asarray(x1, dtype=float)
        shp = x1.shape
        r = np.hypot(x1, x2).ravel()
        ph = np.arctan2(x2, x1).ravel()
        xs = self._x * self.radius
        diff = r[:, None] - xs[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        wts = self._bary / diff
        wts /= wts.sum(axis=1, keepdims=True)
        hit = exact.any(axis=1)
        wts[hit] = exact[hit].astype(float)
        M, P, N = self.n_r, self.n_phi, self._N
        bpos = wts[:, :M]
        bneg = wts[:, N - np.arange(M)]

        def dirichlet(t):
            t = (t + np.pi) % (2 * np.pi) - np.pi
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.sin(P * t / 2) / np.tan(t / 2) / P
            return np.where(np.abs(t) < 1e-14, 1.0, d)

        dp = dirichlet(ph[:, None] - self.phi[None, :])
        dn = dirichlet(ph[:, None] + np.pi - self.phi[None, :])
        W = bpos[:, :, None] * dp[:, None, :] + bneg[:, :, None] * dn[:, None, :]
        return W.reshape(shp + self.shape)

    def interpolant(self, f, pad=0.04):
        """Fast evaluator for grid values ``f`` (quintic spline on a polar resampling)."""
        return GridInterpolant(self, f, pad=pad)


class GridInterpolant:
    """Callable ``(x1, x2) -> values`` with trailing component axes.

    The spectral interpolant is resampled on a uniform (r, phi) rectangle
    [-L, L] x [-d, pi + d] using the diameter parametrization, so the spline
    sees a smooth function and no corner extrapolation is needed.
    """

    def __init__(self, grid, f, pad=0.04, n_samples=None):
        self.grid = grid
        L = grid.radius * (1 + pad)
        n = n_samples or grid.n_cart
        rs = np.linspace(-L, L, n)
        dphi = np.pi / (n - 7)
        ps = -3 * dphi + dphi * np.arange(n)
        Rr, Pp = np.meshgrid(rs, ps, indexing="ij")
        vals = grid.evaluate(f, Rr * np.cos(Pp), Rr * np.sin(Pp))
        self.lead = f.shape[:-2]
        self.complex = np.iscomplexobj(f)
        V = vals.reshape((-1, n, n))
        self._splines = []
        for v in V:
            re = RectBivariateSpline(rs, ps, v.real, kx=5, ky=5)
            im = RectBivariateSpline(rs, ps, v.imag, kx=5, ky=5) if self.complex else None
            self._splines.append((re, im))

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        shp = x1.shape
        a = x1.ravel()
        b = np.asarray(x2, dtype=float).ravel()
        r = np.hypot(a, b)
        ph = np.arctan2(b, a)
        neg = ph < 0
        r = np.where(neg, -r, r)
        ph = np.where(neg, ph + np.pi, ph)
        out = []
        for re, im in self._splines:
            v = re.ev(r, ph)
            if im is not None:
                v = v + 1j * im.ev(r, ph)
            out.append(v)
        return np.stack(out, axis=-1).reshape(shp + self.lead)


# smooth seeded test fields -----------------------------------------------------


@dataclass
class SmoothField:
    """Fourier-Bessel expansion sum_{k,j} c_{kj} J_|k|(z_{kj} r / R) e^{i k phi}.

    ``coeffs`` has shape (2K+1, J, n); ``zeros`` has shape (2K+1, J).
    Calling the field returns shape ``x.shape + (n,)``.
    """

    radius: float
    coeffs: np.ndarray
    zeros: np.ndarray
    real: bool = False
    K: int = field(init=False)

    def __post_init__(self):
        self.K = (self.coeffs.shape[0] - 1) // 2

    @property
    def n(self):
        return self.coeffs.shape[-1]

    def _basis(self, x1, x2, deriv=False):
        r = np.hypot(x1, x2)
        ph = np.arctan2(x2, x1)
        rs = np.where(r == 0, 1e-300, r)
        ks = np.arange(-self.K, self.K + 1)
        z = self.zeros / self.radius
        arg = r[..., None, None] * z
        order = np.abs(ks)[:, None] + 0 * z
        J = special.jv(order, arg)
        e = np.exp(1j * ks[:, None] * ph[..., None, None])
        if not deriv:
            return J * e
        Jp = special.jvp(order, arg) * z
        dr = Jp * e
        dp = 1j * ks[:, None] * J * e
        c = np.cos(ph)[..., None, None]
        s = np.sin(ph)[..., None, None]
        rr = rs[..., None, None]
        return c * dr - s / rr * dp, s * dr + c / rr * dp

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        v = np.einsum("...kj,kjn->...n", self._basis(x1, x2), self.coeffs)
        return v.real if self.real else v

    def grad(self, x1, x2):
        """Returns shape ``x.shape + (2, n)``."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        b1, b2 = self._basis(x1, x2, deriv=True)
        g = np.stack(
            [np.einsum("...kj,kjn->...n", b, self.coeffs) for b in (b1, b2)], axis=-2
        )
        return g.real if self.real else g


def random_smooth_field(rng, n=1, radius=1.0, K=3, J=3, vanish_on_boundary=False,
                        real=False, scale=1.0):
    """Seeded smooth field with coefficients decaying like (1 + k^2 + j^2)^-2.

    With ``vanish_on_boundary`` the radial profiles use Bessel zeros so the field
    vanishes on |x| = R; otherwise zeros of J' are used and a constant is included.
    """
    ks = np.arange(-K, K + 1)
    zeros = np.empty((2 * K + 1, J))
    for i, k in enumerate(ks):
        if vanish_on_boundary:
            zeros[i] = special.jn_zeros(abs(k), J)
        elif k == 0:
            zeros[i, 0] = 0.0
            zeros[i, 1:] = special.jnp_zeros(0, J - 1) if J > 1 else []
        else:
            zeros[i] = special.jnp_zeros(abs(k), J)
    jj = np.arange(1, J + 1)
    decay = (1.0 + ks[:, None] ** 2 + jj[None, :] ** 2) ** -2.0
    c = rng.standard_normal((2 * K + 1, J, n)) + 1j * rng.standard_normal((2 * K + 1, J, n))
    c *= decay[..., None] * scale * 4.0
    if real:
        # c_{-k} = conj(c_k) makes the expansion real
        c = 0.5 * (c + np.conj(c[::-1]))
    return SmoothField(radius=radius, coeffs=c, zeros=zeros, real=real)
