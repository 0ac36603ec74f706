"""Connection Hodge theory on the disk: A-harmonic 1-forms, decomposition, potentials.

All operators are assembled as dense matrices on the polar collocation grid.
Fields are flattened component-major: a section of C^n is a vector of length
n * grid.size, a 1-form stacks its dx1 and dx2 parts. The L2 pairings carry the
metric weights (e^{2 lambda} on sections, e^{-2 lambda} on 2-form coefficients,
none on 1-forms).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .connection import ExteriorCalculus, ZeroConnection

__all__ = ["HodgeSolver", "HarmonicSpace", "Decomposition", "SolenoidalPotential",
           "IndeterminateDimensionError"]


class IndeterminateDimensionError(RuntimeError):
    """The singular values show no clean gap around the kernel threshold."""


@dataclass
class HarmonicSpace:
    dimension: int
    basis: np.ndarray  # (d, 2, n, n_r, n_phi), L2-orthonormal
    singular_values: np.ndarray  # smallest few, relative to the largest
    threshold: float

    def as_dict(self):
        return {"dimension": self.dimension,
                "smallest_relative_singular_values": [float(s) for s in self.singular_values],
                "threshold": self.threshold}


@dataclass
class Decomposition:
    p: np.ndarray
    a: np.ndarray
    eta: np.ndarray
    eta_coeffs: np.ndarray
    residual: float
    boundary_p: float


@dataclass
class SolenoidalPotential:
    beta: np.ndarray
    curl_residual: float
    divergence_residual: float
    meta: dict = field(default_factory=dict)


class HodgeSolver:
    """Dense discretization of d_A, d_A^* and the relative boundary condition.

    Parameters
    ----------
    grid : DiskGrid
    metric : ConformalMetric
    connection : Connection or ndarray, optional
    n : int
        Fibre dimension when no connection is given.
    """

    def __init__(self, grid, metric, connection=None, n=1):
        self.grid = grid
        self.metric = metric
        self.ext = ExteriorCalculus(grid, metric, connection if connection is not None
                                    else ZeroConnection(n))
        self.n = self.ext.n
        N = grid.size
        self.N = N
        D1, D2 = grid.derivative_matrices()
        I = np.eye(self.n)
        A1 = self._block(self.ext.A[0])
        A2 = self._block(self.ext.A[1])
        K1 = np.kron(I, D1) + A1
        K2 = np.kron(I, D2) + A2
        lam = np.tile(self.ext.lam.ravel(), self.n)
        e2 = np.exp(2 * lam)
        # section -> 1-form, 1-form -> 2-form coefficient
        self.d0 = np.vstack([K1, K2])
        self.d1 = np.hstack([-K2, K1])
        self.star1 = np.block([[np.zeros((self.n * N,) * 2), -np.eye(self.n * N)],
                               [np.eye(self.n * N), np.zeros((self.n * N,) * 2)]])
        self.codiff1 = -(self.d1 @ self.star1) / e2[:, None]
        self.codiff2 = -self.star1 @ (self.d0 / e2[None, :])
        w = np.tile(np.abs(grid.weights).ravel(), self.n)
        self.sw0 = np.sqrt(w * e2)
        self.sw1 = np.sqrt(np.concatenate([w, w]))
        self.sw2 = np.sqrt(w / e2)
        b = np.tile(grid.boundary_mask.ravel(), self.n)
        self.bidx = np.flatnonzero(b)
        self.iidx = np.flatnonzero(~b)
        self._harm = {}

    def _block(self, Aj):
        n, N = self.n, self.N
        out = np.zeros((n * N, n * N), dtype=complex)
        for a in range(n):
            for b in range(n):
                out[a * N:(a + 1) * N, b * N:(b + 1) * N] = np.diag(Aj[a, b].ravel())
        return out

    # reshaping helpers
    def _sec(self, v):
        return v.reshape((self.n,) + self.grid.shape)

    def _one(self, v):
        return v.reshape((2, self.n) + self.grid.shape)

    def tangential_rows(self):
        """Rows of j^* (tangential trace) acting on flattened 1-forms."""
        nb = self.bidx.size
        ph = np.tile(self.grid.PHI.ravel(), self.n)[self.bidx]
        T = np.zeros((nb, 2 * self.n * self.N))
        T[np.arange(nb), self.bidx] = -np.sin(ph)
        T[np.arange(nb), self.n * self.N + self.bidx] = np.cos(ph)
        return T * self.grid.radius

    def _band_limited_basis(self, blocks=None):
        # columns spanning fields with |k| <= n_phi/2 - 2 on every ring
        P = self.grid.n_phi
        k = np.arange(-(P // 2) + 2, P // 2 - 1)
        F = np.exp(1j * np.outer(self.grid.phi, k)) / np.sqrt(P)
        blocks = 2 * self.n if blocks is None else blocks
        return np.kron(np.eye(blocks * self.grid.n_r), F)

    # harmonic space ---------------------------------------------------------

    def harmonic_space(self, tau=1e-7, gap=10.0, n_report=6):
        """Kernel of (d_A, d_A^*, j^*) on 1-forms, via a weighted SVD."""
        key = (tau, gap)
        if key in self._harm:
            return self._harm[key]
        sb = np.sqrt(2 * np.pi * self.grid.radius / self.grid.n_phi)
        M = np.vstack([
            self.sw2[:, None] * (self.d1 / self.sw1[None, :]),
            self.sw0[:, None] * (self.codiff1 / self.sw1[None, :]),
            sb * (self.tangential_rows() / self.sw1[None, :]),
        ])
        # the top angular modes are not differentiated faithfully; leave them out
        Z = self._band_limited_basis()
        _, s, Vh = np.linalg.svd(M @ Z, full_matrices=False)
        rel = s / s[0]
        thr = tau
        small = rel < thr
        if np.any((rel > thr / gap) & (rel < thr * gap)):
            raise IndeterminateDimensionError(
                f"singular values within a factor {gap} of the kernel threshold")
        d = int(small.sum())
        V = (Z @ np.conj(Vh[small]).T).T / self.sw1[None, :]
        basis = np.array([self._one(v) for v in V])
        if d:
            G = np.array([[self.ext.inner1(bi, bj) for bj in basis] for bi in basis])
            L = np.linalg.cholesky(G)
            basis = np.einsum("ij,j...->i...", np.linalg.inv(L), basis)
        out = HarmonicSpace(d, basis, np.sort(rel)[:n_report], thr)
        self._harm[key] = out
        return out

    # decomposition -------------------------------------------------------------

    def decompose(self, alpha, harmonic=None):
        """alpha = d_A p + *d_A a + eta with p = 0 on the boundary and eta A-harmonic."""
        alpha = np.asarray(alpha, dtype=complex)
        H = harmonic if harmonic is not None else self.harmonic_space()
        coeffs = np.array([self.ext.inner1(alpha, e) for e in H.basis])
        eta = (np.einsum("i,i...->...", coeffs, H.basis) if H.dimension
               else np.zeros_like(alpha))
        beta = (alpha - eta).ravel()
        nN = self.n * self.N
        # unknowns (u0, u2); u2 is a 2-form coefficient
        top = np.hstack([self.d0, self.codiff2])
        top = self.sw1[:, None] * top
        bc = np.zeros((self.bidx.size, 2 * nN))
        bc[np.arange(self.bidx.size), self.bidx] = 1.0
        scale = np.abs(top).max()
        Mtx = np.vstack([top, scale * bc])
        rhs = np.concatenate([self.sw1 * beta, np.zeros(self.bidx.size)])
        Z = self._band_limited_basis()
        sol, *_ = sla.lstsq(Mtx @ Z, rhs, lapack_driver="gelsd")
        sol = Z @ sol
        u0 = self._sec(sol[:nN])
        u2 = self._sec(sol[nN:])
        p = u0
        a = -self.ext.star2(u2)
        rec = self.ext.d0(p) + self.ext.star1(self.ext.d0(a)) + eta
        res = self.ext.norm1(rec - alpha) / max(self.ext.norm1(alpha), 1e-300)
        return Decomposition(p, a, eta, coeffs, float(res), float(np.abs(p[:, 0]).max()))

    # solenoidal potential --------------------------------------------------------

    def solenoidal_potential(self, b):
        """beta with *d_A beta = b and d_A * beta = 0.

        beta = -*(d_A u0 + d_A^* u2) where u0 and u2 vanish on the boundary and
        d_A^*(d_A u0 + d_A^* u2) = b, d_A(d_A u0 + d_A^* u2) = 0.
        """
        b = np.asarray(b, dtype=complex)
        nN = self.n * self.N
        G = np.hstack([self.d0, self.codiff2])  # (u0, u2) -> gamma
        rows0 = self.codiff1 @ G
        rows2 = self.d1 @ G
        Mtx = np.vstack([rows0, rows2])
        rhs = np.concatenate([b.ravel(), np.zeros(nN)])
        bc_rows = np.concatenate([self.bidx, nN + self.bidx])
        Mtx[bc_rows] = 0.0
        Mtx[bc_rows, bc_rows] = np.abs(Mtx).max()
        rhs[bc_rows] = 0.0
        Z = self._band_limited_basis()
        sol, *_ = sla.lstsq(Mtx @ Z, rhs, lapack_driver="gelsd")
        sol = Z @ sol
        gamma = self._one(G @ sol)
        beta = -self.ext.star1(gamma)
        nb = max(self.ext.norm0(b), 1e-300)
        curl = self.ext.norm0(self.ext.star_d1(beta) - b) / nb
        div = self.ext.norm0(self.ext.star2(self.ext.d1(self.ext.star1(beta)))) / nb
        return SolenoidalPotential(beta, float(curl), float(div),
                                   {"unknowns": 2 * nN})

    # laplacian ------------------------------------------------------------------------

    def laplacian(self, u0=None, u1=None, u2=None):
        """-Delta_A = d_A^* d_A + d_A d_A^* degree by degree."""
        out = []
        if u0 is not None:
            out.append(self.ext.laplacian0(u0))
        if u1 is not None:
            out.append(self.ext.laplacian1(u1))
        if u2 is not None:
            out.append(self.ext.laplacian2(u2))
        return out
