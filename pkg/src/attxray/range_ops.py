"""Adjoints, boundary projectors, factorization identities and range tests.

Everything here works on a :class:`~attxray.transport.TransportModel` and a
:class:`~attxray.transport.WitnessBasis`. Witnesses are coefficient vectors
over that basis, so every solve is a small dense least-squares problem.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .transport import WitnessBasis, inner_mu

__all__ = [
    "RangeTestReport",
    "tsvd_solve",
    "basis_key",
    "P_minus_columns",
    "P_plus_columns",
    "adjoint_duality",
    "factorization_check",
    "solve_adjoint0",
    "solve_adjoint1",
    "range_test_0form",
    "range_test_1form",
    "odd_noise",
    "mu_norm",
]


@dataclass
class RangeTestReport:
    method: str
    residual_abs: float
    residual_rel: float
    witness: np.ndarray | None = None
    harmonic_coeffs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def as_dict(self):
        d = asdict(self)
        d.pop("witness")
        if self.harmonic_coeffs is not None:
            d["harmonic_coeffs"] = [[float(c.real), float(c.imag)] for c in self.harmonic_coeffs]
        if self.witness is not None:
            d["witness_norm"] = float(np.linalg.norm(self.witness))
        return d


def tsvd_solve(M, y, rel=1e-6):
    """Least-squares solution of M x = y keeping singular values above rel * s_max."""
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    keep = s > rel * s[0] if s.size else s.astype(bool)
    coef = (np.conj(U[:, keep]).T @ y) / s[keep]
    x = np.conj(Vh[keep]).T @ coef
    return x, {"rank": int(keep.sum()), "columns": int(M.shape[1]),
               "sigma_max": float(s[0]) if s.size else 0.0,
               "sigma_min_kept": float(s[keep][-1]) if keep.any() else 0.0}


def basis_key(basis):
    return basis.key


def mu_norm(model, u):
    """sqrt(<u, u>_mu) for fan data (batched columns give one norm each)."""
    return np.sqrt(np.abs(inner_mu(model.fan, model.metric, u, u)))


def _mu_weights(model):
    return np.sqrt(model.fan.measure(model.metric))[..., None]


def _fan_matrix(model, cols):
    # (n_phi, n_a, n, C) -> rows weighted by sqrt(mu)
    W = _mu_weights(model)
    return (cols * W[..., None]).reshape(-1, cols.shape[-1])


def _fan_vector(model, u):
    return (u * _mu_weights(model)).ravel()


def P_minus_columns(model, basis):
    return model._cached(("P-",) + basis_key(basis), lambda: model.P_minus(basis))


def P_plus_columns(model, basis):
    return model._cached(("P+",) + basis_key(basis), lambda: model.P_plus(basis))


def _adjoint0_columns(model, basis):
    return model._cached(("I0*",) + basis_key(basis), lambda: model.adjoint_I0(basis))


def _adjoint1_columns(model, basis):
    return model._cached(("I1*",) + basis_key(basis), lambda: model.adjoint_I1(basis))


# duality and factorization ---------------------------------------------------------


def adjoint_duality(model, basis, f, beta):
    """Santalo duality defects for I^0 and I^1, relative to ||f|| ||w||.

    ``f`` is a grid section (n, n_r, n_phi), ``beta`` a grid 1-form.
    Returns the worst relative defect over the basis columns for each degree.
    """
    ext = model.ext
    W = basis(model.fan.PHI, model.fan.A)  # (n_phi, n_a, n, C)
    wn = mu_norm(model, W)
    out = {}
    for name, data, adj, norm, inner in (
        ("I0", model.I0(f), _adjoint0_columns(model, basis), ext.norm0(f), ext.inner0),
        ("I1", model.I1(beta), _adjoint1_columns(model, basis), ext.norm1(beta), ext.inner1),
    ):
        lhs = inner_mu(model.fan, model.metric, data[..., None], W)
        rhs = np.array([inner(f if name == "I0" else beta, adj[..., c, :, :])
                        for c in range(W.shape[-1])])
        out[name] = float(np.max(np.abs(lhs - rhs) / (norm * wn)))
    return out


def _rel_sup(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def factorization_check(model, basis):
    """Relative sup residuals of -2 pi P_- = I^0 *d_A (I^1)^* and -2 pi P_+ = I^1 *d_A (I^0)^*."""
    ext = model.ext
    lhs_m = -2 * np.pi * P_minus_columns(model, basis)
    rhs_m = model.I0(ext.star_d1(_adjoint1_columns(model, basis)))
    lhs_p = -2 * np.pi * P_plus_columns(model, basis)
    rhs_p = model.I1(ext.star1(ext.d0(_adjoint0_columns(model, basis))))
    return {
        "minus": _rel_sup(lhs_m, rhs_m),
        "plus": _rel_sup(lhs_p, rhs_p),
        "minus_l2": float(np.linalg.norm(lhs_m - rhs_m) / np.linalg.norm(rhs_m)),
        "plus_l2": float(np.linalg.norm(lhs_p - rhs_p) / np.linalg.norm(rhs_p)),
    }


# surjectivity solves ------------------------------------------------------------------


def _grid_rows(model, cols, degree):
    g = model.grid
    w = np.sqrt(np.abs(g.weights))
    if degree == 0:
        w = w * np.exp(model.ext.lam)
    C = cols.shape[-3]
    return np.moveaxis(cols * w, -3, -1).reshape(-1, C)


def solve_adjoint0(model, basis, b, rel=1e-6):
    """Least-squares w with I_{0,A}^* w = (w#)_0 = b; returns (coef, relative residual)."""
    cols = _adjoint0_columns(model, basis) / (2 * np.pi)
    M = _grid_rows(model, cols, 0)
    y = _grid_rows(model, np.asarray(b)[:, None], 0)[:, 0]
    x, info = tsvd_solve(M, y, rel)
    fit = np.einsum("ncij,c->nij", cols, x)
    res = model.ext.norm0(fit - b) / model.ext.norm0(b)
    return x, float(res), info


def solve_adjoint1(model, basis, beta, rel=1e-6):
    """Least-squares w with (I_A^1)^* w = beta."""
    cols = _adjoint1_columns(model, basis)
    M = _grid_rows(model, cols, 1)
    y = _grid_rows(model, np.asarray(beta)[:, :, None], 1)[:, 0]
    x, info = tsvd_solve(M, y, rel)
    fit = np.einsum("kncij,c->knij", cols, x)
    res = model.ext.norm1(fit - beta) / model.ext.norm1(beta)
    return x, float(res), info


# range tests ------------------------------------------------------------------------------


def range_test_0form(model, u, basis, b=None, hodge=None, rel=1e-6):
    """Membership of fan data u in the range of I_A^0.

    With ``b`` (and a HodgeSolver ``hodge`` on the model grid) a witness is
    synthesized: *d_A beta = b, (I^1)^* w = beta, and the reported residual is
    ||u + 2 pi P_- w|| / ||u||. Without ``b`` the witness is the least-squares
    minimizer of ||u + 2 pi P_- w||_mu over the basis.
    """
    u = np.asarray(u)
    Pm = P_minus_columns(model, basis)
    un = float(mu_norm(model, u))
    if un == 0.0:
        return RangeTestReport("blind" if b is None else "forward-identity", 0.0, 0.0,
                               np.zeros(basis.size, dtype=complex))
    meta = {"basis": basis.describe()}
    if b is not None:
        sp = hodge.solenoidal_potential(b)
        x, res1, info = solve_adjoint1(model, basis, sp.beta, rel)
        meta.update(curl_residual=sp.curl_residual, divergence_residual=sp.divergence_residual,
                    adjoint1_residual=res1, lstsq=info)
        method = "forward-identity"
    else:
        x, info = tsvd_solve(_fan_matrix(model, -2 * np.pi * Pm), _fan_vector(model, u), rel)
        meta.update(lstsq=info)
        method = "least-squares"
    r = u + 2 * np.pi * np.einsum("ijnc,c->ijn", Pm, x)
    ra = float(mu_norm(model, r))
    return RangeTestReport(method, ra, ra / un, x, None, meta)


def range_test_1form(model, u, basis, harmonic=None, rel=1e-6):
    """Least-squares fit u = P_+ w + sum_j c_j I^1(eta_j) over the basis and A-harmonic forms."""
    u = np.asarray(u)
    Pp = P_plus_columns(model, basis)
    cols = [Pp]
    d = 0
    if harmonic is not None and harmonic.dimension:
        d = harmonic.dimension
        H = model.I1(np.moveaxis(harmonic.basis, 0, 2))  # (n_phi, n_a, n, d)
        cols.append(H)
    M = _fan_matrix(model, np.concatenate(cols, axis=-1))
    x, info = tsvd_solve(M, _fan_vector(model, u), rel)
    fit = np.einsum("ijnc,c->ijn", np.concatenate(cols, axis=-1), x)
    un = float(mu_norm(model, u))
    ra = float(mu_norm(model, u - fit))
    return RangeTestReport("least-squares", ra, ra / un if un else 0.0, x[: Pp.shape[-1]],
                           x[Pp.shape[-1]:] if d else np.zeros(0, dtype=complex),
                           {"lstsq": info, "harmonic_dimension": d})


def odd_noise(model, rng, level, reference, J=4, L=4, sign=-1):
    """Smooth noise nu with nu(reversed ray) = sign * C_A nu, scaled to level * ||reference||_mu.

    Fan data of I_A^0 f satisfy u(reversed ray) = C_A u and data of I_A^1
    satisfy u(reversed ray) = -C_A u. The default sign = -1 gives noise off
    the range of I_A^0; use sign = +1 against I_A^1 data.
    """
    nb = WitnessBasis(model.n, J, L, model.fan.delta, 0.8)
    c = rng.standard_normal(nb.size) + 1j * rng.standard_normal(nb.size)
    c /= (1.0 + np.arange(nb.size) % nb.n_scalar) ** 0.5
    ex = model.fan_exit
    g_in = nb.combine(c, model.fan.PHI, model.fan.A)
    g_rev = nb.combine(c, ex["phi_out"], ex["a_out"])
    nu = g_in + sign * np.einsum("ijba,ijb->ija", np.conj(ex["C"]), g_rev)
    return nu * (level * float(mu_norm(model, reference)) / float(mu_norm(model, nu)))
