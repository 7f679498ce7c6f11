"""Shared helpers for the test suite."""

import numpy as np

from alphamerton import CoefficientField, CorrelationMatrix, ScalarFn
from alphamerton.markets import FactorMarket


def make_smooth_field(rng, d, m, scale=0.5):
    """Random smooth coefficient field with an analytic diffusion jacobian.

    Sigma_ik(x) = A_ik + sum_j (B_ikj sin(x_j) + C_ikj x_j), so the jacobian
    is B_ikj cos(x_j) + C_ikj; the drift is affine.
    """
    A = rng.normal(0.0, scale, (d, m))
    B = rng.normal(0.0, scale, (d, m, d))
    C = rng.normal(0.0, scale, (d, m, d))
    P = rng.normal(0.0, scale, d)
    Q = rng.normal(0.0, scale, (d, d))

    def drift(x):
        return P + x @ Q.T

    def diffusion(x):
        x = np.asarray(x, dtype=float)
        return A + np.einsum("ikj,...j->...ik", B, np.sin(x)) + np.einsum("ikj,...j->...ik", C, x)

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        return B * np.cos(x)[..., None, None, :] + np.broadcast_to(C, x.shape[:-1] + (d, m, d))

    return CoefficientField(drift, diffusion, jacobian)


def make_factor_market(rho_corr=-0.6):
    """Smooth nontrivial factor market with analytic derivatives."""
    return FactorMarket(
        mu_fn=ScalarFn(lambda x: 0.05 + 0.02 * np.tanh(x),
                       lambda x: 0.02 / np.cosh(x) ** 2),
        sigma_fn=ScalarFn(lambda x: 0.3 + 0.1 * np.sin(x),
                          lambda x: 0.1 * np.cos(x)),
        b_fn=ScalarFn(lambda x: 0.4 * (1.0 - x),
                      lambda x: -0.4 * np.ones_like(np.asarray(x, dtype=float))),
        nu_fn=ScalarFn(lambda x: 0.2 + 0.05 * np.cos(x),
                       lambda x: -0.05 * np.sin(x)),
        rho_corr=rho_corr,
        r=0.03,
        domain=(-10.0, 10.0),
        x0=1.0,
    )


def make_return_factor_field(market, corr: CorrelationMatrix) -> CoefficientField:
    """Two-driver (cumulative return, factor) system after noise reduction.

    State z = (y, x) with dy = mu(x) dt + sigma(x) dW_S and the factor in the
    second coordinate; the correlated drivers are rewritten on independent
    ones via the factor C, so the diffusion is diag(sigma(x), nu(x)) @ C.
    """
    C = corr.C

    def drift(z):
        x = np.asarray(z, dtype=float)[..., 1]
        return np.stack(
            [np.asarray(market.mu_fn(x), dtype=float), np.asarray(market.b_fn(x), dtype=float)],
            axis=-1,
        )

    def diffusion(z):
        z = np.asarray(z, dtype=float)
        x = z[..., 1]
        G = np.zeros(z.shape[:-1] + (2, 2))
        G[..., 0, 0] = market.sigma_fn(x)
        G[..., 1, 1] = market.nu_fn(x)
        return G @ C

    def jacobian(z):
        z = np.asarray(z, dtype=float)
        x = z[..., 1]
        ds = np.asarray(market.sigma_fn.deriv(x), dtype=float)
        dn = np.asarray(market.nu_fn.deriv(x), dtype=float)
        J = np.zeros(z.shape[:-1] + (2, 2, 2))
        J[..., 0, 0, 1] = ds * C[0, 0]
        J[..., 0, 1, 1] = ds * C[0, 1]
        J[..., 1, 0, 1] = dn * C[1, 0]
        J[..., 1, 1, 1] = dn * C[1, 1]
        return J

    return CoefficientField(drift, diffusion, jacobian)


def fd_correction_oracle(field: CoefficientField, x, h=1e-6):
    """Correction vector c_i = sum_{k,j} Sigma_jk dSigma_ik/dx_j via test-side
    central differences of the diffusion."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    sig = np.asarray(field.diffusion(x), dtype=float)
    c = np.zeros(d)
    for j in range(d):
        step = max(h, h * abs(float(x[j])))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        dsig_j = (np.asarray(field.diffusion(xp), dtype=float)
                  - np.asarray(field.diffusion(xm), dtype=float)) / (2.0 * step)
        c += np.einsum("k,ik->i", sig[j, :], dsig_j)
    return c
