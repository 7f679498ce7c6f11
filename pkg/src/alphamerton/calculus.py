"""Drift-correction dictionary between stochastic-integral conventions.

A scalar ``alpha`` in [0, 1] labels where the integrand of a stochastic
integral is evaluated inside each time step: ``alpha = 0`` is the Ito
convention, ``alpha = 1/2`` Stratonovich, ``alpha = 1`` Klimontovich.
Rewriting an SDE

    dX = b(X) dt + Sigma(X) o_alpha dW

under another convention ``gamma`` leaves the diffusion untouched and shifts
the drift by ``(alpha - gamma) * c(x)`` with the correction vector

    c_i(x) = sum_{k,j} Sigma_jk(x) * d Sigma_ik / d x_j (x).

This module implements the correction vector, the generic conversion, the
closed forms for diagonal-multiplicative and factor-driven coefficients, and
the reduction of correlated drivers to independent ones via a matrix factor.

All coefficient callables follow a batch contract: the last axis of the
input indexes the state dimension and any leading axes broadcast, so a drift
maps ``(..., d) -> (..., d)`` and a diffusion ``(..., d) -> (..., d, m)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, ParameterError

__all__ = [
    "Interpretation",
    "ITO",
    "STRATONOVICH",
    "KLIMONTOVICH",
    "as_interpretation",
    "ScalarFn",
    "as_scalar_fn",
    "CoefficientField",
    "scalar_field",
    "gbm_field",
    "CorrelationMatrix",
    "correction_vector",
    "convert",
    "ito_drift_diagonal_multiplicative",
    "effective_drift_factor",
    "reduce_correlated_noise",
]

# Central-difference step for auto-generated derivatives: max(ABS_STEP, REL_STEP*|x|).
_FD_STEP = 1e-6


@dataclass(frozen=True)
class Interpretation:
    """Stochastic-integral convention, parameterized by ``alpha`` in [0, 1]."""

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not np.isfinite(a) or not (0.0 <= a <= 1.0):
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


ITO = Interpretation(0.0)
STRATONOVICH = Interpretation(0.5)
KLIMONTOVICH = Interpretation(1.0)


def as_interpretation(value: "Interpretation | float") -> Interpretation:
    """Coerce a bare float to an :class:`Interpretation`."""
    if isinstance(value, Interpretation):
        return value
    return Interpretation(float(value))


@dataclass(frozen=True)
class ScalarFn:
    """Scalar coefficient function with derivative access.

    When no analytic derivative is supplied, ``deriv`` falls back to central
    differences with step ``max(1e-6, 1e-6 * |x|)``.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    deriv_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        return self.fn(x)

    def deriv(self, x):
        if self.deriv_fn is not None:
            return self.deriv_fn(x)
        x = np.asarray(x, dtype=float)
        h = np.maximum(_FD_STEP, _FD_STEP * np.abs(x))
        return (np.asarray(self.fn(x + h), dtype=float)
                - np.asarray(self.fn(x - h), dtype=float)) / (2.0 * h)


def as_scalar_fn(f) -> ScalarFn:
    if isinstance(f, ScalarFn):
        return f
    if callable(f):
        return ScalarFn(f)
    raise ParameterError(f"expected a callable coefficient, got {type(f).__name__}")


def _fd_diffusion_jacobian(diffusion, x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of a diffusion, shape (..., d, m, d)."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    cols = []
    for j in range(d):
        h = np.maximum(_FD_STEP, _FD_STEP * np.abs(x[..., j]))
        xp = x.copy()
        xm = x.copy()
        xp[..., j] += h
        xm[..., j] -= h
        delta = np.asarray(diffusion(xp), dtype=float) - np.asarray(diffusion(xm), dtype=float)
        cols.append(delta / (2.0 * h)[..., None, None])
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class CoefficientField:
    """Drift and diffusion of a d-dimensional SDE driven by m noise channels.

    ``drift(x)`` returns shape ``(..., d)``, ``diffusion(x)`` shape
    ``(..., d, m)``.  ``diffusion_jacobian(x)`` returns the per-state
    derivative tensor ``(..., d, m, d)`` with entry ``[i, k, j] = d
    Sigma_ik / d x_j``; leave it ``None`` to use central differences.
    """

    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    diffusion_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def drift_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        b = np.asarray(self.drift(x), dtype=float)
        if b.shape != x.shape:
            raise DimensionError(
                f"drift returned shape {b.shape}, expected {x.shape} along the state axis (d={x.shape[-1]})"
            )
        return b

    def diffusion_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        sig = np.asarray(self.diffusion(x), dtype=float)
        d = x.shape[-1]
        if sig.ndim != x.ndim + 1 or sig.shape[:-2] != x.shape[:-1] or sig.shape[-2] != d:
            raise DimensionError(
                f"diffusion returned shape {sig.shape}, expected (..., {d}, m) for state shape {x.shape}"
            )
        return sig

    def jacobian_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        if self.diffusion_jacobian is None:
            jac = _fd_diffusion_jacobian(self.diffusion, x)
        else:
            jac = np.asarray(self.diffusion_jacobian(x), dtype=float)
        if jac.shape[-1] != d or jac.shape[-3] != d or jac.ndim != x.ndim + 2:
            raise DimensionError(
                f"diffusion jacobian has shape {jac.shape}, expected (..., {d}, m, {d}) for state shape {x.shape}"
            )
        return jac


def scalar_field(b, s, ds=None) -> CoefficientField:
    """Wrap scalar callables into a d = m = 1 :class:`CoefficientField`.

    ``b``, ``s`` and the optional derivative ``ds`` map arrays elementwise.
    """
    b = as_scalar_fn(b)
    s = as_scalar_fn(s)

    def drift(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(b(x[..., 0]), dtype=float)[..., None]

    def diffusion(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(s(x[..., 0]), dtype=float)[..., None, None]

    jac = None
    if ds is not None:
        ds_fn = as_scalar_fn(ds)

        def jac(x):
            x = np.asarray(x, dtype=float)
            return np.asarray(ds_fn(x[..., 0]), dtype=float)[..., None, None, None]

    return CoefficientField(drift, diffusion, jac)


def gbm_field(mu: float, sigma: float) -> CoefficientField:
    """Geometric Brownian motion coefficients b(x) = mu*x, Sigma(x) = sigma*x."""
    return scalar_field(lambda x: mu * x, lambda x: sigma * x, ds=lambda x: sigma * np.ones_like(x))


class CorrelationMatrix:
    """Unit-diagonal PSD correlation matrix together with a factor C, C @ C.T = R.

    A Cholesky factor is used when R is positive definite; a semidefinite R
    (for example a two-driver correlation of +-1) is accepted through an
    eigenvalue factorization with pivot tolerance 1e-12.
    """

    _RECONSTRUCT_TOL = 1e-12

    def __init__(self, R) -> None:
        R = np.array(R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise DimensionError(f"correlation matrix must be square, got shape {R.shape}")
        if not np.array_equal(R, R.T):
            raise ParameterError("correlation matrix must be symmetric")
        if not np.all(np.diagonal(R) == 1.0):
            raise ParameterError("correlation matrix must have unit diagonal")
        try:
            C = np.linalg.cholesky(R)
        except np.linalg.LinAlgError:
            w, U = np.linalg.eigh(R)
            if np.min(w) < -self._RECONSTRUCT_TOL:
                raise ParameterError(
                    f"correlation matrix is not positive semidefinite (min eigenvalue {np.min(w):.3e})"
                ) from None
            C = U * np.sqrt(np.clip(w, 0.0, None))
        if np.max(np.abs(C @ C.T - R)) > self._RECONSTRUCT_TOL:
            raise ParameterError("factorization failed to reconstruct R to 1e-12")
        R.flags.writeable = False
        C.flags.writeable = False
        self.R = R
        self.C = C

    @classmethod
    def from_rho(cls, rho: float) -> "CorrelationMatrix":
        """Two-driver correlation matrix [[1, rho], [rho, 1]]."""
        rho = float(rho)
        if not np.isfinite(rho) or abs(rho) > 1.0:
            raise ParameterError(f"correlation must lie in [-1, 1], got {rho!r}")
        return cls(np.array([[1.0, rho], [rho, 1.0]]))

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def __repr__(self) -> str:
        return f"CorrelationMatrix(m={self.m})"


def correction_vector(field: CoefficientField, x) -> np.ndarray:
    """Drift shift per unit of convention difference.

    c_i(x) = sum_{k,j} Sigma_jk(x) * d Sigma_ik / d x_j (x), returned with
    shape ``(..., d)``.
    """
    x = np.asarray(x, dtype=float)
    sig = field.diffusion_at(x)
    jac = field.jacobian_at(x)
    if jac.shape[-2] != sig.shape[-1]:
        raise DimensionError(
            f"jacobian noise axis has length {jac.shape[-2]}, diffusion has m={sig.shape[-1]}"
        )
    return np.einsum("...jk,...ikj->...i", sig, jac)


def convert(
    field: CoefficientField,
    from_interpretation: "Interpretation | float",
    to_interpretation: "Interpretation | float",
) -> CoefficientField:
    """Rewrite ``field`` from one integral convention to another.

    The diffusion (and its jacobian) are unchanged; the drift becomes
    ``b(x) + (alpha - gamma) * c(x)``.
    """
    a = as_interpretation(from_interpretation).alpha
    g = as_interpretation(to_interpretation).alpha
    shift = a - g
    if shift == 0.0:
        return field
    base = field.drift

    def shifted_drift(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(base(x), dtype=float) + shift * correction_vector(field, x)

    return CoefficientField(shifted_drift, field.diffusion, field.diffusion_jacobian)


def ito_drift_diagonal_multiplicative(mu, Gamma, alpha: "Interpretation | float") -> np.ndarray:
    """Ito drift of diagonal-multiplicative noise: mu + alpha * diag(Gamma @ Gamma.T).

    Covers price dynamics dS_i = S_i (mu_i dt + sum_k Gamma_ik o_alpha dW_k),
    whose correction vector at S is S_i * V_ii.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    if not np.all(np.isfinite(mu)):
        raise ParameterError("mu contains non-finite entries")
    if not np.all(np.isfinite(Gamma)):
        raise ParameterError("Gamma contains non-finite entries")
    if Gamma.shape[0] != mu.shape[0]:
        raise DimensionError(
            f"Gamma has {Gamma.shape[0]} rows but mu has length {mu.shape[0]} (asset axis)"
        )
    a = as_interpretation(alpha).alpha
    diag_v = np.sum(Gamma * Gamma, axis=1)
    return mu + a * diag_v


def effective_drift_factor(market, alpha: "Interpretation | float", x) -> np.ndarray:
    """Ito-form return drift of a factor-driven asset.

    mu_eff(x) = mu(x) + alpha * rho * sigma'(x) * nu(x), where the factor and
    return drivers have correlation rho.  ``market`` is any object exposing
    ``mu_fn``, ``sigma_fn``, ``nu_fn`` (with derivative access), ``rho_corr``
    and ``check_in_domain``.
    """
    a = as_interpretation(alpha).alpha
    market.check_in_domain(x)
    x = np.asarray(x, dtype=float)
    mu = np.asarray(market.mu_fn(x), dtype=float)
    return mu + a * market.rho_corr * np.asarray(market.sigma_fn.deriv(x), dtype=float) * np.asarray(
        market.nu_fn(x), dtype=float
    )


def reduce_correlated_noise(G, corr: CorrelationMatrix) -> np.ndarray:
    """Rewrite a loading on correlated drivers as a loading on independent ones.

    With drivers W = C B for independent B, the integral of G dW equals the
    integral of (G C) dB, so the reduced loading is G @ C and the quadratic
    variation G R G.T is preserved.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if G.shape[-1] != corr.m:
        raise DimensionError(
            f"loading has {G.shape[-1]} noise columns but the correlation matrix is {corr.m}x{corr.m}"
        )
    return G @ corr.C
