"""Validated market specifications and their Ito forms.

Three market families are supported: constant-volatility baskets of n risky
assets, a generic factor-driven single asset whose volatility is a function
of an autonomous scalar factor, and the Heston special case where the factor
is the instantaneous variance.  Construction only normalizes shapes; call
:func:`validate` (or any solver, which does it for you) to obtain the list
of violated constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .calculus import Interpretation, ScalarFn, as_interpretation, as_scalar_fn
from .errors import DimensionError, DomainError, ParameterError, ValidationError

__all__ = [
    "ConstantVolMarket",
    "FactorMarket",
    "HestonMarket",
    "CirParams",
    "FellerResult",
    "heston_ito_form",
    "feller_check",
    "validate",
    "require_valid",
]

_DOMAIN_GRID_SIZE = 1000


@dataclass(frozen=True)
class ConstantVolMarket:
    """n risky assets with constant drift vector mu and volatility loading Gamma.

    The per-asset covariance is V = Gamma @ Gamma.T; validation requires V to
    be positive definite.  ``r`` is the risk-free rate.
    """

    mu: np.ndarray
    Gamma: np.ndarray
    r: float

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        if mu.ndim != 1:
            raise DimensionError(f"mu must be a vector, got shape {mu.shape}")
        if Gamma.shape != (mu.shape[0], mu.shape[0]):
            raise DimensionError(
                f"Gamma must be square with one row per asset, got {Gamma.shape} for n={mu.shape[0]}"
            )
        mu.flags.writeable = False
        Gamma.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Gamma", Gamma)
        object.__setattr__(self, "r", float(self.r))

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        return self.Gamma @ self.Gamma.T

    def ito_drift(self, alpha: "Interpretation | float") -> np.ndarray:
        """Effective per-unit drift mu + alpha * diag(V) under convention alpha."""
        a = as_interpretation(alpha).alpha
        return self.mu + a * np.sum(self.Gamma * self.Gamma, axis=1)


@dataclass(frozen=True)
class FactorMarket:
    """Single risky asset with factor-driven drift and volatility.

    The return follows d S / S = mu(X) dt + sigma(X) o_alpha dW_S while the
    factor evolves autonomously as d X = b(X) dt + nu(X) o_alpha dW_X, with
    driver correlation ``rho_corr``.  Coefficients are scalar callables with
    derivative access (:class:`~alphamerton.calculus.ScalarFn`); the open
    interval ``domain`` bounds valid factor values, and ``x0`` is the initial
    factor level used by simulations.
    """

    mu_fn: ScalarFn
    sigma_fn: ScalarFn
    b_fn: ScalarFn
    nu_fn: ScalarFn
    rho_corr: float
    r: float
    domain: tuple
    x0: float

    def __post_init__(self) -> None:
        for name in ("mu_fn", "sigma_fn", "b_fn", "nu_fn"):
            object.__setattr__(self, name, as_scalar_fn(getattr(self, name)))
        lo, hi = self.domain
        object.__setattr__(self, "domain", (float(lo), float(hi)))
        object.__setattr__(self, "rho_corr", float(self.rho_corr))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "x0", float(self.x0))

    def check_in_domain(self, x) -> None:
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        if np.any(x <= lo) or np.any(x >= hi):
            raise DomainError(f"factor value outside the open domain ({lo}, {hi})")

    def validation_grid(self) -> np.ndarray:
        """Interior sample of the domain used for coefficient checks."""
        lo, hi = self.domain
        if math.isinf(lo) and math.isinf(hi):
            return np.linspace(-100.0, 100.0, _DOMAIN_GRID_SIZE)
        if math.isinf(hi):
            return lo + np.geomspace(1e-6, 100.0, _DOMAIN_GRID_SIZE)
        if math.isinf(lo):
            return hi - np.geomspace(1e-6, 100.0, _DOMAIN_GRID_SIZE)
        pad = (hi - lo) / (2 * _DOMAIN_GRID_SIZE)
        return np.linspace(lo + pad, hi - pad, _DOMAIN_GRID_SIZE)


@dataclass(frozen=True)
class HestonMarket:
    """Heston stochastic-volatility market.

    Variance follows the square-root diffusion d V = kappa (long_run_mean - V)
    dt + xi sqrt(V) o_alpha dW_X; the asset return has constant drift ``mu``
    and volatility sqrt(V), with return/variance driver correlation
    ``rho_corr``.  The long-run mean is named explicitly to avoid clashing
    with portfolio weights.
    """

    mu: float
    r: float
    kappa: float
    long_run_mean: float
    xi: float
    rho_corr: float
    v0: float

    def __post_init__(self) -> None:
        for name in ("mu", "r", "kappa", "long_run_mean", "xi", "rho_corr", "v0"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def as_factor_market(self) -> FactorMarket:
        """The equivalent factor market with x = v, sigma = sqrt(v), nu = xi*sqrt(v)."""
        mu, kappa, theta, xi = self.mu, self.kappa, self.long_run_mean, self.xi
        return FactorMarket(
            mu_fn=ScalarFn(lambda v: mu * np.ones_like(np.asarray(v, dtype=float)),
                           lambda v: np.zeros_like(np.asarray(v, dtype=float))),
            sigma_fn=ScalarFn(np.sqrt, lambda v: 0.5 / np.sqrt(v)),
            b_fn=ScalarFn(lambda v: kappa * (theta - v),
                          lambda v: -kappa * np.ones_like(np.asarray(v, dtype=float))),
            nu_fn=ScalarFn(lambda v: xi * np.sqrt(v), lambda v: 0.5 * xi / np.sqrt(v)),
            rho_corr=self.rho_corr,
            r=self.r,
            domain=(0.0, math.inf),
            x0=self.v0,
        )


@dataclass(frozen=True)
class CirParams:
    """Ito-form square-root variance process d V = kappa (theta_alpha - V) dt + xi sqrt(V) dW."""

    kappa: float
    theta_alpha: float
    xi: float

    def __post_init__(self) -> None:
        for name in ("kappa", "theta_alpha", "xi"):
            object.__setattr__(self, name, float(getattr(self, name)))


class FellerResult(NamedTuple):
    passed: bool
    margin: float


def heston_ito_form(market: HestonMarket, alpha: "Interpretation | float"):
    """Ito form of an alpha-interpreted Heston market.

    Returns the constant effective return drift mu + alpha * rho * xi / 2 and
    the variance-process parameters with shifted long-run mean
    theta + alpha * xi^2 / (2 kappa); the square-root structure is preserved.
    """
    require_valid(market)
    a = as_interpretation(alpha).alpha
    mu_eff = market.mu + a * market.rho_corr * market.xi / 2.0
    cir = CirParams(
        kappa=market.kappa,
        theta_alpha=market.long_run_mean + a * market.xi**2 / (2.0 * market.kappa),
        xi=market.xi,
    )
    return mu_eff, cir


def feller_check(cir: CirParams) -> FellerResult:
    """Whether 2 kappa theta_alpha >= xi^2, plus the signed margin."""
    require_valid(cir)
    margin = 2.0 * cir.kappa * cir.theta_alpha - cir.xi**2
    return FellerResult(passed=margin >= 0.0, margin=margin)


def _validate_constant_vol(market: ConstantVolMarket) -> list:
    violations = []
    if market.n < 1:
        violations.append("market must contain at least one asset")
    if not np.all(np.isfinite(market.mu)):
        violations.append("mu contains non-finite entries")
    if not np.all(np.isfinite(market.Gamma)):
        violations.append("Gamma contains non-finite entries")
    if not np.isfinite(market.r):
        violations.append("r is not finite")
    if not violations:
        try:
            np.linalg.cholesky(market.covariance)
        except np.linalg.LinAlgError:
            violations.append("V not positive definite")
    return violations


def _validate_factor(market: FactorMarket) -> list:
    violations = []
    if not np.isfinite(market.rho_corr) or abs(market.rho_corr) > 1.0:
        violations.append("rho_corr out of [-1, 1]")
    if not np.isfinite(market.r):
        violations.append("r is not finite")
    lo, hi = market.domain
    if not lo < hi:
        violations.append("domain is empty")
        return violations
    if not (lo < market.x0 < hi):
        violations.append("x0 outside the factor domain")
    grid = market.validation_grid()
    try:
        sigma = np.asarray(market.sigma_fn(grid), dtype=float)
        values = [sigma] + [
            np.asarray(fn(grid), dtype=float)
            for fn in (market.mu_fn, market.b_fn, market.nu_fn)
        ]
    except Exception as exc:  # noqa: BLE001 - report, never raise, from validation
        violations.append(f"coefficient evaluation failed on the validation grid: {exc}")
        return violations
    if np.any(sigma == 0.0) or np.any(sigma[:-1] * sigma[1:] < 0.0):
        violations.append("sigma_fn vanishes inside the domain")
    for name, vals in zip(("sigma_fn", "mu_fn", "b_fn", "nu_fn"), values):
        if not np.all(np.isfinite(vals)):
            violations.append(f"{name} is non-finite on the validation grid")
    return violations


def _validate_heston(market: HestonMarket) -> list:
    violations = []
    for name in ("kappa", "long_run_mean", "xi"):
        if not getattr(market, name) > 0.0:
            violations.append(f"{name} must be strictly positive")
    if not market.v0 > 0.0:
        violations.append("v0 must be strictly positive")
    if not np.isfinite(market.rho_corr) or abs(market.rho_corr) > 1.0:
        violations.append("rho_corr out of [-1, 1]")
    for name in ("mu", "r"):
        if not np.isfinite(getattr(market, name)):
            violations.append(f"{name} is not finite")
    return violations


def _validate_cir(cir: CirParams) -> list:
    return [
        f"{name} must be strictly positive"
        for name in ("kappa", "theta_alpha", "xi")
        if not getattr(cir, name) > 0.0
    ]


def validate(market) -> list:
    """Return the list of violated invariants; empty when the market is valid."""
    if isinstance(market, ConstantVolMarket):
        return _validate_constant_vol(market)
    if isinstance(market, FactorMarket):
        return _validate_factor(market)
    if isinstance(market, HestonMarket):
        return _validate_heston(market)
    if isinstance(market, CirParams):
        return _validate_cir(market)
    raise ParameterError(f"unknown market type {type(market).__name__}")


def require_valid(market) -> None:
    violations = validate(market)
    if violations:
        raise ValidationError(violations)
