"""Closed-form log-utility consumption and portfolio rules.

For logarithmic utility the optimal consumption rate is always a fixed
fraction (the discount rate) of wealth, and the optimal risky weights are
myopic.  Under the noise convention ``alpha`` the single-asset weight is

    (mu - r) / sigma^2 + alpha,

the n-asset weights solve V theta = (mu + alpha diag(V)) - r 1, and in
factor-driven markets the weight acquires the state-dependent term
alpha * rho * sigma'(x) nu(x) / sigma(x)^2.  The value function is
J(a, t) = (beta0 + ln(a) / rho) * exp(-rho t); an HJB-residual evaluator
verifies each closed form and certifies strict suboptimality of perturbed
controls.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .calculus import Interpretation, as_interpretation
from .errors import DomainError, ParameterError, SolverError
from .markets import ConstantVolMarket, FactorMarket, HestonMarket, heston_ito_form, require_valid

__all__ = [
    "Policy",
    "LogValueFunction",
    "solve_single_asset",
    "solve_n_asset",
    "solve_factor",
    "solve_heston",
    "hjb_residual",
    "log_wealth_drift",
]

_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Policy:
    """Consumption fraction (per unit time) and risky-weight rule.

    ``risky_weights`` is either a constant vector or a callable mapping the
    factor value to a weight (elementwise over arrays).
    """

    consumption_fraction: float
    risky_weights: Union[np.ndarray, Callable]

    def __post_init__(self) -> None:
        frac = float(self.consumption_fraction)
        if not np.isfinite(frac) or frac <= 0.0:
            raise ParameterError(f"consumption_fraction must be positive, got {frac!r}")
        object.__setattr__(self, "consumption_fraction", frac)
        if not callable(self.risky_weights):
            w = np.atleast_1d(np.asarray(self.risky_weights, dtype=float))
            if not np.all(np.isfinite(w)):
                raise ParameterError("risky weights contain non-finite entries")
            w.flags.writeable = False
            object.__setattr__(self, "risky_weights", w)

    @property
    def is_state_dependent(self) -> bool:
        return callable(self.risky_weights)

    def weight_at(self, x):
        """Evaluate the risky-weight rule at factor value(s) x."""
        if self.is_state_dependent:
            return self.risky_weights(x)
        return self.risky_weights


@dataclass(frozen=True)
class LogValueFunction:
    """J(a, t) = (beta0 + ln(a) / rho) * exp(-rho t)."""

    beta0: float
    rho: float
    r: float

    def __post_init__(self) -> None:
        if not float(self.rho) > 0.0:
            raise ParameterError(f"discount rate must be positive, got {self.rho!r}")
        for name in ("beta0", "rho", "r"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def __call__(self, a, t):
        a = np.asarray(a, dtype=float)
        return (self.beta0 + np.log(a) / self.rho) * np.exp(-self.rho * np.asarray(t, dtype=float))

    def partial_a(self, a, t):
        return np.exp(-self.rho * np.asarray(t, dtype=float)) / (self.rho * np.asarray(a, dtype=float))

    def partial_aa(self, a, t):
        a = np.asarray(a, dtype=float)
        return -np.exp(-self.rho * np.asarray(t, dtype=float)) / (self.rho * a * a)

    def partial_t(self, a, t):
        return -self.rho * self(a, t)


def _beta0(excess: np.ndarray, theta: np.ndarray, r: float, rho: float) -> float:
    quad = float(excess @ theta)
    return (r / rho + np.log(rho) - 1.0) / rho + quad / (2.0 * rho**2)


def solve_single_asset(mu: float, sigma: float, r: float, rho_discount: float,
                       alpha: "Interpretation | float"):
    """Optimal policy and value for one risky asset under convention alpha.

    The weight is (mu - r) / sigma^2 + alpha and beta0 is the classical
    constant evaluated at the effective drift mu + alpha sigma^2.
    """
    if not sigma > 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma!r}")
    if not rho_discount > 0.0:
        raise ParameterError(f"rho_discount must be positive, got {rho_discount!r}")
    a = as_interpretation(alpha).alpha
    var = sigma * sigma
    weight = (mu - r) / var + a
    excess = np.array([mu + a * var - r])
    beta0 = _beta0(excess, np.array([weight]), r, rho_discount)
    policy = Policy(consumption_fraction=rho_discount, risky_weights=np.array([weight]))
    return policy, LogValueFunction(beta0=beta0, rho=rho_discount, r=r)


def solve_n_asset(market: ConstantVolMarket, rho_discount: float,
                  alpha: "Interpretation | float"):
    """Optimal policy and value for an n-asset constant-volatility market.

    Weights solve V theta = mu_ito - r 1 through the Cholesky factor of V;
    an explicit inverse is never formed, and a condition estimate >= 1e12
    raises instead of returning a silently inaccurate answer.
    """
    require_valid(market)
    if not rho_discount > 0.0:
        raise ParameterError(f"rho_discount must be positive, got {rho_discount!r}")
    V = market.covariance
    if market.n == 1:
        # Scalar closed form; keeps the weight shift in alpha exact.
        return solve_single_asset(float(market.mu[0]), float(np.sqrt(V[0, 0])),
                                  market.r, rho_discount, alpha)
    cond = np.linalg.cond(V)
    if not cond < _MAX_CONDITION:
        raise SolverError(f"covariance matrix too ill-conditioned to solve (cond ~ {cond:.3e})")
    excess = market.ito_drift(alpha) - market.r
    theta = cho_solve(cho_factor(V, lower=True), excess)
    beta0 = _beta0(excess, theta, market.r, rho_discount)
    policy = Policy(consumption_fraction=rho_discount, risky_weights=theta)
    return policy, LogValueFunction(beta0=beta0, rho=rho_discount, r=market.r)


def solve_factor(market: FactorMarket, rho_discount: float,
                 alpha: "Interpretation | float") -> Policy:
    """Optimal policy for a factor-driven market.

    The weight rule is the myopic demand at the current factor level plus the
    covariation correction:

        pi(x) = (mu(x) - r) / sigma(x)^2 + alpha rho sigma'(x) nu(x) / sigma(x)^2.

    No value function is produced; the factor model has no closed form for
    the factor-dependent component.
    """
    require_valid(market)
    if not rho_discount > 0.0:
        raise ParameterError(f"rho_discount must be positive, got {rho_discount!r}")
    a = as_interpretation(alpha).alpha
    mu_fn, sigma_fn, nu_fn = market.mu_fn, market.sigma_fn, market.nu_fn
    rho_corr, r = market.rho_corr, market.r

    def rule(x):
        market.check_in_domain(x)
        x = np.asarray(x, dtype=float)
        var = np.asarray(sigma_fn(x), dtype=float) ** 2
        myopic = (np.asarray(mu_fn(x), dtype=float) - r) / var
        correction = a * rho_corr * np.asarray(sigma_fn.deriv(x), dtype=float) * np.asarray(
            nu_fn(x), dtype=float
        ) / var
        return myopic + correction

    return Policy(consumption_fraction=rho_discount, risky_weights=rule)


def solve_heston(market: HestonMarket, rho_discount: float,
                 alpha: "Interpretation | float") -> Policy:
    """Optimal policy for the Heston market: pi(v) = (mu_eff - r) / v."""
    if not rho_discount > 0.0:
        raise ParameterError(f"rho_discount must be positive, got {rho_discount!r}")
    mu_eff, _ = heston_ito_form(market, alpha)
    r = market.r

    def rule(v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0.0):
            raise DomainError("variance must be strictly positive")
        return (mu_eff - r) / v

    return Policy(consumption_fraction=rho_discount, risky_weights=rule)


def _as_covariance(vol_or_cov, n: int) -> np.ndarray:
    arr = np.asarray(vol_or_cov, dtype=float)
    if arr.ndim == 0:
        if n != 1:
            raise ParameterError("scalar volatility given for a multi-asset policy")
        return np.array([[float(arr) ** 2]])
    if arr.ndim == 2 and arr.shape == (n, n):
        return arr
    raise ParameterError(
        f"expected a scalar volatility or an ({n}, {n}) covariance, got shape {arr.shape}"
    )


def hjb_residual(mu_ito, vol_or_cov, r: float, rho_discount: float, policy: Policy,
                 value: LogValueFunction, a: float, t: float) -> float:
    """Residual of the dynamic-programming equation at a candidate (policy, value).

    Evaluates the discounted Hamiltonian bracket

        exp(-rho t) * ln(c) + J_t + J_a a (r + theta.(mu_ito - r 1) - c/a)
            + 0.5 J_aa a^2 theta.V.theta

    with c = consumption_fraction * a and the analytic derivatives of the
    closed-form J.  At the optimal policy with the matching beta0 the bracket
    vanishes; strictly concave dependence on (c, theta) makes it negative for
    any other control.
    """
    if not a > 0.0:
        raise DomainError(f"wealth must be positive, got {a!r}")
    if policy.is_state_dependent:
        raise ParameterError("hjb_residual applies to constant-weight policies")
    theta = np.atleast_1d(np.asarray(policy.risky_weights, dtype=float))
    mu_ito = np.atleast_1d(np.asarray(mu_ito, dtype=float))
    if mu_ito.shape != theta.shape:
        raise ParameterError(
            f"drift has shape {mu_ito.shape} but the policy holds {theta.shape[0]} weights"
        )
    V = _as_covariance(vol_or_cov, theta.shape[0])
    c = policy.consumption_fraction * a
    disc = float(np.exp(-value.rho * t))
    j_t = float(value.partial_t(a, t))
    j_a = float(value.partial_a(a, t))
    j_aa = float(value.partial_aa(a, t))
    excess = mu_ito - r
    drift_term = a * (r + float(theta @ excess)) - c
    return disc * np.log(c) + j_t + j_a * drift_term + 0.5 * j_aa * a * a * float(theta @ V @ theta)


def log_wealth_drift(policy: Policy, mu_ito, V, r: float) -> float:
    """Drift rate of ln(wealth) under a constant policy.

    g = r + theta.(mu_ito - r 1) - consumption_fraction - 0.5 theta.V.theta;
    E[ln a_s] = ln a_0 + g s, which also feeds the analytic tail of the
    utility estimator.
    """
    if policy.is_state_dependent:
        raise ParameterError("log_wealth_drift applies to constant-weight policies")
    theta = np.atleast_1d(np.asarray(policy.risky_weights, dtype=float))
    mu_ito = np.atleast_1d(np.asarray(mu_ito, dtype=float))
    V = _as_covariance(V, theta.shape[0])
    return float(
        r + theta @ (mu_ito - r) - policy.consumption_fraction - 0.5 * theta @ V @ theta
    )
