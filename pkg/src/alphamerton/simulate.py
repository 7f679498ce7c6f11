"""Monte Carlo path generation.

Provides correlated Brownian increments, Euler-Maruyama stepping of Ito-form
coefficient fields, a predictor-corrector discretization of SDEs stated under
an arbitrary evaluation convention, wealth-path simulation under a policy
(advanced in log coordinates so positivity is exact), and a full-truncation
scheme for square-root variance processes.

Reproducibility contract: every path owns a counter-based Philox stream keyed
by (seed, path index), so ensembles are bit-identical for a given config no
matter how paths are split across worker threads or how draws are chunked in
time.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .calculus import CoefficientField, CorrelationMatrix, as_interpretation, convert
from .errors import DimensionError, ParameterError, SimulationError
from .markets import (
    CirParams,
    ConstantVolMarket,
    FactorMarket,
    HestonMarket,
    heston_ito_form,
    require_valid,
)
from .policies import Policy, log_wealth_drift

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "SCHEMES",
    "correlated_increments",
    "euler_step",
    "alpha_point_step",
    "simulate_paths",
    "simulate_wealth",
    "simulate_cir",
]

SCHEMES = ("ito_euler", "alpha_point")

# Path block assigned to one worker, and target elements per RNG time-chunk.
_BLOCK_SIZE = 8192
_CHUNK_TARGET = 4_000_000

_MAX_FLAGGED_FRACTION = 0.01


@dataclass(frozen=True)
class SimConfig:
    """Time grid, ensemble size and RNG seed for one simulation run.

    ``save_every`` thins the recorded grid (the final step is always kept);
    the integration step stays ``dt``.
    """

    horizon: float
    dt: float
    n_paths: int
    seed: int
    scheme: str = "ito_euler"
    save_every: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "save_every", int(self.save_every))
        if not self.horizon > 0.0:
            raise ParameterError(f"horizon must be positive, got {self.horizon!r}")
        if not self.dt > 0.0:
            raise ParameterError(f"dt must be positive, got {self.dt!r}")
        if self.dt > self.horizon:
            raise ParameterError("dt must not exceed the horizon")
        if self.n_paths < 1:
            raise ParameterError("n_paths must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.save_every < 1:
            raise ParameterError("save_every must be at least 1")
        n_steps = round(self.horizon / self.dt)
        if n_steps < 1 or abs(n_steps * self.dt - self.horizon) > self.dt / 2:
            raise ParameterError(
                f"horizon {self.horizon} is not an integer number of steps of dt {self.dt}"
            )

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.dt)

    def saved_steps(self) -> np.ndarray:
        steps = list(range(0, self.n_steps + 1, self.save_every))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.asarray(steps, dtype=np.int64)

    def times(self) -> np.ndarray:
        return self.saved_steps() * self.dt


@dataclass
class PathEnsemble:
    """Simulated paths on a saved time grid.

    ``states`` has shape (n_paths, n_times, d); ``meta`` records the config,
    a market identifier, state names and run diagnostics.
    """

    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1:
            raise DimensionError(f"times must be one-dimensional, got shape {self.times.shape}")
        if self.states.ndim != 3 or self.states.shape[1] != self.times.shape[0]:
            raise DimensionError(
                f"states must have shape (n_paths, {self.times.shape[0]}, d), got {self.states.shape}"
            )
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0.0):
            raise ParameterError("times must start at 0 and increase strictly")
        if not np.all(np.isfinite(self.states)):
            raise SimulationError("ensemble contains non-finite states")

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]


class PathStreams:
    """Per-path Philox streams; path p uses key (seed << 64) | p.

    Draws are consumed sequentially per path, so chunking choices never
    change the values a path sees.
    """

    def __init__(self, seed: int, start: int, count: int) -> None:
        base = int(seed) << 64
        self._gens = [
            np.random.Generator(np.random.Philox(key=base | (start + i))) for i in range(count)
        ]

    def standard_normal(self, n: int) -> np.ndarray:
        out = np.empty((len(self._gens), n))
        for i, gen in enumerate(self._gens):
            out[i] = gen.standard_normal(n)
        return out


def correlated_increments(corr: CorrelationMatrix, dt: float, n: int, rng_stream) -> np.ndarray:
    """n rows of correlated Brownian increments C z sqrt(dt), z standard normal."""
    if not dt > 0.0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    z = rng_stream.standard_normal((int(n), corr.m))
    return math.sqrt(dt) * (z @ corr.C.T)


def euler_step(field: CoefficientField, x, dW, dt: float) -> np.ndarray:
    """One Euler-Maruyama step of an Ito-form field: x + b(x) dt + Sigma(x) dW."""
    x = np.asarray(x, dtype=float)
    dW = np.asarray(dW, dtype=float)
    return x + field.drift_at(x) * dt + np.einsum("...dm,...m->...d", field.diffusion_at(x), dW)


def alpha_point_step(field: CoefficientField, alpha, x, dW, dt: float) -> np.ndarray:
    """Predictor-corrector step for a field stated under convention alpha.

    The predictor is an Euler step; the corrector re-evaluates the diffusion
    at the state-space interpolation (1 - alpha) x + alpha x_hat, which
    reproduces the alpha-dependent drift correction to first order in dt.
    """
    a = as_interpretation(alpha).alpha
    x = np.asarray(x, dtype=float)
    dW = np.asarray(dW, dtype=float)
    b_dt = field.drift_at(x) * dt
    sig = field.diffusion_at(x)
    noise = np.einsum("...dm,...m->...d", sig, dW)
    if a == 0.0:
        return x + b_dt + noise
    midpoint = x + a * (b_dt + noise)
    return x + b_dt + np.einsum("...dm,...m->...d", field.diffusion_at(midpoint), dW)


def _run_blocks(n_paths: int, n_threads: int, block_fn):
    """Run block_fn(lo, hi) over contiguous path blocks; merge in index order."""
    blocks = [(lo, min(lo + _BLOCK_SIZE, n_paths)) for lo in range(0, n_paths, _BLOCK_SIZE)]
    if n_threads <= 1 or len(blocks) == 1:
        results = [block_fn(lo, hi) for lo, hi in blocks]
    else:
        with ThreadPoolExecutor(max_workers=int(n_threads)) as pool:
            results = list(pool.map(lambda b: block_fn(*b), blocks))
    return results


def _chunk_steps(block_size: int, m: int, n_steps: int) -> int:
    return max(1, min(n_steps, _CHUNK_TARGET // max(1, block_size * m)))


def _save_slice(saved: np.ndarray, k0: int, k1: int):
    """Positions of saved steps produced by the chunk (k0, k1]."""
    lo = int(np.searchsorted(saved, k0, side="right"))
    hi = int(np.searchsorted(saved, k1, side="right"))
    return lo, hi, saved[lo:hi] - k0 - 1


def simulate_paths(
    field: CoefficientField,
    x0,
    cfg: SimConfig,
    alpha: "float | object" = 0.0,
    n_threads: int = 1,
    market_id: str = "sde",
) -> PathEnsemble:
    """Simulate a generic coefficient field on the config's grid.

    With scheme ``ito_euler`` the field is converted to Ito form first (a
    no-op when ``alpha`` is 0); with ``alpha_point`` the stated field is
    discretized directly by the predictor-corrector rule.
    """
    a = as_interpretation(alpha).alpha
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.shape[0]
    m = field.diffusion_at(x0).shape[-1]
    if cfg.scheme == "ito_euler":
        stepped = convert(field, a, 0.0)
        step = lambda x, dW: euler_step(stepped, x, dW, cfg.dt)  # noqa: E731
    else:
        step = lambda x, dW: alpha_point_step(field, a, x, dW, cfg.dt)  # noqa: E731

    n_steps = cfg.n_steps
    saved = cfg.saved_steps()
    sq_dt = math.sqrt(cfg.dt)
    chunk = _chunk_steps(min(_BLOCK_SIZE, cfg.n_paths), m, n_steps)

    def block(lo: int, hi: int):
        B = hi - lo
        streams = PathStreams(cfg.seed, lo, B)
        out = np.empty((B, saved.shape[0], d))
        out[:, 0, :] = x0
        x = np.broadcast_to(x0, (B, d)).copy()
        k0 = 0
        while k0 < n_steps:
            k1 = min(k0 + chunk, n_steps)
            z = streams.standard_normal((k1 - k0) * m).reshape(B, k1 - k0, m)
            for j in range(k1 - k0):
                x = step(x, sq_dt * z[:, j, :])
                if not np.all(np.isfinite(x)):
                    raise SimulationError(f"non-finite state at step {k0 + j + 1}")
                s_lo, s_hi, cols = _save_slice(saved, k0 + j, k0 + j + 1)
                if s_hi > s_lo:
                    out[:, s_lo:s_hi, :] = x[:, None, :]
            k0 = k1
        return (out,)

    parts = _run_blocks(cfg.n_paths, n_threads, block)
    states = np.concatenate([p[0] for p in parts], axis=0)
    meta = {"market": market_id, "config": cfg, "alpha": a, "state_names": tuple(f"x{i+1}" for i in range(d))}
    return PathEnsemble(times=cfg.times(), states=states, meta=meta)


def _constant_vol_wealth(market: ConstantVolMarket, policy: Policy, a0: float,
                         cfg: SimConfig, alpha, n_threads: int) -> PathEnsemble:
    require_valid(market)
    if policy.is_state_dependent:
        raise ParameterError("constant-volatility markets need a constant-weight policy")
    theta = np.atleast_1d(np.asarray(policy.risky_weights, dtype=float))
    if theta.shape[0] != market.n:
        raise DimensionError(
            f"policy holds {theta.shape[0]} weights but the market has {market.n} assets"
        )
    mu_ito = market.ito_drift(alpha)
    V = market.covariance
    g = log_wealth_drift(policy, mu_ito, V, market.r)
    w_vec = market.Gamma.T @ theta
    m = market.n
    n_steps = cfg.n_steps
    saved = cfg.saved_steps()
    sq_dt = math.sqrt(cfg.dt)
    log_a0 = math.log(a0)
    chunk = _chunk_steps(min(_BLOCK_SIZE, cfg.n_paths), m, n_steps)

    def block(lo: int, hi: int):
        B = hi - lo
        streams = PathStreams(cfg.seed, lo, B)
        out = np.empty((B, saved.shape[0]))
        out[:, 0] = log_a0
        cur = np.full(B, log_a0)
        k0 = 0
        while k0 < n_steps:
            k1 = min(k0 + chunk, n_steps)
            z = streams.standard_normal((k1 - k0) * m).reshape(B, k1 - k0, m)
            dlog = g * cfg.dt + sq_dt * (z @ w_vec)
            # Sequential accumulation keeps results independent of chunking.
            for j in range(k1 - k0):
                cur = cur + dlog[:, j]
                s_lo, s_hi, _ = _save_slice(saved, k0 + j, k0 + j + 1)
                if s_hi > s_lo:
                    out[:, s_lo:s_hi] = cur[:, None]
            k0 = k1
        if not np.all(np.isfinite(out)):
            raise SimulationError("non-finite log-wealth during simulation")
        return (np.exp(out)[:, :, None],)

    parts = _run_blocks(cfg.n_paths, n_threads, block)
    states = np.concatenate([p[0] for p in parts], axis=0)
    meta = {
        "market": "constant_vol",
        "config": cfg,
        "alpha": as_interpretation(alpha).alpha,
        "state_names": ("wealth",),
        "n_flagged": 0,
    }
    return PathEnsemble(times=cfg.times(), states=states, meta=meta)


def _factor_wealth_loop(cfg, a0, r, frac, rho_corr, weight_fn, mu_eff_fn, vol_fn,
                        factor_drift_fn, factor_diff_fn, x0, valid_fn, n_threads,
                        clamp_fn=None):
    """Joint (wealth, factor) Euler loop shared by the factor and Heston markets.

    The weight rule is evaluated at the factor state holding at the start of
    each step.  Paths on which the rule or the coefficients become undefined
    are flagged and frozen (coefficients on frozen lanes are evaluated at the
    safe initial point and the results discarded) and excluded at the end.
    """
    n_steps = cfg.n_steps
    saved = cfg.saved_steps()
    dt, sq_dt = cfg.dt, math.sqrt(cfg.dt)
    s_rho = math.sqrt(max(0.0, 1.0 - rho_corr * rho_corr))
    log_a0 = math.log(a0)
    x0 = float(x0)
    chunk = _chunk_steps(min(_BLOCK_SIZE, cfg.n_paths), 2, n_steps)

    def block(lo: int, hi: int):
        B = hi - lo
        streams = PathStreams(cfg.seed, lo, B)
        out = np.empty((B, saved.shape[0], 2))
        out[:, 0, 0] = log_a0
        la = np.full(B, log_a0)
        x = np.full(B, x0)
        out[:, 0, 1] = np.maximum(x, 0.0) if clamp_fn is not None else x
        flagged = np.zeros(B, dtype=bool)
        k0 = 0
        while k0 < n_steps:
            k1 = min(k0 + chunk, n_steps)
            z = streams.standard_normal((k1 - k0) * 2).reshape(B, k1 - k0, 2)
            for j in range(k1 - k0):
                xeff = clamp_fn(x) if clamp_fn is not None else x
                ok = ~flagged & valid_fn(xeff)
                xsafe = np.where(ok, xeff, x0)
                pi = np.asarray(weight_fn(xsafe), dtype=float)
                ok &= np.isfinite(pi)
                flagged |= ~ok
                pi = np.where(ok, pi, 0.0)
                vol = np.asarray(vol_fn(xsafe), dtype=float)
                dws = sq_dt * z[:, j, 0]
                dwx = sq_dt * (rho_corr * z[:, j, 0] + s_rho * z[:, j, 1])
                la_new = la + (r + pi * (mu_eff_fn(xsafe) - r) - frac
                               - 0.5 * pi * pi * vol * vol) * dt + pi * vol * dws
                x_new = x + factor_drift_fn(xsafe) * dt + factor_diff_fn(xsafe) * dwx
                ok &= np.isfinite(la_new) & np.isfinite(x_new)
                flagged |= ~ok
                la = np.where(ok, la_new, la)
                x = np.where(ok, x_new, x)
                s_lo, s_hi, _ = _save_slice(saved, k0 + j, k0 + j + 1)
                if s_hi > s_lo:
                    out[:, s_lo:s_hi, 0] = la[:, None]
                    xsave = clamp_fn(x) if clamp_fn is not None else x
                    out[:, s_lo:s_hi, 1] = xsave[:, None]
            k0 = k1
        return out, flagged

    parts = _run_blocks(cfg.n_paths, n_threads, block)
    states = np.concatenate([p[0] for p in parts], axis=0)
    flagged = np.concatenate([p[1] for p in parts], axis=0)
    n_flagged = int(flagged.sum())
    if n_flagged > _MAX_FLAGGED_FRACTION * cfg.n_paths:
        raise SimulationError(
            f"{n_flagged} of {cfg.n_paths} paths flagged "
            f"(> {_MAX_FLAGGED_FRACTION:.0%} budget)"
        )
    states = states[~flagged]
    states[:, :, 0] = np.exp(states[:, :, 0])
    return states, n_flagged


def _heston_wealth(market: HestonMarket, policy: Policy, a0: float, cfg: SimConfig,
                   alpha, n_threads: int) -> PathEnsemble:
    mu_eff, cir = heston_ito_form(market, alpha)
    if policy.is_state_dependent:
        weight_fn = policy.risky_weights
        valid_fn = lambda v: v > 0.0  # noqa: E731
    else:
        w = float(np.atleast_1d(policy.risky_weights)[0])
        weight_fn = lambda v: np.full(v.shape, w)  # noqa: E731
        valid_fn = lambda v: np.ones(v.shape, dtype=bool)  # noqa: E731
    states, n_flagged = _factor_wealth_loop(
        cfg,
        a0,
        market.r,
        policy.consumption_fraction,
        market.rho_corr,
        weight_fn,
        mu_eff_fn=lambda v: mu_eff,
        vol_fn=np.sqrt,
        factor_drift_fn=lambda v: cir.kappa * (cir.theta_alpha - v),
        factor_diff_fn=lambda v: cir.xi * np.sqrt(v),
        x0=market.v0,
        valid_fn=valid_fn,
        n_threads=n_threads,
        clamp_fn=lambda v: np.maximum(v, 0.0),
    )
    meta = {
        "market": "heston",
        "config": cfg,
        "alpha": as_interpretation(alpha).alpha,
        "state_names": ("wealth", "variance"),
        "n_flagged": n_flagged,
    }
    return PathEnsemble(times=cfg.times(), states=states, meta=meta)


def _factor_wealth(market: FactorMarket, policy: Policy, a0: float, cfg: SimConfig,
                   alpha, n_threads: int) -> PathEnsemble:
    require_valid(market)
    a = as_interpretation(alpha).alpha
    lo_dom, hi_dom = market.domain
    mu_fn, sigma_fn, b_fn, nu_fn = market.mu_fn, market.sigma_fn, market.b_fn, market.nu_fn
    if policy.is_state_dependent:
        weight_fn = policy.risky_weights
    else:
        w = float(np.atleast_1d(policy.risky_weights)[0])
        weight_fn = lambda v: np.full(v.shape, w)  # noqa: E731
    states, n_flagged = _factor_wealth_loop(
        cfg,
        a0,
        market.r,
        policy.consumption_fraction,
        market.rho_corr,
        weight_fn,
        mu_eff_fn=lambda x: np.asarray(mu_fn(x), dtype=float)
        + a * market.rho_corr * np.asarray(sigma_fn.deriv(x), dtype=float)
        * np.asarray(nu_fn(x), dtype=float),
        vol_fn=lambda x: np.asarray(sigma_fn(x), dtype=float),
        factor_drift_fn=lambda x: np.asarray(b_fn(x), dtype=float)
        + a * np.asarray(nu_fn(x), dtype=float) * np.asarray(nu_fn.deriv(x), dtype=float),
        factor_diff_fn=lambda x: np.asarray(nu_fn(x), dtype=float),
        x0=market.x0,
        valid_fn=lambda x: (x > lo_dom) & (x < hi_dom),
        n_threads=n_threads,
    )
    meta = {
        "market": "factor",
        "config": cfg,
        "alpha": a,
        "state_names": ("wealth", "factor"),
        "n_flagged": n_flagged,
    }
    return PathEnsemble(times=cfg.times(), states=states, meta=meta)


def simulate_wealth(market, policy: Policy, a0: float, cfg: SimConfig,
                    alpha: "float | object" = 0.0, n_threads: int = 1) -> PathEnsemble:
    """Simulate wealth paths under a policy.

    Wealth is advanced in log coordinates (the exact Ito transform of the
    self-financing dynamics), so paths stay strictly positive.  ``alpha`` is
    the convention the market is stated under; drifts are converted to Ito
    form before stepping.  Factor-driven markets also record the factor path
    and evaluate the weight rule at the factor state entering each step.
    """
    if not a0 > 0.0:
        raise ParameterError(f"initial wealth must be positive, got {a0!r}")
    if isinstance(market, ConstantVolMarket):
        return _constant_vol_wealth(market, policy, a0, cfg, alpha, n_threads)
    if isinstance(market, HestonMarket):
        return _heston_wealth(market, policy, a0, cfg, alpha, n_threads)
    if isinstance(market, FactorMarket):
        return _factor_wealth(market, policy, a0, cfg, alpha, n_threads)
    raise ParameterError(f"unsupported market type {type(market).__name__}")


def simulate_cir(cir: CirParams, v0: float, cfg: SimConfig, n_threads: int = 1) -> PathEnsemble:
    """Full-truncation Euler for the square-root process.

    The raw state may propose negative values; drift and diffusion see the
    clipped value max(v, 0) and the recorded paths are the clipped values, so
    output is nonnegative everywhere.  The fraction of truncated proposals is
    reported in ``meta['truncation_fraction']``.
    """
    require_valid(cir)
    if not v0 > 0.0:
        raise ParameterError(f"v0 must be positive, got {v0!r}")
    n_steps = cfg.n_steps
    saved = cfg.saved_steps()
    dt, sq_dt = cfg.dt, math.sqrt(cfg.dt)
    kappa, theta_a, xi = cir.kappa, cir.theta_alpha, cir.xi
    chunk = _chunk_steps(min(_BLOCK_SIZE, cfg.n_paths), 1, n_steps)

    def block(lo: int, hi: int):
        B = hi - lo
        streams = PathStreams(cfg.seed, lo, B)
        out = np.empty((B, saved.shape[0], 1))
        out[:, 0, 0] = v0
        x = np.full(B, float(v0))
        truncated = 0
        k0 = 0
        while k0 < n_steps:
            k1 = min(k0 + chunk, n_steps)
            z = streams.standard_normal(k1 - k0)
            for j in range(k1 - k0):
                vplus = np.maximum(x, 0.0)
                x = x + kappa * (theta_a - vplus) * dt + xi * np.sqrt(vplus) * (sq_dt * z[:, j])
                truncated += int(np.count_nonzero(x < 0.0))
                s_lo, s_hi, _ = _save_slice(saved, k0 + j, k0 + j + 1)
                if s_hi > s_lo:
                    out[:, s_lo:s_hi, 0] = np.maximum(x, 0.0)[:, None]
            k0 = k1
        return out, truncated

    parts = _run_blocks(cfg.n_paths, n_threads, block)
    states = np.concatenate([p[0] for p in parts], axis=0)
    truncated = sum(p[1] for p in parts)
    meta = {
        "market": "cir",
        "config": cfg,
        "state_names": ("variance",),
        "truncation_fraction": truncated / (cfg.n_paths * n_steps),
    }
    return PathEnsemble(times=cfg.times(), states=states, meta=meta)
