"""Command-line front end.

Subcommands: ``convert`` (drift-correction report), ``solve`` (closed-form
policies as JSON), ``verify`` (per-convention comparison table with Monte
Carlo closure checks), ``plotdata`` (plot-ready CSV series).  All behavior
flows from flags and a JSON config; no environment variables are read, the
seed is mandatory, and outputs are byte-identical across runs and across
``--threads`` settings.

Exit codes: 0 success, 1 usage, 2 validation, 3 runtime or statistical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import ScalarFn, correction_vector, gbm_field
from .errors import (
    AlphamertonError,
    ConfigError,
    SimulationError,
    SolverError,
    ValidationError,
)
from .evaluate import ComparisonTable, compare_interpretations, perturbation_study
from .markets import (
    ConstantVolMarket,
    FactorMarket,
    HestonMarket,
    feller_check,
    heston_ito_form,
    validate,
)
from .policies import solve_factor, solve_heston, solve_n_asset
from .simulate import PathEnsemble, SimConfig, simulate_wealth

__all__ = [
    "main",
    "entrypoint",
    "default_config",
    "load_config",
    "write_ensemble_csv",
    "write_ensemble_summary",
    "read_ensemble_summary",
]

_DEFAULT_PERTURBATION_DELTAS = (-0.5, -0.25, 0.0, 0.25, 0.5)
_SUMMARY_MAGIC = b"AMSUM1\n"


# ---------------------------------------------------------------------------
# Deterministic formatting


def _fmt_json_value(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return "null"
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps_json(obj, indent: int = 0) -> str:
    """Serialize with insertion key order and 17-significant-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{json.dumps(str(k))}: {dumps_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in seq):
            return "[" + ", ".join(_fmt_json_value(v) for v in seq) + "]"
        items = [inner + dumps_json(v, indent + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _fmt_json_value(obj)


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Config handling


def default_config() -> dict:
    """Single risky asset benchmark config used when --config is omitted."""
    return {
        "market": {"type": "constant_vol", "mu": [0.08], "Gamma": [[0.2]], "r": 0.03},
        "rho": 0.1,
        "alphas": [0.0, 0.5, 1.0],
        "a0": 1.0,
        "sim": {
            "horizon": 30.0,
            "dt": 0.05,
            "n_paths": 20000,
            "seed": 42,
            "scheme": "ito_euler",
            "save_every": 5,
        },
        "outputs": {"dir": "out", "formats": ["csv", "txt"], "save_ensembles": False},
    }


def _sympy_scalar(expr_str: str) -> ScalarFn:
    import sympy as sp

    x = sp.Symbol("x")
    try:
        expr = sp.sympify(expr_str, locals={"x": x})
        fn = sp.lambdify(x, expr, "numpy")
        dfn = sp.lambdify(x, sp.diff(expr, x), "numpy")
    except Exception as exc:  # noqa: BLE001 - any sympy failure is a config error
        raise ConfigError(f"cannot parse coefficient expression {expr_str!r}: {exc}") from None

    def wrap(f):
        def g(v):
            v = np.asarray(v, dtype=float)
            out = np.asarray(f(v), dtype=float)
            if out.shape != v.shape:
                out = np.broadcast_to(out, v.shape).copy()
            return out

        return g

    return ScalarFn(wrap(fn), wrap(dfn))


def _market_from_block(block: dict):
    if not isinstance(block, dict) or "type" not in block:
        raise ConfigError("market block must be an object with a 'type' field")
    mtype = block["type"]
    try:
        if mtype == "constant_vol":
            return ConstantVolMarket(mu=block["mu"], Gamma=block["Gamma"], r=block["r"])
        if mtype == "heston":
            return HestonMarket(
                mu=block["mu"],
                r=block["r"],
                kappa=block["kappa"],
                long_run_mean=block["long_run_mean"],
                xi=block["xi"],
                rho_corr=block["rho_corr"],
                v0=block["v0"],
            )
        if mtype == "factor":
            lo, hi = block.get("domain", [-math.inf, math.inf])
            return FactorMarket(
                mu_fn=_sympy_scalar(str(block["mu"])),
                sigma_fn=_sympy_scalar(str(block["sigma"])),
                b_fn=_sympy_scalar(str(block["b"])),
                nu_fn=_sympy_scalar(str(block["nu"])),
                rho_corr=block["rho_corr"],
                r=block["r"],
                domain=(float(lo), float(hi)),
                x0=block["x0"],
            )
    except KeyError as exc:
        raise ConfigError(f"market block is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, AlphamertonError):
            raise
        raise ConfigError(f"malformed market block: {exc}") from None
    raise ConfigError(f"unknown market type {mtype!r}")


class Experiment:
    """Parsed and validated experiment config."""

    def __init__(self, raw: dict, seed_override=None, out_override=None) -> None:
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        if "market" not in raw:
            raise ConfigError("config is missing the market block")
        self.market = _market_from_block(raw["market"])
        violations = validate(self.market)
        if violations:
            raise ValidationError(violations)
        try:
            self.rho = float(raw["rho"])
            self.alphas = [float(a) for a in raw["alphas"]]
        except KeyError as exc:
            raise ConfigError(f"config is missing field {exc.args[0]!r}") from None
        if not self.rho > 0.0:
            raise ConfigError("rho must be positive")
        if not self.alphas:
            raise ConfigError("alphas must be a non-empty list")
        self.a0 = float(raw.get("a0", 1.0))
        sim = raw.get("sim")
        self.sim = None
        if sim is not None:
            sim = dict(sim)
            if seed_override is not None:
                sim["seed"] = seed_override
            if "seed" not in sim:
                raise ConfigError("sim block requires an explicit seed (reproducibility contract)")
            try:
                self.sim = SimConfig(
                    horizon=sim["horizon"],
                    dt=sim["dt"],
                    n_paths=sim["n_paths"],
                    seed=sim["seed"],
                    scheme=sim.get("scheme", "ito_euler"),
                    save_every=sim.get("save_every", 1),
                )
            except KeyError as exc:
                raise ConfigError(f"sim block is missing field {exc.args[0]!r}") from None
        outputs = dict(raw.get("outputs", {}))
        if out_override is not None:
            outputs["dir"] = out_override
        self.out_dir = Path(outputs.get("dir", "out"))
        self.formats = list(outputs.get("formats", ["csv", "txt"]))
        self.save_ensembles = bool(outputs.get("save_ensembles", False))
        self.deltas = [float(d) for d in outputs.get("deltas", _DEFAULT_PERTURBATION_DELTAS)]
        self.raw = raw
        self.resolved = self._resolve()

    def _resolve(self) -> dict:
        resolved = {
            "market": self.raw["market"],
            "rho": self.rho,
            "alphas": self.alphas,
            "a0": self.a0,
        }
        if self.sim is not None:
            resolved["sim"] = {
                "horizon": self.sim.horizon,
                "dt": self.sim.dt,
                "n_paths": self.sim.n_paths,
                "seed": self.sim.seed,
                "scheme": self.sim.scheme,
                "save_every": self.sim.save_every,
            }
        resolved["outputs"] = {
            "dir": str(self.out_dir),
            "formats": self.formats,
            "save_ensembles": self.save_ensembles,
        }
        return resolved

    def require_sim(self) -> SimConfig:
        if self.sim is None:
            raise ConfigError("this command requires a sim block in the config")
        return self.sim


def load_config(path, seed_override=None, out_override=None) -> Experiment:
    if path is None:
        raw = default_config()
    else:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return Experiment(raw, seed_override=seed_override, out_override=out_override)


# ---------------------------------------------------------------------------
# Ensemble export (column schema lives here, not in the simulator)


def write_ensemble_csv(ensemble: PathEnsemble, path) -> None:
    """One row per path per saved time: path_id,time,state_1..state_d."""
    d = ensemble.dim
    header = "path_id,time," + ",".join(f"state_{i+1}" for i in range(d))
    lines = [header]
    times = ensemble.times
    for p in range(ensemble.n_paths):
        for k in range(times.shape[0]):
            cells = [str(p), repr(float(times[k]))]
            cells.extend(repr(float(v)) for v in ensemble.states[p, k])
            lines.append(",".join(cells))
    _write_text(Path(path), "\n".join(lines) + "\n")


def write_ensemble_summary(ensemble: PathEnsemble, path) -> None:
    """Compact binary summary: path count, time grid, per-time mean/variance."""
    mean = ensemble.states.mean(axis=0)
    var = ensemble.states.var(axis=0, ddof=1) if ensemble.n_paths > 1 else np.zeros_like(mean)
    header = {
        "n_paths": ensemble.n_paths,
        "n_times": int(ensemble.times.shape[0]),
        "dim": ensemble.dim,
        "state_names": list(ensemble.meta.get("state_names", ())),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_SUMMARY_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(ensemble.times, dtype=np.float64).tobytes())
        fh.write(np.ascontiguousarray(mean, dtype=np.float64).tobytes())
        fh.write(np.ascontiguousarray(var, dtype=np.float64).tobytes())


def read_ensemble_summary(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(_SUMMARY_MAGIC))
        if magic != _SUMMARY_MAGIC:
            raise ConfigError(f"{path} is not an ensemble summary file")
        header = json.loads(fh.readline().decode())
        k, d = header["n_times"], header["dim"]
        times = np.frombuffer(fh.read(8 * k), dtype=np.float64)
        mean = np.frombuffer(fh.read(8 * k * d), dtype=np.float64).reshape(k, d)
        var = np.frombuffer(fh.read(8 * k * d), dtype=np.float64).reshape(k, d)
    return header, times, mean, var


# ---------------------------------------------------------------------------
# Table formatting


def table_to_csv(table: ComparisonTable) -> str:
    n = table.n_weights
    cols = ["alpha"] + [f"weight_{i+1}" for i in range(n)] + [
        "beta0", "J_closed", "J_mc", "J_se", "hjb_residual", "pass",
    ]
    heston = table.market_type == "heston"
    if heston:
        cols += ["feller_pass", "feller_margin"]
    lines = [",".join(cols)]
    for row in table.rows:
        weights = list(row.weights) + [None] * (n - len(row.weights))
        cells = [row.alpha, *weights, row.beta0, row.j_closed, row.j_mc, row.j_se,
                 row.hjb_residual, row.passed]
        if heston:
            cells += [row.feller_passed, row.feller_margin]
        lines.append(",".join(_csv_cell(c) for c in cells))
    return "\n".join(lines) + "\n"


def table_to_text(table: ComparisonTable) -> str:
    headers = ["alpha", "weights", "beta0", "J_closed", "J_mc", "J_se", "residual", "pass"]
    rows = []
    for row in table.rows:
        rows.append([
            f"{row.alpha:g}",
            " ".join(f"{w:.6f}" for w in row.weights),
            "" if row.beta0 is None else f"{row.beta0:.6f}",
            "" if row.j_closed is None else f"{row.j_closed:.6f}",
            f"{row.j_mc:.6f}",
            f"{row.j_se:.2e}",
            "" if row.hjb_residual is None else f"{row.hjb_residual:.2e}",
            "pass" if row.passed else "FAIL",
        ])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row, formatted in zip(table.rows, rows):
        out.append("  ".join(c.ljust(w) for c, w in zip(formatted, widths)))
        for note in row.notes:
            out.append(f"    note: {note}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_convert(args) -> int:
    frm, to = float(args.from_alpha), float(args.to_alpha)
    shift = frm - to
    lines = [f"conversion from alpha={frm:g} to alpha={to:g} (drift shift factor {shift:g})"]
    if args.gbm is not None:
        mu, sigma = map(float, args.gbm)
        field = gbm_field(mu, sigma)
        grid = np.asarray(args.grid_points if args.grid_points is not None else [1.0])
        lines.append("geometric brownian motion: correction c(S) = sigma^2 S")
        lines.append(f"per-unit drift shift: {shift * sigma**2:+.12g}")
        lines.append("S,drift,correction,converted_drift")
        for s in grid:
            c = float(correction_vector(field, np.array([s]))[0])
            lines.append(f"{s:g},{mu * s:.12g},{c:.12g},{mu * s + shift * c:.12g}")
    else:
        exp = load_config(args.config)
        market = exp.market
        if isinstance(market, ConstantVolMarket):
            diag_v = np.sum(market.Gamma * market.Gamma, axis=1)
            lines.append("constant-volatility market: per-unit correction diag(Gamma Gamma^T)")
            lines.append("asset,drift,correction,converted_drift")
            for i in range(market.n):
                lines.append(
                    f"{i+1},{market.mu[i]:.12g},{diag_v[i]:.12g},{market.mu[i] + shift * diag_v[i]:.12g}"
                )
        elif isinstance(market, HestonMarket):
            ret_corr = market.rho_corr * market.xi / 2.0
            var_corr = market.xi**2 / 2.0
            lines.append("heston market")
            lines.append(f"return drift correction rho*xi/2 = {ret_corr:.12g}; shift {shift * ret_corr:+.12g}")
            lines.append(f"variance drift correction xi^2/2 = {var_corr:.12g}; shift {shift * var_corr:+.12g}")
            lines.append(
                f"long-run variance mean: {market.long_run_mean:.12g} -> "
                f"{market.long_run_mean + shift * market.xi**2 / (2 * market.kappa):.12g}"
            )
        elif isinstance(market, FactorMarket):
            grid = (np.asarray(args.grid_points)
                    if args.grid_points is not None else market.validation_grid()[::50])
            lines.append("factor market: return correction rho*sigma'(x)*nu(x), factor correction nu(x)*nu'(x)")
            lines.append("x,mu,return_correction,converted_mu,factor_drift,factor_correction,converted_factor_drift")
            for x in grid:
                mu = float(market.mu_fn(np.array([x]))[0])
                rc = float(market.rho_corr * market.sigma_fn.deriv(np.array([x]))[0]
                           * market.nu_fn(np.array([x]))[0])
                b = float(market.b_fn(np.array([x]))[0])
                fc = float(market.nu_fn(np.array([x]))[0] * market.nu_fn.deriv(np.array([x]))[0])
                lines.append(
                    f"{x:.6g},{mu:.12g},{rc:.12g},{mu + shift * rc:.12g},"
                    f"{b:.12g},{fc:.12g},{b + shift * fc:.12g}"
                )
        print("\n".join(lines))
        return 0
    print("\n".join(lines))
    return 0


def _solve_result_row(exp: Experiment, alpha: float) -> dict:
    market = exp.market
    if isinstance(market, ConstantVolMarket):
        policy, value = solve_n_asset(market, exp.rho, alpha)
        return {
            "alpha": alpha,
            "consumption_fraction": policy.consumption_fraction,
            "weights": [float(w) for w in np.atleast_1d(policy.risky_weights)],
            "beta0": value.beta0,
            "value_at_a0": float(value(exp.a0, 0.0)),
        }
    if isinstance(market, HestonMarket):
        policy = solve_heston(market, exp.rho, alpha)
        mu_eff, cir = heston_ito_form(market, alpha)
        feller = feller_check(cir)
        return {
            "alpha": alpha,
            "consumption_fraction": policy.consumption_fraction,
            "weight_at_v0": float(policy.weight_at(np.array([market.v0]))[0]),
            "mu_eff": mu_eff,
            "theta_alpha": cir.theta_alpha,
            "feller": {"pass": feller.passed, "margin": feller.margin},
            "beta0": None,
            "value_at_a0": None,
        }
    policy = solve_factor(market, exp.rho, alpha)
    return {
        "alpha": alpha,
        "consumption_fraction": policy.consumption_fraction,
        "weight_at_x0": float(policy.weight_at(np.array([market.x0]))[0]),
        "beta0": None,
        "value_at_a0": None,
    }


def _cmd_solve(args) -> int:
    exp = load_config(args.config, seed_override=args.seed, out_override=args.out)
    results = [_solve_result_row(exp, a) for a in exp.alphas]
    doc = {"version": __version__, "config": exp.resolved, "results": results}
    text = dumps_json(doc) + "\n"
    print(text, end="")
    if args.out is not None:
        _write_text(exp.out_dir / "solve.json", text)
    return 0


def _cmd_verify(args) -> int:
    exp = load_config(args.config, seed_override=args.seed, out_override=args.out)
    cfg = exp.require_sim()
    result = compare_interpretations(
        exp.market,
        exp.alphas,
        exp.rho,
        cfg,
        a0=exp.a0,
        n_threads=args.threads,
        keep_ensembles=exp.save_ensembles,
    )
    if exp.save_ensembles:
        table, ensembles = result
    else:
        table, ensembles = result, []
    if "csv" in exp.formats:
        _write_text(exp.out_dir / "verify_table.csv", table_to_csv(table))
    if "txt" in exp.formats:
        _write_text(exp.out_dir / "verify_report.txt", table_to_text(table))
    for row, ens in zip(table.rows, ensembles):
        if ens is None:
            continue
        tag = f"alpha_{row.alpha:g}".replace(".", "p").replace("-", "m")
        write_ensemble_csv(ens, exp.out_dir / f"ensemble_{tag}.csv")
        write_ensemble_summary(ens, exp.out_dir / f"ensemble_{tag}.bin")
    print(table_to_text(table), end="")
    if table.all_passed:
        print("verify: all rows passed")
        return 0
    print("verify: FAILURES present", file=sys.stderr)
    return 3


def _cmd_plotdata(args) -> int:
    exp = load_config(args.config, seed_override=args.seed, out_override=args.out)
    market = exp.market
    out = exp.out_dir
    written = []

    alphas = np.linspace(0.0, 1.0, 21)
    if isinstance(market, ConstantVolMarket):
        lines = ["alpha," + ",".join(f"weight_{i+1}" for i in range(market.n))]
        for a in alphas:
            policy, _ = solve_n_asset(market, exp.rho, float(a))
            cells = [repr(float(a))] + [repr(float(w)) for w in np.atleast_1d(policy.risky_weights)]
            lines.append(",".join(cells))
        _write_text(out / "alpha_weight.csv", "\n".join(lines) + "\n")
        written.append("alpha_weight.csv")

        cfg = exp.require_sim()
        base_policy, _ = solve_n_asset(market, exp.rho, exp.alphas[0])
        study = perturbation_study(
            market, base_policy, exp.deltas, cfg, exp.rho,
            alpha=exp.alphas[0], a0=exp.a0, n_threads=args.threads,
        )
        lines = ["delta,utility,se"]
        for delta, est in zip(study.deltas, study.estimates):
            lines.append(f"{repr(float(delta))},{repr(est.point_estimate)},{repr(est.standard_error)}")
        _write_text(out / "perturbation_utility.csv", "\n".join(lines) + "\n")
        written.append("perturbation_utility.csv")
    elif isinstance(market, HestonMarket):
        lines = ["alpha,weight_at_v0"]
        for a in alphas:
            policy = solve_heston(market, exp.rho, float(a))
            lines.append(f"{repr(float(a))},{repr(float(policy.weight_at(np.array([market.v0]))[0]))}")
        _write_text(out / "alpha_weight.csv", "\n".join(lines) + "\n")
        written.append("alpha_weight.csv")

        policy = solve_heston(market, exp.rho, exp.alphas[0])
        grid = np.geomspace(1e-3, 1.0, 61)
        pi = policy.weight_at(grid)
        lines = ["v,pi,pi_times_v"]
        for v, p in zip(grid, pi):
            lines.append(f"{repr(float(v))},{repr(float(p))},{repr(float(p * v))}")
        _write_text(out / "policy_curve.csv", "\n".join(lines) + "\n")
        written.append("policy_curve.csv")
    else:
        lines = ["alpha,weight_at_x0"]
        for a in alphas:
            policy = solve_factor(market, exp.rho, float(a))
            lines.append(f"{repr(float(a))},{repr(float(policy.weight_at(np.array([market.x0]))[0]))}")
        _write_text(out / "alpha_weight.csv", "\n".join(lines) + "\n")
        written.append("alpha_weight.csv")

        policy = solve_factor(market, exp.rho, exp.alphas[0])
        grid = market.validation_grid()[::17]
        pi = policy.weight_at(grid)
        lines = ["x,pi"]
        for x, p in zip(grid, pi):
            lines.append(f"{repr(float(x))},{repr(float(p))}")
        _write_text(out / "policy_curve.csv", "\n".join(lines) + "\n")
        written.append("policy_curve.csv")

    for name in written:
        print(f"wrote {out / name}")
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None, help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for simulation")

    parser = _Parser(prog="alphamerton", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[common], help="drift-correction report")
    p.add_argument("--from-alpha", type=float, required=True)
    p.add_argument("--to-alpha", type=float, required=True)
    p.add_argument("--gbm", nargs=2, metavar=("MU", "SIGMA"), default=None,
                   help="inline geometric-brownian coefficients instead of a config market")
    p.add_argument("--grid-points", nargs="+", type=float, default=None,
                   help="explicit evaluation points")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("solve", parents=[common], help="closed-form policies as JSON")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="comparison table with closure checks")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("plotdata", parents=[common], help="plot-ready CSV series")
    p.set_defaults(func=_cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValidationError, SolverError, AlphamertonError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
