"""Command-line experiment runner.

Exit codes: 0 success, 2 invalid configuration, 3 an acceptance gate
failed, 4 numerical fault.
"""

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import eigen, point_process, theory
from .config import COMMANDS, FORMATS, ExperimentConfig
from .errors import ConfigError, NumericalFault
from .scaling import Regime
from .special_functions import bracket_property_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_NUMERICAL = 4

# Monte Carlo gates on the Poisson and Gumbel checks
MEAN_REL_TOL = 0.15
Z_GATE = 3.0
CORR_GATE = 0.1
KS_GATE = 0.05


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_value(text):
    try:
        f = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not f.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(f)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="beta-extremes",
        description="Extreme-value experiments for high-temperature tridiagonal beta ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--regime", choices=[r.value for r in (Regime.A, Regime.B, Regime.C)])
        p.add_argument("--gamma", type=float)
        p.add_argument("--beta-exponent", type=float)
        p.add_argument("--loglog-power", type=float)
        p.add_argument("--n", type=_int_value, action="append", dest="n_ladder", help="repeatable")
        p.add_argument("--replicas", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--x-grid", type=_float_list)
        p.add_argument("--bins", type=_float_list, help="comma-separated bin edges")
        p.add_argument("--window-min", type=float)
        p.add_argument("--out", type=str)
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--threads", type=int)
    return parser


_REGIME_DEFAULTS = {"A": {"beta_exponent": 1.5}, "B": {"loglog_power": 0.5}, "C": {"gamma": 0.5}}


def resolve_config(args):
    cfg = ExperimentConfig.read(args.config) if args.config else ExperimentConfig.defaults(args.command)
    if cfg.command != args.command:
        raise ConfigError(f"config file is for {cfg.command!r}, not {args.command!r}")
    if args.regime is not None and args.regime != cfg.regime:
        # switching regime drops the family parameters of the old one
        cfg = cfg.updated(regime=args.regime)
        cfg = replace(cfg, gamma=None, beta_exponent=None, loglog_power=None).updated(**_REGIME_DEFAULTS[args.regime])
    overrides = {
        "regime": args.regime,
        "gamma": args.gamma,
        "beta_exponent": args.beta_exponent,
        "loglog_power": args.loglog_power,
        "n_ladder": tuple(args.n_ladder) if args.n_ladder else None,
        "replicas": args.replicas,
        "samples": args.samples,
        "seed": args.seed,
        "x_grid": args.x_grid,
        "bins": args.bins,
        "window_min": args.window_min,
        "out": args.out,
        "format": args.format,
        "threads": args.threads,
    }
    return cfg.updated(**overrides).validate()


def _finish(out, cfg, summary, ok):
    summary["config"] = cfg.to_text()
    summary["passed"] = bool(ok)
    point_process.write_json(summary, out / "summary.json")
    return EXIT_OK if ok else EXIT_GATE


def cmd_verify_sum(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rc = cfg.regime_config()
    rows = theory.convergence_table(rc, cfg.n_ladder, cfg.x_grid)
    for row in rows:
        if not all(math.isfinite(v) for v in (row.S_exact, row.S_low, row.ratio)):
            raise NumericalFault(f"non-finite survival sum at n={row.n}, x={row.x}")
    sandwich = all(r.S_low <= r.S_exact <= r.S_high for r in rows)
    drift = {str(x): theory.drift_toward_one(r) for x, r in theory.ratios_by_x(rows).items()}
    ok = sandwich and len(cfg.n_ladder) >= 2 and all(drift.values())
    if cfg.format == "csv":
        theory.write_convergence_csv(rows, out / "convergence.csv")
    else:
        point_process.write_json([dict(zip(theory.CSV_HEADER, r.as_tuple())) for r in rows], out / "convergence.json")
    summary = {"header": rc.header(), "sandwich": sandwich, "drift_toward_one": drift}
    return _finish(out, cfg, summary, ok)


def cmd_simulate_ppp(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rc = cfg.regime_config()
    G = theory.IntensityFunction(rc.regime)
    edges = np.array(cfg.bins, dtype=np.float64)
    summary = {"runs": []}
    ok = True
    for n in cfg.n_ladder:
        target = out if len(cfg.n_ladder) == 1 else out / f"n_{n}"
        target.mkdir(parents=True, exist_ok=True)
        reals = point_process.simulate_realizations(rc, n, cfg.replicas, cfg.seed, cfg.window_min, cfg.threads)
        matrix = point_process.interval_counts(reals, edges, G)
        pair = rc.scaling(n)
        expected = point_process.exact_interval_expectations(n, rc.beta_for(n), pair, edges)
        report = point_process.poisson_dispersion_test(matrix, expected)
        maxima = np.array([r.max_value for r in reals])
        D, p = point_process.ks_statistic(maxima, lambda x: point_process.gumbel_max_cdf(G, x))
        gates = {
            "mean": all(
                abs(b.mean - b.expected) <= max(MEAN_REL_TOL * b.expected, Z_GATE * b.mean_se) for b in report.bins
            ),
            "dispersion": all(abs(b.dispersion_z) <= Z_GATE for b in report.bins),
            "correlation": report.max_abs_correlation() < CORR_GATE,
            "ks": D <= KS_GATE,
        }
        ok = ok and all(gates.values())
        if cfg.format == "csv":
            point_process.write_counts_csv(matrix, target / "counts.csv")
            point_process.write_maxima_csv(reals, target / "maxima.csv")
        else:
            point_process.write_json(
                {"counts": matrix.counts.tolist(), "maxima": maxima.tolist()}, target / "samples.json"
            )
        summary["runs"].append(
            {
                "header": rc.header(n),
                "poisson": report.as_dict(),
                "ks": {"D": D, "p": p},
                "gates": gates,
            }
        )
    return _finish(out, cfg, summary, ok)


def cmd_eigen_scaling(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rc = cfg.regime_config()
    ex = eigen.lambda_max_scaling_experiment(rc, cfg.n_ladder, cfg.replicas, cfg.seed, cfg.threads)
    if cfg.format == "csv":
        eigen.write_eigen_csv(ex.records, out / "eigen.csv")
    else:
        recs = [
            dict(n=r.n, replica=r.replica, lambda_max=r.lambda_max, lower=r.rayleigh_lower,
                 upper=r.gershgorin_upper, ratio=r.ratio)
            for r in ex.records
        ]
        point_process.write_json(recs, out / "eigen.json")
    ok = all(s.sandwich_rate == 1.0 for s in ex.summaries) and 0 < ex.envelope[0] < ex.envelope[1] < math.inf
    summary = {"header": rc.header(), **ex.as_dict()}
    return _finish(out, cfg, summary, ok)


def cmd_bounds_check(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = bracket_property_report(cfg.samples, cfg.seed)
    with open(out / "bounds.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if report["violation_count"] == 0 else EXIT_GATE


_COMMANDS = {
    "verify-sum": cmd_verify_sum,
    "simulate-ppp": cmd_simulate_ppp,
    "eigen-scaling": cmd_eigen_scaling,
    "bounds-check": cmd_bounds_check,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(invalid="raise", over="raise"):
            code = _COMMANDS[cfg.command](cfg)
    except (NumericalFault, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    status = {EXIT_OK: "ok", EXIT_GATE: "acceptance gate failed"}[code]
    print(f"{cfg.command}: {status}; outputs in {cfg.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
