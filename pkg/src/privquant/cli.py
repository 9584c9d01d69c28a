"""Command-line front end.

Exit codes: 0 success, 1 a check or assumption failed, 2 unreadable input or
bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, scenarios
from .config import ConfigError, load_config
from .estimator import AlgorithmConfig, StepSizeSchedule, run, validate_assumptions
from .experiments import (ExperimentConfig, TradeoffPoint, default_jobs, event_rate_synthetic, fit_window,
                          highdim_compare, monte_carlo, tradeoff_params, tradeoff_sweep)
from .noise_models import NoiseSchedule
from .observation_model import spectral
from .privacy_analysis import FisherBoundConfig, PrivacyConditionError, bound_trajectory, log_grid, rate_fit
from .rng import fresh_seed

OK, CHECK_FAILED, BAD_INPUT = 0, 1, 2


class CheckFailed(Exception):
    pass


def _write_manifest(out: Path, args, seed, started: float, extra: dict | None = None) -> None:
    manifest = {
        "command": [Path(sys.argv[0]).name] + sys.argv[1:] if sys.argv else [args.command],
        "subcommand": args.command,
        "config": str(args.config) if getattr(args, "config", None) else None,
        "seed": seed,
        "out": str(out),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _resolve_seed(args, config_seed=None) -> tuple[int, bool]:
    if args.seed is not None:
        return int(args.seed), False
    if config_seed is not None:
        return int(config_seed), False
    return fresh_seed(), True


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_valid(cfg: AlgorithmConfig, skip: bool) -> None:
    if skip:
        return
    report = validate_assumptions(cfg)
    if not report.ok:
        for line in report.lines():
            print(line, file=sys.stderr)
        raise CheckFailed("configuration violates the assumptions above (use --no-check to run anyway)")


def cmd_validate(args) -> int:
    loaded = load_config(args.config)
    report = validate_assumptions(loaded.algorithm)
    for line in report.lines():
        print(line)
    return OK if report.ok else CHECK_FAILED


def cmd_simulate(args) -> int:
    started = time.time()
    loaded = load_config(args.config)
    _require_valid(loaded.algorithm, args.no_check)
    seed, generated = _resolve_seed(args, loaded.seed)
    out = _out_dir(args)
    exp = ExperimentConfig(loaded.algorithm, loaded.theta, args.repeats, args.horizon, seed, out, "convergence",
                           args.jobs)
    res = monte_carlo(exp)
    if args.trace:
        run(loaded.algorithm, loaded.theta, args.horizon, seed).write_csv(out / "trace.csv")
    _write_manifest(out, args, seed, started, {"seed_generated": generated})
    print(f"final mean squared error {res.mean[-1]:.6g} (k = {args.horizon}, {args.repeats} repeats)")
    return OK


def cmd_privacy_bound(args) -> int:
    started = time.time()
    loaded = load_config(args.config)
    cfg = loaded.algorithm
    out = _out_dir(args)
    sensor = args.sensor - 1
    try:
        fb = FisherBoundConfig.from_algorithm(cfg, sensor)
    except IndexError as exc:
        raise ConfigError(str(exc)) from exc
    times = log_grid(2, args.kmax, args.points)
    traj = bound_trajectory(fb, times, args.form)
    m = fb.gram.shape[0]
    with open(out / "privacy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "sensor", "bound_scalar"] + [f"b{r + 1}{c + 1}" for r in range(m) for c in range(m)])
        for k, v, mat in zip(traj.times, traj.scalar_series, traj.bounds):
            w.writerow([int(k), args.sensor, repr(float(v))] + [repr(float(x)) for x in mat.ravel()])
    lo, hi = fit_window(args.kmax)
    summary = {"sensor": args.sensor, "form": args.form, "neighbors": [j + 1 for j in fb.neighbors],
               "fit_window": [lo, hi], "pre_asymptotic_below_k": 10}
    pos = traj.scalar_series > 0
    if pos.any() and hi / lo >= 10 and np.all(traj.scalar_series[(times >= lo) & (times <= hi)] > 0):
        fit = rate_fit(traj, lo, hi)
        summary.update(slope=fit.slope, slope_halfwidth=fit.halfwidth)
        print(f"sensor {args.sensor}: fitted slope {fit.slope:.4f} ± {fit.halfwidth:.1e} on k ∈ [{lo}, {hi}]")
    else:
        summary.update(slope=None)
        print(f"sensor {args.sensor}: bound is zero on the fit window")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _write_manifest(out, args, None, started)
    return OK


def _tradeoff_builder(base: AlgorithmConfig, family):
    lam = [spectral(h).lambda_min_plus or 1.0 for h in base.sensors.mean_matrices()]

    def build(pt: TradeoffPoint) -> AlgorithmConfig:
        e, n = len(base.edges), base.sensor_count
        pts = [tradeoff_params(pt.nu, pt.chi, l) for l in lam]
        steps = StepSizeSchedule(base.steps.alpha_base, np.full(e, pt.gamma), [p.beta_base for p in pts],
                                 np.ones(n), [p.k0 for p in pts])
        noise = [NoiseSchedule(family or s.family, s.base_scale, pt.epsilon) for s in base.noise]
        return replace(base, noise=noise, steps=steps)
    return build


def cmd_tradeoff(args) -> int:
    started = time.time()
    loaded = load_config(args.config)
    chis = [float(c) for c in args.chi_list.split(",") if c.strip()]
    try:
        points = [tradeoff_params(args.nu, c, 1.0) for c in chis]
    except ValueError as exc:
        raise CheckFailed(str(exc)) from exc
    seed, generated = _resolve_seed(args, loaded.seed)
    out = _out_dir(args)
    report = tradeoff_sweep(points, _tradeoff_builder(loaded.algorithm, args.family), loaded.theta, args.repeats,
                            args.horizon, seed, args.jobs, args.sensor - 1, out)
    if not report.rows:
        report.write_csv(out / "tradeoff.csv")
    for r in report.rows:
        print(f"chi={r.chi:g}  bound slope {r.bound_slope:.4f}  error slope {r.mse_slope:.4f}  "
              f"late error {r.late_mean:.4g} ± {r.late_stderr:.2g}")
    print(f"verdict: {report.verdict}")
    (out / "summary.json").write_text(json.dumps(
        {"verdict": report.verdict, "bound_order": report.bound_order, "mse_order": report.mse_order}, indent=2) + "\n")
    _write_manifest(out, args, seed, started, {"seed_generated": generated})
    return OK


def cmd_highdim(args) -> int:
    started = time.time()
    seed, generated = _resolve_seed(args)
    out = _out_dir(args)
    theta = scenarios.highdim_theta(dimension=args.dimension)
    res = highdim_compare(lambda c: scenarios.highdim_config(c, args.dimension), theta, args.repeats,
                          args.horizon, seed, args.jobs)
    res.write_csv(out / "highdim.csv")
    k = args.horizon
    print(f"k={k}: one-bit {res.one_bit_mse[-1]:.4g}, multi-bit {res.multi_bit_mse[-1]:.4g}, "
          f"bits ratio {res.bit_ratio:g}")
    _write_manifest(out, args, seed, started, {"seed_generated": generated, "theta": theta.tolist()})
    return OK


def cmd_event_rate(args) -> int:
    started = time.time()
    if args.config:
        loaded = load_config(args.config)
        cfg, theta, cfg_seed = loaded.algorithm, float(loaded.theta[0]), loaded.seed
    else:
        cfg = scenarios.event_rate_config(participation=args.participation, chi=args.chi)
        theta, cfg_seed = scenarios.EVENT_RATE, None
    if args.theta is not None:
        theta = args.theta
    seed, generated = _resolve_seed(args, cfg_seed)
    out = _out_dir(args)
    res = event_rate_synthetic(cfg, theta, args.repeats, args.horizon, seed, args.jobs)
    res.mse.write_csv(out / "metrics.csv")
    summary = {"theta_true": theta, "mean_estimate": res.mean_estimate, "abs_error": res.error}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"mean estimate {res.mean_estimate:.5f} (true {theta}, error {res.error:.4g})")
    _write_manifest(out, args, seed, started, {"seed_generated": generated})
    return OK


def _common(p: argparse.ArgumentParser, repeats=20, horizon=100_000):
    p.add_argument("--repeats", type=int, default=repeats)
    p.add_argument("--horizon", type=int, default=horizon)
    p.add_argument("--seed", type=int, default=None, help="root seed (generated and recorded when omitted)")
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=default_jobs())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="privquant", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check connectivity, observability and step-size conditions")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="Monte Carlo error curve -> metrics.csv")
    p.add_argument("config")
    _common(p)
    p.add_argument("--trace", action="store_true", help="also write per-sensor errors and bits of run 0")
    p.add_argument("--no-check", action="store_true", help="run even if assumptions fail")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("privacy-bound", help="Fisher-information bound for one sensor -> privacy.csv")
    p.add_argument("config")
    p.add_argument("--sensor", type=int, default=1, help="1-based sensor id")
    p.add_argument("--kmax", type=int, default=100_000)
    p.add_argument("--form", choices=("general", "rate"), default="rate")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_privacy_bound)

    p = sub.add_parser("tradeoff", help="privacy/convergence sweep over chi -> tradeoff.csv")
    p.add_argument("config")
    p.add_argument("--nu", type=float, default=0.96)
    p.add_argument("--chi-list", default="1.3,1.6,1.9")
    p.add_argument("--family", choices=("gaussian", "laplace", "cauchy"), default=None)
    p.add_argument("--sensor", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("highdim-compare", help="one-bit versus per-coordinate quantization")
    p.add_argument("--dimension", type=int, default=12)
    _common(p, horizon=10_000)
    p.set_defaults(func=cmd_highdim)

    p = sub.add_parser("event-rate", help="synthetic binary event-rate estimation")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--participation", type=float, default=0.7)
    p.add_argument("--chi", type=float, default=1.3)
    _common(p)
    p.set_defaults(func=cmd_event_rate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except (CheckFailed, PrivacyConditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
