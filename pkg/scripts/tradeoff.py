"""Privacy/convergence trade-off sweep over the noise-growth parameter chi."""

import argparse
from pathlib import Path

from privquant.experiments import default_jobs, tradeoff_params, tradeoff_sweep
from privquant.scenarios import THETA, tradeoff_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nu", type=float, default=0.96)
    ap.add_argument("--chi", type=float, nargs="+", default=[1.3, 1.6, 1.9])
    ap.add_argument("--family", default="cauchy", choices=("gaussian", "laplace", "cauchy"))
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--horizon", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--jobs", type=int, default=default_jobs())
    ap.add_argument("--out", type=Path, default=Path("out/tradeoff"))
    args = ap.parse_args()

    points = [tradeoff_params(args.nu, chi, 1.0) for chi in args.chi]
    report = tradeoff_sweep(points, lambda p: tradeoff_config(p.chi, p.nu, args.family), THETA, args.repeats,
                            args.horizon, args.seed, args.jobs, out=args.out)
    for r in report.rows:
        print(f"chi={r.chi:g}: bound slope {r.bound_slope:.3f}, error slope {r.mse_slope:.3f}, "
              f"late error {r.late_mean:.4g} ± {r.late_stderr:.2g}")
    print(f"verdict: {report.verdict}")


if __name__ == "__main__":
    main()
