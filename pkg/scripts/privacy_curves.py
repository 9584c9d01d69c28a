"""Fisher-information bounds of the reference network for each noise family."""

import argparse
from pathlib import Path

from privquant.experiments import privacy_curves
from privquant.privacy_analysis import FisherBoundConfig, bound_trajectory, log_grid, rate_fit
from privquant.scenarios import reference_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmax", type=int, default=100_000)
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--form", choices=("rate", "general"), default="rate")
    ap.add_argument("--out", type=Path, default=Path("out/privacy"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    times = log_grid(2, args.kmax, args.points)
    for family in ("gaussian", "laplace", "cauchy"):
        cfg = reference_config(family)
        curves = privacy_curves(cfg, range(cfg.sensor_count), times, args.form)
        curves.write_csv(args.out / f"privacy_{family}.csv")
        fit = rate_fit(bound_trajectory(FisherBoundConfig.from_algorithm(cfg, 0), times, args.form),
                       1000, args.kmax)
        print(f"{family:8s} sensor 1 slope {fit.slope:.4f}")


if __name__ == "__main__":
    main()
