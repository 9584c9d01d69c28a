"""Averaged error curves of the reference network, with and without communication.

Writes metrics.csv (communicating) and baseline.csv (isolated sensors).
"""

import argparse
from pathlib import Path

from privquant.experiments import default_jobs, run_repeats
from privquant.scenarios import THETA, reference_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--horizon", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--family", default="gaussian", choices=("gaussian", "laplace", "cauchy"))
    ap.add_argument("--jobs", type=int, default=default_jobs())
    ap.add_argument("--out", type=Path, default=Path("out/convergence"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    talk = run_repeats(reference_config(args.family), THETA, args.repeats, args.horizon, args.seed, args.jobs)
    alone = run_repeats(reference_config(args.family, communicate=False), THETA, args.repeats, args.horizon,
                        args.seed, args.jobs)
    talk.write_csv(args.out / "metrics.csv")
    alone.write_csv(args.out / "baseline.csv")
    print(f"k={args.horizon}: communicating {talk.mean[-1]:.4g} ± {talk.stderr[-1]:.2g}, "
          f"isolated {alone.mean[-1]:.4g} ± {alone.stderr[-1]:.2g}")


if __name__ == "__main__":
    main()
