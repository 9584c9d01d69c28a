"""One-bit (one coordinate per step) versus per-coordinate quantization in 12 dimensions."""

import argparse
from pathlib import Path

from privquant.experiments import default_jobs, highdim_compare
from privquant.scenarios import highdim_config, highdim_theta


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dimension", type=int, default=12)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=20240612)
    ap.add_argument("--jobs", type=int, default=default_jobs())
    ap.add_argument("--out", type=Path, default=Path("out/highdim"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    theta = highdim_theta(dimension=args.dimension)
    res = highdim_compare(lambda c: highdim_config(c, args.dimension), theta, args.repeats, args.horizon,
                          args.seed, args.jobs)
    res.write_csv(args.out / "highdim.csv")
    print(f"k={args.horizon}: one-bit {res.one_bit_mse[-1]:.4g}, multi-bit {res.multi_bit_mse[-1]:.4g}, "
          f"bits per live edge-step ratio {res.bit_ratio:g}")


if __name__ == "__main__":
    main()
