"""Sweep the subset size in the finiteness experiment for one random dataset.

For each k the worst minimal level over k-point subsets is compared with the
level of the whole set; the ratio reaches 1 once k is large enough.
"""
import argparse

import numpy as np

from nonneg_whitney.feasibility import finiteness_gap


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--m", type=int, default=2)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    E = np.sort(rng.random(args.points) * 2)
    f = rng.random(args.points) * (rng.random(args.points) > 0.3)

    print(" k   worst subset     global      ratio")
    for k in range(1, args.points + 1):
        r = finiteness_gap(E, f, args.m, k_sharp=k)
        print(f"{k:2d}  {r['M_subset']:12.6g}  {r['M_global']:10.6g}  {r['ratio']:9.4f}")


if __name__ == "__main__":
    main()
