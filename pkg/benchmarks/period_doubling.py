"""Influence of the periodic wrap-around on the interior Harnack ratio.

Runs the same ensemble on windows T = 4, 8, 16 at fixed dt and N, and
reports, for the bump trials, how the ensemble maximum and the per-trial
ratios move as T doubles.

    python3 benchmarks/period_doubling.py [--trials 30] [--s 0.5]
"""

import argparse
import math

import numpy as np

from fracpar.harness import HarnackConfig, harnack_experiment


def run(T, M, N, s, trials, seed):
    cfg = HarnackConfig(s=s, resolutions=((M, N),), T=T, trials=trials, seed=seed)
    _, rows = harnack_experiment(cfg)
    # lateral data is periodic in T by construction, so only bumps compare like for like
    return np.array([r.ratio for r in rows if r.data_kind == "bump"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--N", type=int, default=31)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    windows = [(4.0, 64), (8.0, 128), (16.0, 256)]
    ratios = {T: run(T, M, args.N, args.s, args.trials, args.seed) for T, M in windows}
    print(f"s={args.s} N={args.N} dt={windows[0][0] / windows[0][1]:g} trials={args.trials}")
    for T, _ in windows:
        r = ratios[T]
        print(f"T={T:<5g} ensemble max {np.nanmax(r):.6g}")
    d1 = np.nanmax(np.abs(ratios[4.0] - ratios[16.0]) / ratios[16.0])
    d2 = np.nanmax(np.abs(ratios[8.0] - ratios[16.0]) / ratios[16.0])
    print(f"max relative change vs T=16: T=4 {d1:.3g}, T=8 {d2:.3g}, reduction factor {d1 / d2 if d2 > 0 else math.inf:.3g}")


if __name__ == "__main__":
    main()
