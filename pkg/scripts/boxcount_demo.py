#!/usr/bin/env python3
"""Box-count a sampled digit fractal and compare with the exact dimension."""

import argparse

from fractaldim.digit_fractal import Constant, cantor, make_rational_dim, sample_points
from fractaldim.estimator import estimate_dimension

SCHEDULES = {
    "cantor": cantor,
    "quarter": lambda: Constant(4, 2),
    "fifths": lambda: Constant(5, 3),
    "rational-3-1-2": lambda: make_rational_dim(3, 1, 2),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depths", default="6,8,10,12")
    args = ap.parse_args()
    depths = [int(x) for x in args.depths.split(",")]
    print(f"{'schedule':>15} {'depth':>5} {'points':>8} {'window':>8} {'slope':>8} {'exact':>8}")
    for name, make in SCHEDULES.items():
        sched = make()
        for depth in depths:
            cloud = sample_points(sched, depth, cap=2_000_000)
            _, fit = estimate_dimension(cloud)
            lo, hi = fit.levels_used
            print(f"{name:>15} {depth:>5} {len(cloud):>8} {f'{lo}..{hi}':>8} "
                  f"{fit.slope:8.4f} {sched.analytic_dimension():8.4f}")


if __name__ == "__main__":
    main()
