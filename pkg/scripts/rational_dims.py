#!/usr/bin/env python3
"""Tabulate dimension r/s constructions and the floor-power approximation gap."""

import argparse
from fractions import Fraction

from fractaldim.digit_fractal import make_floor_power, make_rational_dim, ratio_log


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base", type=int, default=10)
    ap.add_argument("--max-s", type=int, default=5)
    args = ap.parse_args()
    d = args.base
    print(f"base {d}: ratio at m = 100 s, and the single-digit floor construction")
    print(f"{'r/s':>6} {'block ratio':>12} {'floor F':>8} {'log_d F':>9} {'gap':>9}")
    seen = set()
    for s in range(1, args.max_s + 1):
        for r in range(1, s + 1):
            q = Fraction(r, s)
            if q in seen:
                continue
            seen.add(q)
            block = ratio_log(make_rational_dim(d, r, s), 100 * s)
            fp = make_floor_power(d, r, s)
            print(f"{str(q):>6} {block:12.9f} {fp.schedule.f:>8} {fp.dimension:9.6f} {fp.gap:9.6f}")


if __name__ == "__main__":
    main()
