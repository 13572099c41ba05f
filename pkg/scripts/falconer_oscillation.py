#!/usr/bin/env python3
"""Print the covering ratio of the complementary NGrowth sets at every block end.

The A ratio climbs towards 1 at the end of each A-block and collapses at the
end of each B-block; the ratio of A x B is 1 at every level.
"""

import argparse

from fractaldim.digit_fractal import Partition, make_ngrowth, product_schedule, ratio


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--blocks", type=int, default=40, help="number of blocks (A and B together)")
    ap.add_argument("--seeds", default="1,1")
    args = ap.parse_args()
    seed_a, seed_b = (int(x) for x in args.seeds.split(","))
    p = make_ngrowth(seed_a, seed_b)
    A, B = Partition(p, "A"), Partition(p, "B")
    ab = product_schedule(A, B)
    print(f"{'block':>5} {'role':>4} {'end level':>48} {'ratio A':>9} {'ratio B':>9} {'A x B':>5}")
    for j in range(args.blocks):
        m = p.block_end(j)
        ra, rb = ratio(A, m), ratio(B, m)
        print(f"{j:>5} {p.role_of(m):>4} {m:>48} {float(ra):9.6f} {float(rb):9.6f} {str(ratio(ab, m)):>5}")


if __name__ == "__main__":
    main()
