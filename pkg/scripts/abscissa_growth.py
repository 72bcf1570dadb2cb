#!/usr/bin/env python3
"""Tabulate zeta partial sums near the abscissa to show how each divergence test behaves.

At s = delta the partial sums grow linearly in the depth on both bundled
graphs, so the depth-60 value is about twice the depth-30 value.  The
script prints both the plain ratio and the relative increment so the two
tests can be compared side by side.
"""

import argparse
import csv
import sys

from kbratteli import instances
from kbratteli.kgraph import perron_data
from kbratteli.spectral import growth_heuristic, zeta_partial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--max-depth", type=int, default=120)
    ap.add_argument("--step", type=int, default=10)
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["graph", "s", "depth", "partial_sum"])
    for name, doc in (("lambda2", instances.LAMBDA2), ("ex_b", instances.EX_B)):
        g = instances.load(doc)
        pd = perron_data(g)
        for s in (args.delta - 0.05, args.delta, args.delta + 0.05):
            for n in range(0, args.max_depth + 1, args.step):
                w.writerow([name, f"{s:g}", n, repr(zeta_partial(g, pd, args.delta, s, n))])
            h = growth_heuristic(g, pd, args.delta, s)
            print(f"# {name} s={s:g}: ratio P60/P30 = {h['ratio']:.4f} (flag {h['ratio_flag']}), "
                  f"increment = {h['increment_ratio']:.4f} (flag {h['increment_flag']})", file=sys.stderr)


if __name__ == "__main__":
    main()
