#!/usr/bin/env python3
"""Logical error rate versus d at fixed p (beta = 1000), printed as a table.

Reads results/acceptance/scaling*.csv written by run_thresholds.py; pass
--run to fill in missing points first.
"""

import argparse
from pathlib import Path

from biased_cluster.experiments import sweep
from biased_cluster.experiments.presets import SCALING_POINTS
from biased_cluster.experiments.runner import read_table, wilson_interval

from run_thresholds import OUT, scaling_configs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--run", action="store_true")
    ap.add_argument("--trials", type=int, default=10_000)
    args = ap.parse_args()
    if args.run:
        sweep(scaling_configs(SCALING_POINTS, args.trials), OUT / "scaling.csv", cache_dir=OUT / "calibration")
    rows = []
    for path in sorted(OUT.glob("scaling*.csv")):
        rows += read_table(path)
    if not rows:
        raise SystemExit(f"no distance-scaling rows under {OUT}; rerun with --run")
    # prefer the largest batch per point
    best = {}
    for r in rows:
        key = (int(r["n"]), float(r["p"]), int(r["d"]))
        if key not in best or int(r["trials"]) > int(best[key]["trials"]):
            best[key] = r
    print(f"{'n':>2} {'p':>8} {'d':>3} {'trials':>8} {'rate':>10}  95% CI")
    for (n, p, d), r in sorted(best.items(), key=lambda kv: (kv[0][0], -kv[0][1], kv[0][2])):
        f, t = int(r["failures"]), int(r["trials"])
        lo, hi = wilson_interval(f, t)
        print(f"{n:>2} {p:>8.4f} {d:>3} {t:>8} {f / t:>10.3e}  [{lo:.2e}, {hi:.2e}]")


if __name__ == "__main__":
    main()
