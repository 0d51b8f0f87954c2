#!/usr/bin/env python3
"""Run the named threshold sweeps and the distance-scaling points.

Results are appended to results/acceptance/*.csv and reused by
tests/test_acceptance.py, so running this first makes the acceptance
suite a cache read. Interrupted runs resume where they stopped.
"""

import argparse
import json
import logging
from pathlib import Path

from biased_cluster.experiments import PRESETS, locate_threshold, sweep
from biased_cluster.experiments.presets import ACCEPTANCE_SEED, DISTANCES, SCALING_POINTS
from biased_cluster.experiments.config import ExperimentConfig

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "results" / "acceptance"
CRITERION_13 = ((3, 0.005), (1, 0.0075))


def scaling_configs(points, trials):
    return [
        ExperimentConfig(d=d, p=p, n=n, beta=1000.0, trials=trials, master_seed=ACCEPTANCE_SEED)
        for n, p in points for d in DISTANCES
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help=f"subset of {sorted(PRESETS)} (default: all)")
    ap.add_argument("--scaling", action="store_true", help="also run every distance-scaling point at 1e4 trials")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    OUT.mkdir(parents=True, exist_ok=True)
    cache = OUT / "calibration"

    sweep(scaling_configs(CRITERION_13, 100_000), OUT / "scaling_1e5.csv", workers=args.workers, cache_dir=cache)
    if args.scaling:
        sweep(scaling_configs(SCALING_POINTS, 10_000), OUT / "scaling.csv", workers=args.workers, cache_dir=cache)
    for name in args.names or list(PRESETS):
        pre = PRESETS[name]
        fit, _ = locate_threshold(pre.base, DISTANCES, pre.p_lo, pre.p_hi, OUT / f"{name}.csv",
                                  workers=args.workers, cache_dir=cache)
        print(json.dumps({"preset": name, **fit.summary()}))


if __name__ == "__main__":
    main()
