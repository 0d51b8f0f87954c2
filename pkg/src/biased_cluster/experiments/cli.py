"""Command-line entry point.

Exit codes: 0 success, 1 usage, 2 runtime, 3 fit degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from ..lattice import build_lattice
from ..noise import stream
from ..rep_code import calibrate_flip_rate
from .config import ConfigError, load_config
from .presets import DISTANCES, PRESETS
from .fitting import FitDegenerateError, FitError, fit_threshold, monotonicity_violations
from .runner import CSV_COLUMNS, read_table, run_batch, sweep
from .threshold import locate_threshold

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _add_config_args(p: argparse.ArgumentParser, need_point: bool = True) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    if need_point:
        p.add_argument("--d", type=int)
        p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--meas-scale", type=float)
    p.add_argument("--fused", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--mode", choices=("circuit", "code_capacity", "erasure"))
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--chunk-size", type=int)
    p.add_argument("--calibration-trials", type=int)
    p.add_argument("--round-order", type=_ints)
    p.add_argument("--no-soft-info", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cache-dir", type=Path)


def _config_from(args, **point):
    overrides = dict(
        n=args.n, beta=args.beta, meas_scale=args.meas_scale, fused_init_measure=args.fused,
        mode=args.mode, trials=args.trials, master_seed=args.seed, chunk_size=args.chunk_size,
        calibration_trials=args.calibration_trials,
        round_order=tuple(args.round_order) if args.round_order else None,
    )
    if args.no_soft_info:
        overrides["soft_info"] = False
    for key in ("d", "p"):
        if key in point:
            overrides[key] = point[key]
        elif hasattr(args, key):
            overrides[key] = getattr(args, key)
    return load_config(args.config, **overrides)


def _write_rows(rows, out) -> None:
    if out is None:
        writer = csv.DictWriter(sys.stdout, CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
        return
    new = not out.exists() or out.stat().st_size == 0
    with open(out, "a", newline="") as fh:
        writer = csv.DictWriter(fh, CSV_COLUMNS)
        if new:
            writer.writeheader()
        writer.writerows(rows)


def cmd_simulate(args) -> int:
    cfg = _config_from(args)
    res = run_batch(cfg, workers=args.workers, cache_dir=args.cache_dir, debug_path=args.debug_dump)
    _write_rows([res.to_row()], args.out)
    if args.json:
        args.json.write_text(json.dumps(res.summary(), indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _config_from(args, d=args.ds[0], p=args.ps[0])
    configs = [base.with_(d=d, p=p) for d in args.ds for p in args.ps]
    if args.out.exists() and args.out.stat().st_size > 0 and not args.resume:
        raise UsageError(f"{args.out} exists; pass --resume to continue it")
    rows = sweep(configs, args.out, resume=True, workers=args.workers, cache_dir=args.cache_dir)
    if args.json:
        args.json.write_text(json.dumps({"schema_version": 1, "rows": rows}, indent=2))
    return EXIT_OK


_FILTERS = {"n": int, "beta": float, "meas_scale": float, "fused": int, "mode": str}


def cmd_fit(args) -> int:
    rows = read_table(args.table)
    if not rows:
        raise UsageError(f"{args.table} has no rows")
    missing = [c for c in ("d", "p", "trials", "failures") if c not in rows[0]]
    if missing:
        raise UsageError(f"{args.table} is missing required columns: {', '.join(missing)}")
    for key, cast in _FILTERS.items():
        want = getattr(args, key)
        if want is not None:
            rows = [r for r in rows if cast(r[key]) == cast(want)]
    if args.min_trials:
        rows = [r for r in rows if int(r["trials"]) >= args.min_trials]
    for d, lo, hi in monotonicity_violations(rows):
        logging.warning("d=%d: rate drops between p=%.5g and p=%.5g by more than 3 sigma", d, lo, hi)
    fit = fit_threshold(rows, finite_size=args.finite_size)
    text = json.dumps({"schema_version": 1, **fit.summary()}, indent=2)
    print(text)
    if args.json:
        args.json.write_text(text)
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.preset:
        pre = PRESETS[args.preset]
        base = pre.base
        ds = args.ds or list(DISTANCES)
        p_lo = pre.p_lo if args.p_lo is None else args.p_lo
        p_hi = pre.p_hi if args.p_hi is None else args.p_hi
    else:
        if args.ds is None or args.p_lo is None or args.p_hi is None:
            raise UsageError("threshold needs --ds, --p-lo and --p-hi (or --preset)")
        ds, p_lo, p_hi = args.ds, args.p_lo, args.p_hi
        base = _config_from(args, d=ds[0], p=p_lo)
    fit, _ = locate_threshold(
        base, ds, p_lo, p_hi, args.out, coarse_points=args.coarse_points,
        coarse_trials=args.coarse_trials, fine_points=args.fine_points,
        fine_halfwidth=args.fine_halfwidth, workers=args.workers, cache_dir=args.cache_dir,
    )
    text = json.dumps({"schema_version": 1, **fit.summary()}, indent=2)
    print(text)
    if args.json:
        args.json.write_text(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config_from(args)
    rng = stream(cfg.master_seed, cfg.physics_key(), 0)
    table = calibrate_flip_rate(cfg, cfg.calibration_trials, rng)
    if args.out:
        table.save(args.out)
    else:
        print(table.to_json())
    return EXIT_OK


def cmd_geometry_dump(args) -> int:
    text = build_lattice(args.d).dump_json()
    if args.out:
        args.out.write_text(text)
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biased-cluster", description="Concatenated repetition/cluster-state threshold lab")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one batch and emit a CSV row")
    _add_config_args(p)
    p.add_argument("--out", type=Path, help="append the row to this CSV (default: stdout)")
    p.add_argument("--json", type=Path, help="write a JSON summary")
    p.add_argument("--debug-dump", type=Path, help="write per-trial syndrome/correction JSON lines")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a p x d grid, appending rows to a CSV")
    _add_config_args(p, need_point=False)
    p.add_argument("--ps", type=_floats, required=True)
    p.add_argument("--ds", type=_ints, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--resume", action="store_true", help="skip rows already in --out")
    p.add_argument("--json", type=Path)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit the finite-size scaling ansatz to a result CSV")
    p.add_argument("--table", type=Path, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--meas-scale", type=float)
    p.add_argument("--fused", type=int, choices=(0, 1))
    p.add_argument("--mode")
    p.add_argument("--min-trials", type=int)
    p.add_argument("--finite-size", action="store_true", help="headline the D d^-mu form")
    p.add_argument("--json", type=Path)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("threshold", help="coarse bracket + fine sweep + fit")
    _add_config_args(p, need_point=False)
    p.add_argument("--preset", choices=sorted(PRESETS), help="named sweep; other physics flags are ignored")
    p.add_argument("--ds", type=_ints)
    p.add_argument("--p-lo", type=float)
    p.add_argument("--p-hi", type=float)
    p.add_argument("--coarse-points", type=int, default=6)
    p.add_argument("--coarse-trials", type=int, default=2000)
    p.add_argument("--fine-points", type=int, default=7)
    p.add_argument("--fine-halfwidth", type=float, default=0.08)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--json", type=Path)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("calibrate", help="estimate per-class physical flip rates")
    _add_config_args(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("geometry-dump", help="export qubit and cell tables as JSON")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_geometry_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(asctime)s %(levelname)s %(message)s")
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FitDegenerateError as exc:
        print(f"fit degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
