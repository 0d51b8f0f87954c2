"""Monte Carlo trials, batches and crash-safe sweeps.

Trials are grouped into fixed-size chunks; chunk ``j`` of a configuration
draws from its own stream keyed by (master_seed, physics key, j), so a batch
gives the same result for any number of workers or execution order.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from ..decoder import MatchingDecoder
from ..lattice import build_lattice, build_prep_schedule, extract_syndrome, logical_failure, run_preparation
from ..noise import sample_code_capacity, stream
from ..rep_code import CalibrationTable, calibrate_flip_rate
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "schema_version", "d", "n", "p", "beta", "meas_scale", "fused", "mode", "trials",
    "failures", "fail_x", "fail_y", "fail_z", "rate", "ci_lo", "ci_hi", "seed", "seconds",
)
# Columns that identify a batch for --resume.
KEY_COLUMNS = ("d", "n", "p", "beta", "meas_scale", "fused", "mode", "trials", "seed")

_CAL_STREAM, _TRIAL_STREAM = 0, 1


@lru_cache(maxsize=8)
def _lattice(d: int):
    geom = build_lattice(d)
    return geom, MatchingDecoder(geom)


@lru_cache(maxsize=16)
def _schedule(d: int, order: tuple):
    return build_prep_schedule(_lattice(d)[0], order)


_calibrations: dict = {}


def calibration_for(config: ExperimentConfig, cache_dir: Optional[Path] = None) -> CalibrationTable:
    """Calibration table for ``config``, memoised and optionally cached as JSON."""
    key = (config.physics_key(), config.master_seed, config.calibration_trials)
    if key in _calibrations:
        return _calibrations[key]
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"calibration_{key[0]:08x}_{key[1]}_{key[2]}.json"
        if path.exists():
            table = CalibrationTable.load(path)
            _calibrations[key] = table
            return table
    rng = stream(config.master_seed, config.physics_key(), _CAL_STREAM)
    table = calibrate_flip_rate(config, config.calibration_trials, rng)
    _calibrations[key] = table
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.save(path)
    return table


@dataclass
class ChunkOutcome:
    start: int
    failed: np.ndarray  # (S,)
    parities: np.ndarray  # (3, S)
    debug: list = field(default_factory=list)


def run_chunk(config: ExperimentConfig, chunk: int, calibration: Optional[CalibrationTable] = None,
              debug: bool = False) -> ChunkOutcome:
    geom, decoder = _lattice(config.d)
    start = chunk * config.chunk_size
    shots = min(config.chunk_size, config.trials - start)
    if shots <= 0:
        raise ValueError(f"chunk {chunk} is past the end of the batch")
    rng = stream(config.master_seed, config.physics_key(), _TRIAL_STREAM, chunk)
    noise = config.noise_model()
    F = geom.num_faces

    if config.mode == "circuit":
        q_rate = None
        if config.soft_info and noise.p > 0:
            cal = calibration or calibration_for(config)
            q_rate = np.repeat(np.concatenate([cal.face_rates(), cal.edge_rates()]), geom.d**3)
        prep = run_preparation(geom, _schedule(config.d, tuple(config.round_order)), config.n, noise, rng,
                               shots=shots, q_rate=q_rate)
        syndrome = extract_syndrome(geom, prep.readouts)
        errors = prep.readouts.majority_flip[:F]
    else:
        errors, located = sample_code_capacity(noise, geom, rng, shots)
        syndrome = extract_syndrome(geom, errors)
        if config.mode == "erasure":
            syndrome.face_prob = np.where(located, 0.5, 0.0)

    correction = decoder.decode_batch(syndrome)
    verdict = logical_failure(geom, errors, correction)
    out = ChunkOutcome(start, np.asarray(verdict.failed), verdict.parities)
    if debug:
        for s in range(shots):
            out.debug.append({
                "trial": start + s,
                "defects": np.flatnonzero(syndrome.odd_cells[:, s]).tolist(),
                "error_faces": np.flatnonzero(errors[:, s]).tolist(),
                "correction_faces": np.flatnonzero(correction[:, s]).tolist(),
                "parities": verdict.parities[:, s].astype(int).tolist(),
                "failed": bool(verdict.failed[s]),
            })
    return out


@dataclass(frozen=True)
class TrialVerdict:
    failed: bool
    parities: tuple


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialVerdict:
    """Replay one trial; identical to its entry in :func:`run_batch`."""
    if not 0 <= trial_index < config.trials:
        raise IndexError("trial index outside the batch")
    chunk, offset = divmod(trial_index, config.chunk_size)
    res = run_chunk(config, chunk)
    return TrialVerdict(bool(res.failed[offset]), tuple(int(b) for b in res.parities[:, offset]))


def wilson_interval(failures: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    lo, hi = proportion_confint(failures, trials, alpha=alpha, method="wilson")
    # the closed form leaves ~1e-19 rounding at the endpoints
    lo = 0.0 if failures == 0 else max(0.0, float(lo))
    hi = 1.0 if failures == trials else min(1.0, float(hi))
    return lo, hi


@dataclass
class TrialBatchResult:
    config: ExperimentConfig
    trials: int
    failures: int
    fail_axes: tuple
    seconds: float = 0.0

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.trials)

    @property
    def stderr(self) -> float:
        r = self.rate
        return float(np.sqrt(max(r * (1 - r), 1.0 / self.trials) / self.trials))

    def to_row(self) -> dict:
        c = self.config
        lo, hi = self.interval
        return {
            "schema_version": SCHEMA_VERSION, "d": c.d, "n": c.n, "p": repr(float(c.p)),
            "beta": repr(float(c.beta)), "meas_scale": repr(float(c.meas_scale)),
            "fused": int(c.fused_init_measure), "mode": c.mode, "trials": self.trials,
            "failures": self.failures, "fail_x": self.fail_axes[0], "fail_y": self.fail_axes[1],
            "fail_z": self.fail_axes[2], "rate": repr(self.rate), "ci_lo": repr(lo), "ci_hi": repr(hi),
            "seed": c.master_seed, "seconds": f"{self.seconds:.3f}",
        }

    def summary(self) -> dict:
        row = self.to_row()
        row["config"] = self.config.to_dict()
        return row


def _chunk_worker(args):
    config, chunk, cal = args
    res = run_chunk(config, chunk, cal)
    return res.failed.sum(), res.parities.sum(axis=1)


def run_batch(config: ExperimentConfig, workers: int = 1, cache_dir: Optional[Path] = None,
              debug_path: Optional[Path] = None) -> TrialBatchResult:
    t0 = time.perf_counter()
    cal = None
    if config.mode == "circuit" and config.soft_info and config.p > 0:
        cal = calibration_for(config, cache_dir)
    n_chunks = -(-config.trials // config.chunk_size)
    failures = 0
    axes = np.zeros(3, dtype=np.int64)
    if debug_path is not None:
        with open(debug_path, "w") as fh:
            for j in range(n_chunks):
                res = run_chunk(config, j, cal, debug=True)
                failures += int(res.failed.sum())
                axes += res.parities.sum(axis=1)
                for rec in res.debug:
                    fh.write(json.dumps(rec) + "\n")
    elif workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for f, a in pool.map(_chunk_worker, [(config, j, cal) for j in range(n_chunks)]):
                failures += int(f)
                axes += a
    else:
        for j in range(n_chunks):
            f, a = _chunk_worker((config, j, cal))
            failures += int(f)
            axes += a
    return TrialBatchResult(config, config.trials, failures, tuple(int(v) for v in axes),
                            time.perf_counter() - t0)


def _row_key(row: dict) -> tuple:
    return (int(row["d"]), int(row["n"]), float(row["p"]), float(row["beta"]), float(row["meas_scale"]),
            int(row["fused"]), row["mode"], int(row["trials"]), int(row["seed"]))


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sweep(configs: Iterable[ExperimentConfig], path, resume: bool = True, workers: int = 1,
          cache_dir: Optional[Path] = None) -> list[dict]:
    """Run every config, appending one CSV row per finished batch.

    With ``resume``, rows already present in ``path`` are kept and skipped.
    Returns the rows for ``configs`` in order.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("empty sweep grid")
    path = Path(path)
    done = {}
    if path.exists() and path.stat().st_size > 0:
        if not resume:
            raise FileExistsError(f"{path} exists; pass resume=True to continue it")
        done = {_row_key(r): r for r in read_table(path)}
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            csv.DictWriter(fh, CSV_COLUMNS).writeheader()
    rows = []
    for cfg in configs:
        probe = TrialBatchResult(cfg, cfg.trials, 0, (0, 0, 0)).to_row()
        key = _row_key(probe)
        if key in done:
            rows.append(done[key])
            continue
        res = run_batch(cfg, workers=workers, cache_dir=cache_dir)
        row = res.to_row()
        with open(path, "a", newline="") as fh:
            csv.DictWriter(fh, CSV_COLUMNS).writerow(row)
        log.info("d=%d n=%d p=%.5g: %d/%d failures (%.1fs)", cfg.d, cfg.n, cfg.p, res.failures, res.trials, res.seconds)
        done[key] = {k: str(v) for k, v in row.items()}
        rows.append(done[key])
    return rows
