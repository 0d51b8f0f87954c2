"""Two-stage threshold location: coarse bracket, then a fine grid around the crossing."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .fitting import ThresholdFit, crossing_estimate, fit_threshold, table_arrays
from .runner import sweep


def _grid(lo: float, hi: float, points: int) -> list[float]:
    return [float(f"{p:.6g}") for p in np.linspace(lo, hi, points)]


def locate_threshold(
    base: ExperimentConfig,
    distances: Sequence[int],
    p_lo: float,
    p_hi: float,
    path,
    coarse_points: int = 6,
    coarse_trials: int = 2000,
    fine_points: int = 7,
    fine_halfwidth: float = 0.08,
    trials: Optional[int] = None,
    workers: int = 1,
    cache_dir: Optional[Path] = None,
) -> tuple[ThresholdFit, list[dict]]:
    """Bracket the crossing on [p_lo, p_hi], then fit a fine grid of relative half-width ``fine_halfwidth``."""
    trials = trials or base.trials
    coarse = [base.with_(d=d, p=p, trials=coarse_trials) for d in distances for p in _grid(p_lo, p_hi, coarse_points)]
    rows = sweep(coarse, path, resume=True, workers=workers, cache_dir=cache_dir)
    d, p, t, f = table_arrays(rows)
    p0 = crossing_estimate(d, p, f / t)
    fine_ps = _grid(p0 * (1 - fine_halfwidth), p0 * (1 + fine_halfwidth), fine_points)
    fine = [base.with_(d=d, p=p, trials=trials) for d in distances for p in fine_ps]
    fine_rows = sweep(fine, path, resume=True, workers=workers, cache_dir=cache_dir)
    return fit_threshold(fine_rows), fine_rows
