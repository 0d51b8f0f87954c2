"""Named threshold sweeps used by the acceptance suite and scripts/run_thresholds.py."""

from __future__ import annotations

from dataclasses import dataclass

from .config import ExperimentConfig

DISTANCES = (4, 6, 8)
ACCEPTANCE_SEED = 2026


@dataclass(frozen=True)
class ThresholdPreset:
    name: str
    base: ExperimentConfig
    p_lo: float
    p_hi: float


def _base(**kw) -> ExperimentConfig:
    return ExperimentConfig(d=DISTANCES[0], trials=10_000, master_seed=ACCEPTANCE_SEED, **kw)


PRESETS = {
    p.name: p
    for p in (
        ThresholdPreset("code_capacity", _base(p=0.03, mode="code_capacity"), 0.02, 0.04),
        ThresholdPreset("erasure", _base(p=0.25, mode="erasure"), 0.18, 0.32),
        ThresholdPreset("n1_beta1000", _base(p=0.008, n=1, beta=1000.0), 0.005, 0.011),
        ThresholdPreset("n3_beta1000", _base(p=0.015, n=3, beta=1000.0), 0.011, 0.021),
        ThresholdPreset("n3_beta100", _base(p=0.015, n=3, beta=100.0), 0.010, 0.020),
        ThresholdPreset("n3_beta1000_fused", _base(p=0.016, n=3, beta=1000.0, fused_init_measure=True), 0.012, 0.022),
        ThresholdPreset(
            "n3_beta1000_fused_meas0.01",
            _base(p=0.018, n=3, beta=1000.0, fused_init_measure=True, meas_scale=0.01), 0.013, 0.024,
        ),
    )
}

# Fixed-p points for rate-vs-distance tables: (n, p) at beta = 1000.
SCALING_POINTS = ((3, 0.0125), (3, 0.01), (3, 0.0075), (3, 0.005), (1, 0.0075), (1, 0.005))
