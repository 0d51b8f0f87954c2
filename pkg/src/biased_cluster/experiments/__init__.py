from .config import ConfigError, ExperimentConfig, load_config
from .fitting import FitDegenerateError, FitError, ThresholdFit, fit_threshold, monotonicity_violations
from .presets import PRESETS, ThresholdPreset
from .runner import TrialBatchResult, run_batch, run_trial, sweep
from .threshold import locate_threshold

__all__ = [
    "ConfigError", "ExperimentConfig", "load_config", "FitDegenerateError", "FitError",
    "ThresholdFit", "fit_threshold", "monotonicity_violations", "TrialBatchResult", "run_batch",
    "run_trial", "sweep", "locate_threshold", "PRESETS", "ThresholdPreset",
]
