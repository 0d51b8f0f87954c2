"""Run configuration and the flat key = value config-file format."""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..noise import MODES, NoiseModel

FILE_KEYS = ("d", "n", "p", "beta", "meas_scale", "fused_init_measure", "mode", "trials", "master_seed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    p: float
    n: int = 1
    beta: float = 1.0
    meas_scale: float = 1.0
    fused_init_measure: bool = False
    mode: str = "circuit"
    trials: int = 1000
    master_seed: int = 0
    round_order: tuple = (0, 1, 2, 3)
    chunk_size: int = 250
    calibration_trials: int = 4000
    soft_info: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.d < 2:
            raise ConfigError("d must be >= 2")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        try:
            self.noise_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.p, self.beta, self.meas_scale, self.fused_init_measure, self.mode)

    def physics_key(self) -> int:
        """Stable 32-bit key of the physical parameters, used to separate random streams."""
        text = f"{self.d}|{self.n}|{self.p!r}|{self.beta!r}|{self.meas_scale!r}|{int(self.fused_init_measure)}|{self.mode}|{self.round_order}|{int(self.soft_info)}"
        return zlib.crc32(text.encode())

    def with_(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["round_order"] = list(self.round_order)
        return out


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_CASTS = {
    "d": int, "n": int, "p": float, "beta": float, "meas_scale": float,
    "fused_init_measure": _parse_bool, "mode": str, "trials": int, "master_seed": int,
}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FILE_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}; allowed: {', '.join(FILE_KEYS)}")
        try:
            values[key] = _CASTS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return values


def load_config(path, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    missing = [k for k in ("d", "p") if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(**{k: v for k, v in values.items() if k in known})


def dump_config_text(cfg: ExperimentConfig) -> str:
    d = cfg.to_dict()
    return "".join(f"{k} = {str(d[k]).lower() if isinstance(d[k], bool) else d[k]}\n" for k in FILE_KEYS)
