"""Dephasing-biased stochastic noise and reproducible random streams.

Two-qubit gates suffer an X-type event with probability p/beta and an
independent Z-type event with probability p, each drawn uniformly from
{IP, PI, PP}. Preparation and measurement suffer a uniform {X, Y, Z} error
with probability p (measurement: p * meas_scale).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("circuit", "code_capacity", "erasure")

# Above this rate dense uniform draws beat geometric gap sampling.
_DENSE_CUTOFF = 0.05


@dataclass(frozen=True)
class NoiseModel:
    p: float
    beta: float = 1.0
    meas_scale: float = 1.0
    fused_init_measure: bool = False
    mode: str = "circuit"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")
        if self.beta < 1.0:
            raise ValueError(f"beta={self.beta} must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.meas_scale < 0 or self.p * self.meas_scale > 1.0:
            raise ValueError("measurement error probability outside [0, 1]")
        if self.mode == "circuit" and self.p * (1.0 + 1.0 / self.beta) > 1.0:
            raise ValueError("p(1 + 1/beta) must not exceed 1")

    @property
    def p_x(self) -> float:
        return self.p / self.beta

    @property
    def p_meas(self) -> float:
        return self.p * self.meas_scale


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``master_seed``.

    Streams depend only on (seed, key), never on execution order.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def bernoulli_indices(rng: np.random.Generator, prob: float, size: int) -> np.ndarray:
    """Sorted flat indices where an i.i.d. Bernoulli(prob) array of ``size`` is 1."""
    if prob <= 0.0 or size == 0:
        return np.empty(0, dtype=np.int64)
    if prob >= 1.0:
        return np.arange(size, dtype=np.int64)
    if prob > _DENSE_CUTOFF:
        return np.flatnonzero(rng.random(size) < prob)
    chunks = []
    pos = -1
    while True:
        want = int(prob * (size - pos) + 6.0 * np.sqrt(prob * size) + 16)
        gaps = rng.geometric(prob, size=want)
        hits = pos + np.cumsum(gaps)
        chunks.append(hits[hits < size])
        if hits[-1] >= size:
            break
        pos = int(hits[-1])
    return np.concatenate(chunks).astype(np.int64)


def _uniform_event_masks(rng, prob, shape):
    """Masks (first, second) for events from {IP, PI, PP} at total rate ``prob``."""
    size = int(np.prod(shape))
    first = np.zeros(size, dtype=bool)
    second = np.zeros(size, dtype=bool)
    hits = bernoulli_indices(rng, prob, size)
    kind = rng.integers(0, 3, size=hits.size)
    # kind 0: I(x)P, kind 1: P(x)I, kind 2: P(x)P
    second[hits[kind != 1]] = True
    first[hits[kind != 0]] = True
    return first.reshape(shape), second.reshape(shape)


def sample_cz_noise_batch(model: NoiseModel, rng: np.random.Generator, shape):
    """Vectorised CZ noise: masks ``(x_a, x_b, z_a, z_b)`` of ``shape``."""
    x_a, x_b = _uniform_event_masks(rng, model.p_x, shape)
    z_a, z_b = _uniform_event_masks(rng, model.p, shape)
    return x_a, x_b, z_a, z_b


def sample_pauli_batch(prob: float, rng: np.random.Generator, shape):
    """Vectorised uniform {X, Y, Z} error at rate ``prob``: masks ``(x, z)``."""
    return _uniform_event_masks(rng, prob, shape)


def _combine(x: bool, z: bool) -> str:
    return {(False, False): "I", (True, False): "X", (False, True): "Z", (True, True): "Y"}[(x, z)]


def sample_cz_noise(model: NoiseModel, rng: np.random.Generator) -> tuple[str, str]:
    """Pauli pair applied after one CZ gate; both sub-channels may fire."""
    x_a = x_b = z_a = z_b = False
    if rng.random() < model.p_x:
        kind = rng.integers(3)
        x_a, x_b = kind != 0, kind != 1
    if rng.random() < model.p:
        kind = rng.integers(3)
        z_a, z_b = kind != 0, kind != 1
    return _combine(x_a, z_a), _combine(x_b, z_b)


def _sample_single(prob: float, rng: np.random.Generator) -> str:
    if rng.random() < prob:
        return "XYZ"[rng.integers(3)]
    return "I"


def sample_prep_noise(model: NoiseModel, rng: np.random.Generator) -> str:
    """Error after |+> preparation; none in the fused init/measure variant."""
    if model.fused_init_measure:
        return "I"
    return _sample_single(model.p, rng)


def sample_meas_noise(model: NoiseModel, rng: np.random.Generator) -> str:
    return _sample_single(model.p_meas, rng)


def sample_code_capacity(model: NoiseModel, geometry, rng: np.random.Generator, shots: int = 1):
    """Direct face noise for the phenomenological reference modes.

    Returns ``(flips, located)``, each a bool array of shape (faces, shots).
    ``code_capacity`` flips every face with probability p. ``erasure`` erases
    every face with probability p; erased faces flip with probability 1/2.
    """
    if model.mode == "circuit":
        raise ValueError("sample_code_capacity is not defined in circuit mode")
    shape = (geometry.num_faces, shots)
    size = shape[0] * shots
    hits = np.zeros(size, dtype=bool)
    hits[bernoulli_indices(rng, model.p, size)] = True
    hits = hits.reshape(shape)
    if model.mode == "code_capacity":
        return hits, np.zeros(shape, dtype=bool)
    coins = rng.random(shape) < 0.5
    return hits & coins, hits
