"""Length-n repetition code in the dual basis.

Blocks are n physical qubits prepared in |+>. The encoded CZ is n^2
physical CZs in n parallel rounds, readout is a majority vote of n
X-measurements, and the reliability of each vote is summarised by a Bayes
posterior under i.i.d. outcome flips at a calibrated rate.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .noise import NoiseModel, sample_cz_noise_batch
from .pauli_core import PauliFrame, apply_cz

CALIBRATION_SCHEMA = 1


@dataclass(frozen=True)
class CzSchedule:
    """Rounds of (i, j) pairs: qubit i of block A with qubit j of block B."""

    n: int
    rounds: tuple[tuple[tuple[int, int], ...], ...]

    def pairs(self):
        return [pair for rnd in self.rounds for pair in rnd]

    def round_arrays(self):
        return [(np.array([i for i, _ in r]), np.array([j for _, j in r])) for r in self.rounds]


def encoded_cz_schedule(n: int) -> CzSchedule:
    """Round-robin: in round t, qubit i of A meets qubit (i + t) mod n of B."""
    if n < 1:
        raise ValueError("repetition code length must be >= 1")
    rounds = tuple(tuple((i, (i + t) % n) for i in range(n)) for t in range(n))
    return CzSchedule(n, rounds)


def apply_encoded_cz(
    frame: PauliFrame,
    block_a,
    block_b,
    schedule: CzSchedule,
    noise: Optional[NoiseModel],
    rng: Optional[np.random.Generator],
) -> PauliFrame:
    """Run the encoded CZ between blocks (or arrays of blocks) in place.

    ``block_a``/``block_b`` are physical-index arrays of shape (n,) or
    (blocks, n); row k of A is paired with row k of B. Every physical gate
    is followed by CZ noise; there are no idle locations between rounds.
    """
    a = np.atleast_2d(np.asarray(block_a))
    b = np.atleast_2d(np.asarray(block_b))
    n = schedule.n
    if a.shape != b.shape or a.shape[1] != n:
        raise ValueError(f"blocks must have shape (k, {n})")
    if np.intersect1d(a, b).size or len(np.unique(a)) != a.size or len(np.unique(b)) != b.size:
        raise ValueError("encoded CZ blocks overlap")
    noisy = noise is not None and noise.p > 0
    for ia, ib in schedule.round_arrays():
        qa = a[:, ia].ravel()
        qb = b[:, ib].ravel()
        apply_cz(frame, qa, qb)
        if noisy:
            x_a, x_b, z_a, z_b = sample_cz_noise_batch(noise, rng, (qa.size, frame.shots))
            frame.x[qa] ^= x_a
            frame.x[qb] ^= x_b
            frame.z[qa] ^= z_a
            frame.z[qb] ^= z_b
    return frame


@dataclass(frozen=True)
class RepBlockReadout:
    outcomes: tuple[int, ...]
    majority_flip: int
    located: bool
    posterior_flip_prob: Optional[float] = None


def majority_vote(outcomes, located_allowed: bool = True) -> RepBlockReadout:
    bits = tuple(int(b) for b in outcomes)
    n = len(bits)
    if n < 1:
        raise ValueError("need at least one outcome")
    ones = sum(bits)
    if 2 * ones == n:
        if not located_allowed:
            raise ValueError("even split vote with located errors disallowed")
        # located: the decoder sees a coin flip, keep the first outcome as the guess
        return RepBlockReadout(bits, bits[0], True, 0.5)
    return RepBlockReadout(bits, int(2 * ones > n), False)


def posterior_from_minority(minority, n: int, q):
    """P(majority vote wrong | ``minority`` dissenting outcomes) for i.i.d. flips at rate q.

    Vectorised over ``minority`` and ``q``; split votes give exactly 1/2.
    """
    k = np.asarray(minority, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(q < 0) or np.any(q >= 0.5):
        raise ValueError("per-qubit flip probability must lie in [0, 1/2)")
    with np.errstate(divide="ignore"):
        # log-odds of "majority wrong" vs "majority right"
        llr = (n - 2 * k) * (np.log(q) - np.log1p(-q))
    post = 1.0 / (1.0 + np.exp(-llr))
    return np.where(2 * k == n, 0.5, post)


def posterior_flip_prob(outcomes, q_phys: float) -> float:
    bits = np.asarray(outcomes, dtype=int)
    n = bits.size
    ones = int(bits.sum())
    return float(posterior_from_minority(min(ones, n - ones), n, q_phys))


@dataclass
class CalibrationTable:
    """Empirical per-qubit X-measurement flip rate for each face/edge orientation class."""

    key: dict
    flip_rate: dict[str, float]
    trials: int
    counts: dict[str, int] = field(default_factory=dict)
    totals: dict[str, int] = field(default_factory=dict)
    schema_version: int = CALIBRATION_SCHEMA

    def face_rates(self) -> np.ndarray:
        return np.array([self.flip_rate[f"face{k}"] for k in range(3)])

    def edge_rates(self) -> np.ndarray:
        return np.array([self.flip_rate[f"edge{k}"] for k in range(3)])

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> CalibrationTable:
        data = json.loads(text)
        if data.get("schema_version") != CALIBRATION_SCHEMA:
            raise ValueError("calibration schema version mismatch")
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> CalibrationTable:
        return cls.from_json(Path(path).read_text())


# Rates are capped just below 1/2 so the posterior stays defined.
_MAX_RATE = 0.5 - 1e-9


def calibrate_flip_rate(config, calibration_trials: int, rng: np.random.Generator) -> CalibrationTable:
    """Estimate per-class physical flip rates by simulating the noisy preparation.

    ``config`` needs ``d``, ``n`` and ``noise_model()``. Flip rates are
    averaged over rep index and over all qubits of the same type and
    orientation.
    """
    from .lattice import build_lattice, build_prep_schedule, run_preparation

    if calibration_trials < 1000:
        raise ValueError("calibration needs at least 1000 trials")
    noise = config.noise_model()
    geom = build_lattice(config.d)
    sched = build_prep_schedule(geom, getattr(config, "round_order", None))
    counts = np.zeros(6, dtype=np.int64)
    totals = np.zeros(6, dtype=np.int64)
    cls = geom.qubit_type * 3 + geom.orientation  # face0..2, edge0..2
    chunk = 500
    done = 0
    while done < calibration_trials:
        shots = min(chunk, calibration_trials - done)
        prep = run_preparation(geom, sched, config.n, noise, rng, shots=shots)
        per_qubit = prep.readouts.flips.sum(axis=(1, 2))
        counts += np.bincount(cls, weights=per_qubit, minlength=6).astype(np.int64)
        totals += np.bincount(cls, minlength=6) * config.n * shots
        done += shots
    names = [f"face{k}" for k in range(3)] + [f"edge{k}" for k in range(3)]
    rates = {nm: min(float(c / t), _MAX_RATE) for nm, c, t in zip(names, counts, totals)}
    if noise.p > 0 and min(rates[f"face{k}"] for k in range(3)) == 0.0:
        raise ValueError("calibration saw no flips; increase calibration_trials")
    key = {
        "d": config.d, "n": config.n, "p": noise.p, "beta": noise.beta,
        "meas_scale": noise.meas_scale, "fused": noise.fused_init_measure, "mode": noise.mode,
    }
    return CalibrationTable(
        key, rates, calibration_trials,
        counts={nm: int(c) for nm, c in zip(names, counts)},
        totals={nm: int(t) for nm, t in zip(names, totals)},
    )


def nominal_flip_rate(noise: NoiseModel, n: int) -> float:
    """First-order per-qubit flip rate of a face qubit, used when no calibration is given."""
    per_event = 2.0 / 3.0
    prep = 0.0 if noise.fused_init_measure else noise.p
    rate = per_event * (prep + noise.p_meas + 4 * n * noise.p)
    return min(rate, _MAX_RATE)
