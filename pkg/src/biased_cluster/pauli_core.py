"""Pauli-frame bookkeeping for prep |+>, CZ and X-measurement circuits.

A frame stores one X bit and one Z bit per physical qubit and per shot, so
the same code path serves a single trial (``shots=1``) and a vectorised
chunk of trials. Global phases are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

Index = Union[int, np.ndarray]

PAULIS = ("X", "Y", "Z")


class PhysicalQubitId(NamedTuple):
    """Address of one physical qubit in the concatenated layout."""

    cluster_qubit: int
    rep_index: int

    def flat(self, n: int) -> int:
        if not 0 <= self.rep_index < n:
            raise ValueError(f"rep_index {self.rep_index} outside [0, {n})")
        return self.cluster_qubit * n + self.rep_index


@dataclass
class PauliFrame:
    x: np.ndarray
    z: np.ndarray
    measured: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.x.shape != self.z.shape:
            raise ValueError("x and z records must have identical shape")
        if self.measured is None:
            self.measured = np.zeros(self.x.shape[0], dtype=bool)

    @property
    def num_qubits(self) -> int:
        return self.x.shape[0]

    @property
    def shots(self) -> int:
        return self.x.shape[1]

    def copy(self) -> PauliFrame:
        return PauliFrame(self.x.copy(), self.z.copy(), self.measured.copy())

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())


def new_frame(num_qubits: int, shots: int = 1) -> PauliFrame:
    if num_qubits < 1:
        raise ValueError("a frame needs at least one qubit")
    if shots < 1:
        raise ValueError("a frame needs at least one shot")
    shape = (num_qubits, shots)
    return PauliFrame(np.zeros(shape, dtype=bool), np.zeros(shape, dtype=bool))


def _check_range(frame: PauliFrame, q: Index) -> None:
    q = np.asarray(q)
    if q.size and (q.min() < 0 or q.max() >= frame.num_qubits):
        raise IndexError(f"qubit index out of range for {frame.num_qubits}-qubit frame")


def apply_pauli(frame: PauliFrame, q: Index, pauli: str, shots=slice(None)) -> PauliFrame:
    """Multiply ``pauli`` onto qubit(s) ``q``. Y toggles both records."""
    _check_range(frame, q)
    if pauli not in PAULIS:
        raise ValueError(f"unknown Pauli {pauli!r}")
    if pauli in ("X", "Y"):
        frame.x[q, shots] ^= True
    if pauli in ("Z", "Y"):
        frame.z[q, shots] ^= True
    return frame


def apply_cz(frame: PauliFrame, a: Index, b: Index) -> PauliFrame:
    """Conjugate the frame by CZ on the pair(s) ``(a, b)``.

    With index arrays, all pairs act in one layer and must be disjoint.
    X on one side picks up Z on the other; Z commutes through untouched.
    """
    _check_range(frame, a)
    _check_range(frame, b)
    a_arr, b_arr = np.atleast_1d(a), np.atleast_1d(b)
    if np.any(a_arr == b_arr):
        raise ValueError("CZ needs two distinct qubits")
    xa = frame.x[a_arr]
    xb = frame.x[b_arr]
    frame.z[a_arr] ^= xb
    frame.z[b_arr] ^= xa
    return frame


def measure_x_flip(frame: PauliFrame, q: Index) -> np.ndarray:
    """Flip bit(s) of an X-basis measurement relative to the noiseless run.

    Z and Y anticommute with X and flip the outcome. Each qubit may be
    measured once. A scalar ``q`` on a single-shot frame gives a bool;
    otherwise the result keeps the shot axis.
    """
    _check_range(frame, q)
    q_arr = np.atleast_1d(q)
    if frame.measured[q_arr].any():
        raise RuntimeError("qubit measured twice in one trial")
    if len(np.unique(q_arr)) != len(q_arr):
        raise RuntimeError("qubit measured twice in one trial")
    frame.measured[q_arr] = True
    flips = frame.z[q_arr].copy()
    if np.ndim(q) == 0:
        return bool(flips[0, 0]) if frame.shots == 1 else flips[0]
    return flips
