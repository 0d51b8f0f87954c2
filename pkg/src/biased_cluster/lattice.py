"""Periodic topological cluster-state lattice and its noisy preparation.

Coordinates are doubled on a (2d)^3 torus. Primal cells sit at all-odd
sites, face qubits at sites with two odd coordinates and edge qubits at
sites with one. Face (c, k) has normal k and lies between cells c - e_k
and c; edge (c, a) is parallel to axis a.

Qubit numbering: faces first, ``k * d^3 + cell``, then edges,
``3 d^3 + a * d^3 + cell``, where ``cell = (x * d + y) * d + z``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .noise import NoiseModel, sample_pauli_batch
from .pauli_core import PauliFrame, measure_x_flip, new_frame
from .rep_code import RepBlockReadout, apply_encoded_cz, encoded_cz_schedule, posterior_from_minority

FACE, EDGE = 0, 1


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    d: int
    coords: np.ndarray  # (Q, 3) doubled coordinates
    qubit_type: np.ndarray  # (Q,) FACE or EDGE
    orientation: np.ndarray  # (Q,) face normal or edge direction
    neighbors: np.ndarray  # (Q, 4)
    face_cells: np.ndarray  # (F, 2)
    cell_faces: np.ndarray  # (C, 6)
    adjacency: np.ndarray  # (12 d^3, 4): face, edge, offset axis, offset sign
    cross_sections: tuple  # per axis, faces crossing the plane at that axis' origin

    @property
    def num_cells(self) -> int:
        return self.d**3

    @property
    def num_faces(self) -> int:
        return 3 * self.d**3

    @property
    def num_qubits(self) -> int:
        return 6 * self.d**3

    def cell_index(self, x: int, y: int, z: int) -> int:
        d = self.d
        return ((x % d) * d + (y % d)) * d + (z % d)

    def cell_coord(self, cell: int) -> tuple[int, int, int]:
        d = self.d
        return cell // (d * d), (cell // d) % d, cell % d

    def face_index(self, cell, normal: int) -> int:
        if not isinstance(cell, (int, np.integer)):
            cell = self.cell_index(*cell)
        return normal * self.d**3 + int(cell)

    def cell_boundary(self, cell: int) -> np.ndarray:
        return self.cell_faces[cell]

    def edge_cycle(self, edge: int) -> np.ndarray:
        """The 4 faces around an edge: a closed loop of the cell graph.

        It is the face support of that edge's cluster stabilizer, so adding
        it to a flip set changes neither the syndrome nor the homology.
        """
        if self.qubit_type[edge] != EDGE:
            raise ValueError(f"qubit {edge} is not an edge")
        return self.neighbors[edge]

    def to_dict(self) -> dict:
        qubits = [
            {
                "index": q,
                "type": "face" if self.qubit_type[q] == FACE else "edge",
                "orientation": "xyz"[self.orientation[q]],
                "coords": self.coords[q].tolist(),
                "neighbors": self.neighbors[q].tolist(),
            }
            for q in range(self.num_qubits)
        ]
        cells = [
            {"index": c, "coord": list(self.cell_coord(c)), "faces": self.cell_faces[c].tolist()}
            for c in range(self.num_cells)
        ]
        return {"schema_version": 1, "d": self.d, "qubits": qubits, "cells": cells}

    def dump_json(self) -> str:
        return json.dumps(self.to_dict())


def build_lattice(d: int) -> LatticeGeometry:
    if d < 2:
        raise ValueError("distance must be >= 2; at d=1 a face's two cells coincide")
    L = 2 * d
    n_cells = d**3
    grid = np.indices((d, d, d)).reshape(3, -1).T  # cell coords in cell-index order

    coords = np.empty((6 * n_cells, 3), dtype=np.int64)
    qtype = np.empty(6 * n_cells, dtype=np.int64)
    orient = np.empty(6 * n_cells, dtype=np.int64)
    eye = np.eye(3, dtype=np.int64)
    for k in range(3):
        sl = slice(k * n_cells, (k + 1) * n_cells)
        coords[sl] = (2 * grid + 1 - eye[k]) % L
        qtype[sl], orient[sl] = FACE, k
    for a in range(3):
        sl = slice((3 + a) * n_cells, (4 + a) * n_cells)
        coords[sl] = (2 * grid + eye[a]) % L
        qtype[sl], orient[sl] = EDGE, a

    lookup = -np.ones((L, L, L), dtype=np.int64)
    lookup[coords[:, 0], coords[:, 1], coords[:, 2]] = np.arange(6 * n_cells)

    neighbors = np.empty((6 * n_cells, 4), dtype=np.int64)
    adjacency = []
    for q in range(6 * n_cells):
        # neighbours differ by +-1 along each odd axis of a face / even axis of an edge
        axes = [ax for ax in range(3) if (coords[q, ax] % 2 == 1) == (qtype[q] == FACE)]
        slot = 0
        for ax in axes:
            for sign in (1, -1):
                c = coords[q].copy()
                c[ax] = (c[ax] + sign) % L
                nb = lookup[tuple(c)]
                neighbors[q, slot] = nb
                slot += 1
                if qtype[q] == FACE:
                    adjacency.append((q, nb, ax, sign))

    cell_idx = lambda g: ((g[:, 0] % d) * d + (g[:, 1] % d)) * d + (g[:, 2] % d)
    face_cells = np.empty((3 * n_cells, 2), dtype=np.int64)
    cell_faces = np.empty((n_cells, 6), dtype=np.int64)
    cells = np.arange(n_cells)
    for k in range(3):
        face_cells[k * n_cells:(k + 1) * n_cells, 0] = cells
        face_cells[k * n_cells:(k + 1) * n_cells, 1] = cell_idx(grid - eye[k])
        cell_faces[:, 2 * k] = k * n_cells + cells
        cell_faces[:, 2 * k + 1] = k * n_cells + cell_idx(grid + eye[k])

    cross = tuple(k * n_cells + np.flatnonzero(grid[:, k] == 0) for k in range(3))
    return LatticeGeometry(
        d, coords, qtype, orient, neighbors, face_cells, cell_faces,
        np.array(adjacency, dtype=np.int64), cross,
    )


def _round_color(normal, axis, sign):
    # 4-colouring of face-edge adjacencies: for a fixed face the four
    # (axis, sign) offsets differ, and for a fixed edge the offsets from its
    # two face orientations differ because (normal, axis) -> axis == normal+1
    # is antisymmetric.
    cyc = (axis == (normal + 1) % 3).astype(np.int64)
    return cyc + 2 * (sign < 0)


@dataclass(frozen=True)
class PrepSchedule:
    """Four CZ rounds, each a pair of arrays ``(faces, edges)`` of disjoint adjacencies."""

    rounds: tuple
    order: tuple


def build_prep_schedule(geometry: LatticeGeometry, order: Optional[Sequence[int]] = None) -> PrepSchedule:
    order = tuple(range(4)) if order is None else tuple(int(o) for o in order)
    if sorted(order) != [0, 1, 2, 3]:
        raise ValueError(f"round order must be a permutation of 0..3, got {order}")
    adj = geometry.adjacency
    normal = geometry.orientation[adj[:, 0]]
    color = _round_color(normal, adj[:, 2], adj[:, 3])
    rounds = []
    for c in order:
        sel = adj[color == c]
        rounds.append((sel[:, 0].copy(), sel[:, 1].copy()))
    return PrepSchedule(tuple(rounds), order)


@dataclass
class BlockReadouts:
    """Majority-vote readout of every cluster qubit for a chunk of shots.

    ``flips`` has shape (Q, n, shots); derived arrays have shape (Q, shots).
    """

    flips: np.ndarray
    majority_flip: np.ndarray
    located: np.ndarray
    minority: np.ndarray
    posterior: Optional[np.ndarray] = None

    @classmethod
    def from_flips(cls, flips: np.ndarray, q_rate=None) -> BlockReadouts:
        n = flips.shape[1]
        ones = flips.sum(axis=1)
        located = 2 * ones == n
        majority = np.where(located, flips[:, 0, :], 2 * ones > n)
        minority = np.minimum(ones, n - ones)
        out = cls(flips, majority, located, minority)
        if q_rate is not None:
            out.posterior = posterior_from_minority(minority, n, np.asarray(q_rate)[..., None])
        return out

    @property
    def n(self) -> int:
        return self.flips.shape[1]

    def block(self, q: int, shot: int = 0) -> RepBlockReadout:
        post = None if self.posterior is None else float(self.posterior[q, shot])
        return RepBlockReadout(
            tuple(int(b) for b in self.flips[q, :, shot]),
            int(self.majority_flip[q, shot]),
            bool(self.located[q, shot]),
            post,
        )


@dataclass
class Preparation:
    frame: PauliFrame
    readouts: BlockReadouts


def run_preparation(
    geometry: LatticeGeometry,
    schedule: PrepSchedule,
    n: int,
    noise: Optional[NoiseModel],
    rng: Optional[np.random.Generator],
    shots: int = 1,
    q_rate=None,
    inject: Optional[Callable[[str, PauliFrame], None]] = None,
) -> Preparation:
    """Simulate prep |+>^n, four encoded-CZ rounds and X-measurement of every block.

    ``q_rate`` (scalar or per-cluster-qubit) fills in the readout posteriors.
    ``inject(stage, frame)`` is called at ``"after_prep"`` and
    ``"before_measure"`` to plant deterministic errors.
    """
    Q = geometry.num_qubits
    frame = new_frame(Q * n, shots)
    noisy = noise is not None and noise.p > 0
    if noisy and not noise.fused_init_measure:
        # X and Y act on |+> as I and Z: only the Z part is physical
        _, z = sample_pauli_batch(noise.p, rng, frame.x.shape)
        frame.z ^= z
    if inject is not None:
        inject("after_prep", frame)

    rep_sched = encoded_cz_schedule(n)
    offs = np.arange(n)
    for faces, edges in schedule.rounds:
        apply_encoded_cz(
            frame, faces[:, None] * n + offs, edges[:, None] * n + offs,
            rep_sched, noise if noisy else None, rng,
        )

    if inject is not None:
        inject("before_measure", frame)
    if noisy and noise.p_meas > 0:
        x, z = sample_pauli_batch(noise.p_meas, rng, frame.x.shape)
        frame.x ^= x
        frame.z ^= z
    flips = measure_x_flip(frame, np.arange(Q * n)).reshape(Q, n, shots)
    return Preparation(frame, BlockReadouts.from_flips(flips, q_rate))


@dataclass
class Syndrome:
    """Odd-parity cells and per-face flip probability.

    Arrays carry a trailing shot axis when built from a chunk.
    """

    odd_cells: np.ndarray  # bool (C,) or (C, S)
    face_prob: Optional[np.ndarray] = None  # (F,) or (F, S); None means uniform

    @property
    def defects(self) -> np.ndarray:
        if self.odd_cells.ndim != 1:
            raise ValueError("defects are defined for single-shot syndromes")
        return np.flatnonzero(self.odd_cells)

    def shot(self, s: int) -> Syndrome:
        prob = None if self.face_prob is None else self.face_prob[:, s]
        return Syndrome(self.odd_cells[:, s], prob)


def as_face_mask(geometry: LatticeGeometry, faces) -> np.ndarray:
    """Bool face mask from a mask or an iterable of face indices."""
    arr = np.asarray(faces)
    if arr.dtype == bool and arr.shape[0] == geometry.num_faces:
        return arr
    mask = np.zeros(geometry.num_faces, dtype=bool)
    idx = np.asarray(list(faces), dtype=np.int64)
    np.bitwise_xor.at(mask, idx, True)
    return mask


def cell_parity(geometry: LatticeGeometry, face_flips: np.ndarray) -> np.ndarray:
    return np.bitwise_xor.reduce(face_flips[geometry.cell_faces], axis=1)


def extract_syndrome(geometry: LatticeGeometry, readouts) -> Syndrome:
    """Cell parities from face readouts; edge readouts are ignored.

    ``readouts`` is a :class:`BlockReadouts` or a face flip mask/index set.
    """
    F = geometry.num_faces
    if isinstance(readouts, BlockReadouts):
        if readouts.majority_flip.shape[0] != geometry.num_qubits:
            raise ValueError("need one readout per cluster qubit")
        flips = readouts.majority_flip[:F]
        prob = None if readouts.posterior is None else readouts.posterior[:F]
    else:
        flips = as_face_mask(geometry, readouts)
        prob = None
    if flips.shape[0] != F:
        raise ValueError("missing face readouts")
    return Syndrome(cell_parity(geometry, flips), prob)


@dataclass(frozen=True)
class LogicalVerdict:
    parities: np.ndarray  # (3,) or (3, S)
    failed: np.ndarray  # bool or (S,)


def homology_parities(geometry: LatticeGeometry, faces: np.ndarray) -> np.ndarray:
    return np.stack([np.bitwise_xor.reduce(faces[cs], axis=0) for cs in geometry.cross_sections])


def logical_failure(geometry: LatticeGeometry, error_faces, correction_faces) -> LogicalVerdict:
    """Homology class of error + correction on the 3-torus.

    Fails iff the combined flips cross any of the three coordinate planes an
    odd number of times.
    """
    err = error_faces if isinstance(error_faces, np.ndarray) and error_faces.dtype == bool else as_face_mask(geometry, error_faces)
    cor = correction_faces if isinstance(correction_faces, np.ndarray) and correction_faces.dtype == bool else as_face_mask(geometry, correction_faces)
    combined = err ^ cor
    if cell_parity(geometry, combined).any():
        raise ValueError("error plus correction leaves an uncleared syndrome")
    par = homology_parities(geometry, combined)
    return LogicalVerdict(par, par.any(axis=0))
