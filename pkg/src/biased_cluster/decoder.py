"""Soft-information weighted minimum-weight perfect matching on primal cells.

Crossing face f costs ``ln((1 - p_f) / p_f)`` with p_f clamped to
[EPS, 1/2], so located faces (p_f = 1/2) are free. Two routes produce the
same minimum-weight correction:

* :func:`decode` matches on the sparse cell graph with PyMatching
  (production path, used by the Monte Carlo runner);
* :func:`decode_reference` builds the complete defect graph from
  shortest paths and runs an exact blossom matching on it.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Optional

import networkx as nx
import numpy as np
import pymatching
import scipy.sparse as sp

from .lattice import LatticeGeometry, Syndrome

EPS = 1e-9


def face_weights(face_prob: Optional[np.ndarray], num_faces: int, default: float = 1.0) -> np.ndarray:
    """Log-likelihood weights; ``None`` gives uniform ``default`` weights."""
    if face_prob is None:
        return np.full(num_faces, default)
    p = np.clip(np.asarray(face_prob, dtype=float), EPS, 0.5)
    return np.log1p(-p) - np.log(p)


@dataclass
class DecodingGraph:
    nodes: np.ndarray  # defect cell indices
    weights: np.ndarray  # (k, k) symmetric shortest-path weights
    paths: dict  # (i, j) with i < j -> tuple of face indices


def _dijkstra(geometry: LatticeGeometry, w: np.ndarray, source: int):
    """Single-source shortest paths over cells; ties broken by smaller face index."""
    dist = {source: 0.0}
    via = {source: None}
    heap = [(0.0, source)]
    done = set()
    cell_faces, face_cells = geometry.cell_faces, geometry.face_cells
    while heap:
        du, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for f in sorted(cell_faces[u]):
            a, b = face_cells[f]
            v = int(b if a == u else a)
            nd = du + w[f]
            if v not in dist or nd < dist[v] - 1e-12:
                dist[v] = nd
                via[v] = (u, int(f))
                heapq.heappush(heap, (nd, v))
    return dist, via


def _trace(via, target):
    faces = []
    node = target
    while via[node] is not None:
        node, f = via[node]
        faces.append(f)
    return tuple(reversed(faces))


def build_decoding_graph(geometry: LatticeGeometry, syndrome: Syndrome) -> DecodingGraph:
    nodes = syndrome.defects
    if len(nodes) % 2:
        raise ValueError("odd number of defects; periodic syndromes are always even")
    w = face_weights(syndrome.face_prob, geometry.num_faces)
    k = len(nodes)
    weights = np.zeros((k, k))
    paths = {}
    for i, src in enumerate(nodes):
        dist, via = _dijkstra(geometry, w, int(src))
        for j in range(i + 1, k):
            tgt = int(nodes[j])
            weights[i, j] = weights[j, i] = dist[tgt]
            paths[(i, j)] = _trace(via, tgt)
    return DecodingGraph(nodes, weights, paths)


@dataclass
class Matching:
    pairs: list  # (i, j) node positions with i < j
    total_weight: float
    correction: Optional[np.ndarray] = None


def _blossom_pairs(W: np.ndarray, nodes) -> list:
    nodes = list(nodes)
    if not nodes:
        return []
    g = nx.Graph()
    g.add_nodes_from(nodes)
    big = W.max() + 1.0
    for i, j in itertools.combinations(nodes, 2):
        g.add_edge(i, j, weight=big - W[i, j])
    mate = nx.max_weight_matching(g, maxcardinality=True)
    pairs = sorted(tuple(sorted(e)) for e in mate)
    if len(pairs) * 2 != len(nodes):
        raise RuntimeError("blossom returned an imperfect matching")
    return pairs


def _pairs_weight(W, pairs) -> float:
    return float(sum(W[i, j] for i, j in pairs))


def min_weight_perfect_matching(graph: DecodingGraph, lexicographic: bool = True) -> Matching:
    """Exact minimum-weight perfect matching of the complete defect graph (blossom).

    With ``lexicographic`` the optimum is made unique: the lowest free node
    takes the lowest partner that still allows an optimal completion. This
    costs O(k^2) extra blossom runs, which is fine for reference use.
    """
    k = len(graph.nodes)
    if k % 2:
        raise ValueError("perfect matching needs an even number of nodes")
    W = np.asarray(graph.weights, dtype=float)
    if not np.all(np.isfinite(W)):
        raise ValueError("weights must be finite")
    if k == 0:
        return Matching([], 0.0)
    pairs = _blossom_pairs(W, range(k))
    best = _pairs_weight(W, pairs)
    if not lexicographic:
        return Matching(pairs, best)
    tol = 1e-9 * max(1.0, abs(best))
    free, fixed, budget = list(range(k)), [], best
    while len(free) > 2:
        i = free[0]
        for j in free[1:]:
            rest = [v for v in free if v not in (i, j)]
            if W[i, j] + _pairs_weight(W, _blossom_pairs(W, rest)) <= budget + tol:
                fixed.append((i, j))
                budget -= W[i, j]
                free = rest
                break
        else:
            raise RuntimeError("lost the optimum while fixing pairs")
    fixed.append(tuple(free))
    return Matching(fixed, _pairs_weight(W, fixed))


def decode_reference(geometry: LatticeGeometry, syndrome: Syndrome) -> Matching:
    """Shortest paths + blossom on the complete defect graph, with the correction attached."""
    graph = build_decoding_graph(geometry, syndrome)
    m = min_weight_perfect_matching(graph)
    corr = np.zeros(geometry.num_faces, dtype=bool)
    for i, j in m.pairs:
        corr[list(graph.paths[(i, j)])] ^= True
    m.correction = corr
    return m


def check_matrix(geometry: LatticeGeometry) -> sp.csc_matrix:
    """Cells x faces incidence matrix."""
    F = geometry.num_faces
    rows = geometry.face_cells.ravel()
    cols = np.repeat(np.arange(F), 2)
    return sp.csc_matrix((np.ones(2 * F, dtype=np.uint8), (rows, cols)), shape=(geometry.num_cells, F))


class MatchingDecoder:
    """Reusable sparse-graph matcher for one lattice.

    Uniform-weight decodes share one PyMatching graph; soft-information
    decodes rebuild the graph with per-face weights.
    """

    def __init__(self, geometry: LatticeGeometry):
        self.geometry = geometry
        self.H = check_matrix(geometry)
        self._uniform = pymatching.Matching.from_check_matrix(self.H, weights=np.ones(geometry.num_faces))

    def decode(self, syndrome: Syndrome) -> np.ndarray:
        odd = syndrome.odd_cells
        if odd.ndim != 1:
            raise ValueError("decode takes a single-shot syndrome; use decode_batch")
        if odd.sum() % 2:
            raise ValueError("odd number of defects; periodic syndromes are always even")
        if not odd.any():
            return np.zeros(self.geometry.num_faces, dtype=bool)
        if syndrome.face_prob is None:
            m = self._uniform
        else:
            m = pymatching.Matching.from_check_matrix(
                self.H, weights=face_weights(syndrome.face_prob, self.geometry.num_faces)
            )
        return m.decode(odd.astype(np.uint8)).astype(bool)

    def decode_batch(self, syndrome: Syndrome) -> np.ndarray:
        """Corrections of shape (F, S) for a chunk syndrome with trailing shot axis."""
        odd = syndrome.odd_cells
        prob = syndrome.face_prob
        if prob is None:
            return self._uniform.decode_batch(odd.T.astype(np.uint8)).T.astype(bool)
        if np.all(prob == prob[:, :1]):
            m = pymatching.Matching.from_check_matrix(self.H, weights=face_weights(prob[:, 0], self.geometry.num_faces))
            return m.decode_batch(odd.T.astype(np.uint8)).T.astype(bool)
        out = np.zeros((self.geometry.num_faces, odd.shape[1]), dtype=bool)
        for s in range(odd.shape[1]):
            out[:, s] = self.decode(syndrome.shot(s))
        return out


def decode(geometry: LatticeGeometry, syndrome: Syndrome, decoder: Optional[MatchingDecoder] = None) -> np.ndarray:
    """Correction face mask whose syndrome equals ``syndrome``."""
    decoder = decoder or MatchingDecoder(geometry)
    return decoder.decode(syndrome)


def correction_weight(geometry: LatticeGeometry, syndrome: Syndrome, correction: np.ndarray) -> float:
    w = face_weights(syndrome.face_prob, geometry.num_faces)
    return float(w[correction].sum())
