"""Initial state construction: complete-linkage clustering and insertion-state merging."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ParameterError
from .preprocess import cosine_distance_matrix


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    num_states: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "labels", labels)
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_states):
            raise ParameterError("state ids must lie in 0..num_states-1")

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_states)

    @property
    def occupied(self) -> int:
        return int(np.count_nonzero(self.sizes()))


def _as_matrix(vectors) -> np.ndarray:
    if sparse.issparse(vectors):
        return vectors.toarray().astype(float)
    return np.asarray([np.asarray(v, dtype=float).ravel() for v in vectors])


def complete_linkage(D: np.ndarray, k: int) -> np.ndarray:
    """Agglomerate until ``k`` clusters remain; returns a slot id per point.

    Equal-distance candidates are resolved toward the lexicographically
    smallest (lower slot, higher slot) pair, where a merged cluster keeps the
    lower slot.
    """
    n = D.shape[0]
    D = np.array(D, dtype=float)
    np.fill_diagonal(D, np.inf)
    slot = np.arange(n)
    nn_idx = np.argmin(D, axis=1) if n > 1 else np.zeros(1, dtype=int)
    nn_dist = D[np.arange(n), nn_idx]
    alive = np.ones(n, dtype=bool)

    for _ in range(n - k):
        i = int(np.argmin(nn_dist))
        j = int(nn_idx[i])
        merged = np.maximum(D[i], D[j])
        D[i, :] = merged
        D[:, i] = merged
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        alive[j] = False
        nn_dist[j] = np.inf
        slot[slot == j] = i
        stale = np.flatnonzero(alive & ((nn_idx == i) | (nn_idx == j)))
        for r in np.union1d(stale, [i]):
            c = int(np.argmin(D[r]))
            nn_idx[r] = c
            nn_dist[r] = D[r, c]
    return slot


def _compact(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel ids to 0..m-1 in order of first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty(len(raw), dtype=int)
    for pos, value in enumerate(raw):
        out[pos] = mapping.setdefault(int(value), len(mapping))
    return out, len(mapping)


def cluster(vectors, k: int) -> ClusterAssignment:
    """Complete-linkage agglomerative clustering under cosine distance.

    Cluster ids are numbered by first appearance in input order.
    """
    X = _as_matrix(vectors)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in 1..{n}, got {k}")
    slot = complete_linkage(cosine_distance_matrix(X), k)
    labels, num = _compact(slot)
    return ClusterAssignment(labels, num)


def merge_small_states(assignment: ClusterAssignment, threshold: int) -> ClusterAssignment:
    """Collapse every occupied state with fewer than ``threshold`` posts into one state.

    Surviving states keep their relative order; the merged noise state takes
    the last id.  Empty states are dropped.
    """
    if threshold < 0:
        raise ParameterError("threshold must be >= 0")
    sizes = assignment.sizes()
    occupied = np.flatnonzero(sizes)
    big = [s for s in occupied if sizes[s] >= threshold]
    small = [s for s in occupied if sizes[s] < threshold]
    remap = np.full(assignment.num_states, -1)
    for new, old in enumerate(big):
        remap[old] = new
    for old in small:
        remap[old] = len(big)
    num = len(big) + (1 if small else 0)
    return ClusterAssignment(remap[assignment.labels], max(num, 1))
