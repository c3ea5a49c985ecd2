"""One-to-one cluster-to-label mapping by maximum-weight bipartite matching."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


def build_weight_matrix(predicted: Sequence[int], gold: Sequence, label_set: Sequence[str],
                        num_clusters: int | None = None) -> np.ndarray:
    """Entry (c, g) counts posts predicted as cluster c whose gold label is g.

    Posts whose gold label is None are skipped.
    """
    predicted = np.asarray(predicted, dtype=int)
    if len(predicted) != len(gold):
        raise ValueError("predicted and gold sequences differ in length")
    if num_clusters is None:
        num_clusters = int(predicted.max()) + 1 if len(predicted) else 0
    col = {name: j for j, name in enumerate(label_set)}
    w = np.zeros((num_clusters, len(label_set)), dtype=int)
    for c, g in zip(predicted, gold):
        if g is not None:
            w[c, col[g]] += 1
    return w


def _best_total(w: np.ndarray) -> float:
    if w.size == 0:
        return 0
    r, c = linear_sum_assignment(w, maximize=True)
    return w[r, c].sum()


def _pad_square(w: np.ndarray) -> np.ndarray:
    n = max(w.shape)
    out = np.zeros((n, n), dtype=w.dtype)
    out[: w.shape[0], : w.shape[1]] = w
    return out


@dataclass(frozen=True)
class Mapping:
    """``assignment[c]`` is the label column of cluster ``c`` or None when it matched padding."""

    assignment: dict
    total: float

    def apply(self, predicted: Sequence[int], label_set: Sequence[str]) -> list:
        out = []
        for c in predicted:
            j = self.assignment.get(int(c))
            out.append(None if j is None else label_set[j])
        return out


def optimal_mapping(w) -> Mapping:
    """Maximum-weight one-to-one mapping of rows (clusters) to columns (labels).

    Among optimal matchings the lexicographically smallest permutation of the
    zero-padded square matrix is returned.
    """
    w = np.asarray(w)
    rows, cols = w.shape
    sq = _pad_square(w)
    n = sq.shape[0]
    target = _best_total(sq)
    exact = np.issubdtype(sq.dtype, np.integer)
    tol = 0 if exact else 1e-9 * max(1.0, float(np.abs(sq).sum()))

    perm = []
    free_rows = list(range(n))
    free_cols = list(range(n))
    remaining = target
    for r in range(n):
        free_rows.remove(r)
        for c in free_cols:
            rest_cols = [x for x in free_cols if x != c]
            rest = _best_total(sq[np.ix_(free_rows, rest_cols)]) if free_rows else 0
            if abs(sq[r, c] + rest - remaining) <= tol:
                perm.append(c)
                free_cols.remove(c)
                remaining -= sq[r, c]
                break
    assignment = {r: (c if c < cols else None) for r, c in enumerate(perm) if r < rows}
    return Mapping(assignment, float(target))

