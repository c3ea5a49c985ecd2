"""HMM parameter estimation from hard state sequences, and Viterbi decoding."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError


def _sequences(sequences) -> list[np.ndarray]:
    return [np.asarray(s, dtype=int) for s in sequences]


def estimate_initial_probs(sequences: Sequence[Sequence[int]], num_states: int, delta2: float) -> np.ndarray:
    """pi_i = (init_counts_i + delta2) / (sum_k init_counts_k + delta2 * numStates).

    Negative ids mark unlabelled posts and are not counted.
    """
    if not delta2 > 0:
        raise ParameterError("delta2 must be > 0")
    counts = np.zeros(num_states)
    for seq in _sequences(sequences):
        if len(seq) and seq[0] >= 0:
            counts[seq[0]] += 1
    return (counts + delta2) / (counts.sum() + delta2 * num_states)


def transition_counts(sequences: Sequence[Sequence[int]], num_states: int) -> np.ndarray:
    counts = np.zeros((num_states, num_states))
    for seq in _sequences(sequences):
        if len(seq) > 1:
            a, b = seq[:-1], seq[1:]
            ok = (a >= 0) & (b >= 0)
            np.add.at(counts, (a[ok], b[ok]), 1)
    return counts


def estimate_transition_probs(
    sequences: Sequence[Sequence[int]], num_states: int, delta2: float, mode: str = "global"
) -> np.ndarray:
    """Smoothed transition matrix.

    ``mode="global"`` divides by the total over all (i, j) pairs,
    (counts_ij + delta2) / (sum_kl counts_kl + delta2 * numStates^2), so the
    whole matrix sums to one.  ``mode="row"`` is the conventional per-row
    normalisation.
    """
    if not delta2 > 0:
        raise ParameterError("delta2 must be > 0")
    counts = transition_counts(sequences, num_states)
    if mode == "global":
        return (counts + delta2) / (counts.sum() + delta2 * num_states**2)
    if mode == "row":
        return (counts + delta2) / (counts.sum(axis=1, keepdims=True) + delta2 * num_states)
    raise ParameterError(f"unknown transition normalisation {mode!r}")


@dataclass
class HmmParams:
    pi: np.ndarray
    phi: np.ndarray
    emissions: object = None

    @property
    def num_states(self) -> int:
        return len(self.pi)

    def to_dict(self) -> dict:
        return {"pi": self.pi.tolist(), "phi": self.phi.tolist()}


def _log(x) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, dtype=float))


def viterbi(emission_log_scores: np.ndarray, pi, phi) -> tuple[np.ndarray, float]:
    """Most likely state path for one thread.

    ``emission_log_scores`` is (T, K).  Returns the path and its log score
    log pi + sum log phi + sum emission scores.  Ties go to the lower state id.
    """
    b = np.asarray(emission_log_scores, dtype=float)
    T, K = b.shape
    log_pi, log_phi = _log(pi), _log(phi)
    if log_pi.shape != (K,) or log_phi.shape != (K, K):
        raise ParameterError("pi/phi shapes do not match the emission scores")
    if T == 0:
        return np.zeros(0, dtype=int), 0.0
    delta = log_pi + b[0]
    back = np.zeros((T, K), dtype=int)
    for t in range(1, T):
        cand = delta[:, None] + log_phi
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(K)] + b[t]
    path = np.empty(T, dtype=int)
    path[-1] = int(np.argmax(delta))
    best = float(delta[path[-1]])
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best


def path_log_score(path: Sequence[int], emission_log_scores: np.ndarray, pi, phi) -> float:
    b = np.asarray(emission_log_scores, dtype=float)
    log_pi, log_phi = _log(pi), _log(phi)
    total = log_pi[path[0]] + b[0, path[0]]
    for t in range(1, len(path)):
        total += log_phi[path[t - 1], path[t]] + b[t, path[t]]
    return float(total)
