"""Diagonal-covariance Gaussian mixtures fitted by EM."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ParameterError

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood_trace: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.variances = np.atleast_2d(np.asarray(self.variances, dtype=float))

    @property
    def num_components(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def component_log_densities(self, X: np.ndarray) -> np.ndarray:
        """(N, M) matrix of log N(x | mean_m, diag(var_m))."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ParameterError(f"expected {self.dim}-dimensional input, got {X.shape[1]}")
        sq = np.sum((X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :], axis=2)
        return -0.5 * (self.dim * LOG_2PI + np.sum(np.log(self.variances), axis=1) + sq)

    def log_density(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        return logsumexp(self.component_log_densities(X) + log_w, axis=1)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "means": self.means.tolist(), "variances": self.variances.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianMixture":
        return cls(np.array(data["weights"]), np.array(data["means"]), np.array(data["variances"]))


def score_post_gmm(vector, gmm: GaussianMixture) -> float:
    vector = np.asarray(vector, dtype=float).ravel()
    if vector.shape[0] != gmm.dim:
        raise ParameterError(f"expected {gmm.dim}-dimensional vector, got {vector.shape[0]}")
    return float(gmm.log_density(vector[None, :])[0])


def _em(X, weights, means, variances, floor, max_iter, tol):
    n = X.shape[0]
    trace = []
    gmm = GaussianMixture(weights, means, variances)
    for _ in range(max_iter):
        with np.errstate(divide="ignore"):
            joint = gmm.component_log_densities(X) + np.log(gmm.weights)
        per_point = logsumexp(joint, axis=1)
        ll = float(per_point.sum())
        trace.append(ll)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) <= tol * max(1.0, abs(trace[-2])):
            break
        resp = np.exp(joint - per_point[:, None])
        nk = resp.sum(axis=0)
        live = nk > 1e-12 * n
        new_means = gmm.means.copy()
        new_vars = gmm.variances.copy()
        new_means[live] = (resp[:, live].T @ X) / nk[live, None]
        for m in np.flatnonzero(live):
            diff = X - new_means[m]
            new_vars[m] = resp[:, m] @ (diff**2) / nk[m]
        np.maximum(new_vars, floor, out=new_vars)
        gmm = GaussianMixture(nk / n, new_means, new_vars)
    else:
        with np.errstate(divide="ignore"):
            joint = gmm.component_log_densities(X) + np.log(gmm.weights)
        trace.append(float(logsumexp(joint, axis=1).sum()))
    gmm.log_likelihood_trace = trace
    return gmm


def fit_gmm(
    vectors,
    num_components: int,
    seed: int | np.random.Generator | None = 0,
    variance_floor: float = 1e-6,
    max_iter: int = 200,
    tol: float = 1e-10,
    restarts: int = 1,
) -> GaussianMixture:
    """EM fit of a diagonal Gaussian mixture.

    Initial means are drawn from a Gaussian matching the data's per-dimension
    mean and variance; initial variances are the data variances.  With
    ``restarts > 1`` the run with the highest final log-likelihood wins.
    If there are fewer vectors than components the component count is
    reduced to the number of vectors.
    """
    X = np.asarray(vectors, dtype=float)
    X = X.reshape(-1, 1) if X.ndim == 1 else np.atleast_2d(X)
    if X.shape[0] == 0:
        raise ParameterError("cannot fit a mixture to zero vectors")
    if num_components < 1:
        raise ParameterError("num_components must be >= 1")
    m = min(num_components, X.shape[0])
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mu = X.mean(axis=0)
    var = np.maximum(X.var(axis=0), variance_floor)
    best = None
    for _ in range(restarts):
        means = rng.normal(mu, np.sqrt(var), size=(m, X.shape[1]))
        gmm = _em(X, np.full(m, 1.0 / m), means, np.tile(var, (m, 1)), variance_floor, max_iter, tol)
        if best is None or gmm.log_likelihood_trace[-1] > best.log_likelihood_trace[-1]:
            best = gmm
    return best
