"""Hard-EM training of conversation models, unsupervised and semi-supervised."""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .clusterer import ClusterAssignment, cluster, merge_small_states
from .config import ModelConfig
from .corpus import Corpus
from .errors import ConfigurationError, ParameterError, StateCollapseError
from .hmm import HmmParams, estimate_initial_probs, estimate_transition_probs, viterbi
from .observations import EmissionModel, Observations, ObservationSpace
from .preprocess import vectorize_posts

log = logging.getLogger(__name__)


@dataclass
class TrainingTrace:
    log_probs: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.log_probs)


@dataclass
class ConversationModel:
    """A fitted model that can decode new corpora encoded in its observation space."""

    config: ModelConfig
    space: ObservationSpace
    params: HmmParams
    state_names: list | None = None

    def decode(self, corpus: Corpus) -> np.ndarray:
        states, _ = decode_observations(self.space.encode(corpus), self.params)
        return states

    def labels_for(self, states) -> list:
        if self.state_names is None:
            return [None] * len(states)
        return [self.state_names[s] for s in states]

    def to_dict(self) -> dict:
        return {
            "format": "forumacts-model",
            "version": __version__,
            "config": self.config.to_dict(),
            "space": self.space.to_dict(),
            "pi": self.params.pi.tolist(),
            "phi": self.params.phi.tolist(),
            "emissions": self.params.emissions.to_dict(),
            "state_names": self.state_names,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "ConversationModel":
        if data.get("format") != "forumacts-model":
            raise ConfigurationError("not a forumacts model file")
        config = ModelConfig.from_dict(data["config"])
        space = ObservationSpace.from_dict(data["space"], config)
        emissions = EmissionModel.from_dict(data["emissions"], config, space)
        params = HmmParams(np.array(data["pi"]), np.array(data["phi"]), emissions)
        return cls(config, space, params, data.get("state_names"))

    @classmethod
    def load(cls, path: str | Path) -> "ConversationModel":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read model {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class TrainingResult:
    states: np.ndarray
    model: ConversationModel
    trace: TrainingTrace
    initial_states: np.ndarray
    thread_lengths: tuple

    @property
    def params(self) -> HmmParams:
        return self.model.params

    @property
    def num_states(self) -> int:
        return self.model.params.num_states

    @property
    def occupied_states(self) -> int:
        return len(np.unique(self.states))

    def per_thread(self) -> list[np.ndarray]:
        bounds = np.cumsum((0,) + tuple(self.thread_lengths))
        return [self.states[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def decode_observations(obs: Observations, params: HmmParams) -> tuple[np.ndarray, float]:
    """Viterbi-decode every thread; returns flat states and the summed path log score."""
    scores = params.emissions.score(obs)
    states = np.empty(obs.num_posts, dtype=int)
    total = 0.0
    for sl in obs.thread_slices():
        path, lp = viterbi(scores[sl], params.pi, params.phi)
        states[sl] = path
        total += lp
    return states, total


def _split(states: np.ndarray, thread_lengths) -> list[np.ndarray]:
    bounds = np.cumsum((0,) + tuple(thread_lengths))
    return [states[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def fit_params(obs: Observations, states: np.ndarray, num_states: int, config: ModelConfig,
               space: ObservationSpace, seed_path=(0,)) -> HmmParams:
    """M-step: per-state emissions plus smoothed initial and transition probabilities."""
    emissions = EmissionModel.fit(obs, states, num_states, config, space, seed_path)
    seqs = _split(states, obs.thread_lengths)
    pi = estimate_initial_probs(seqs, num_states, config.delta2)
    phi = estimate_transition_probs(seqs, num_states, config.delta2, config.transition_norm)
    return HmmParams(pi, phi, emissions)


def _converged(prev: float, cur: float, tol: float) -> bool:
    return abs(cur - prev) <= tol * abs(prev)


def initial_clusters(corpus: Corpus, config: ModelConfig) -> ClusterAssignment:
    posts = list(corpus.posts())
    if config.use_embeddings:
        vectors = np.array([p.embedding for p in posts], dtype=float)
    else:
        vectors = vectorize_posts(posts, config.ngram_order, tfidf=config.tfidf)
    return cluster(vectors, config.initial_num_clusters)


def _em_loop(obs, space, config, states, num_states, trace, params, relabel):
    """Shared EM iterations.

    ``params`` (if given) are used for the first decode instead of being
    estimated; ``relabel`` re-estimates states ids before each M-step.
    """
    prev = None
    for it in range(config.max_num_iterations):
        if params is None or it > 0:
            states, num_states = relabel(states, num_states)
            params = fit_params(obs, states, num_states, config, space, (config.seed, it + 1))
        states, total = decode_observations(obs, params)
        trace.log_probs.append(total)
        log.debug("iteration %d: total path log-prob %.6f", it + 1, total)
        if prev is not None and _converged(prev, total, config.convergence_tol):
            trace.converged = True
            break
        prev = total
    return states, num_states, params


def train_unsupervised(corpus: Corpus, config: ModelConfig,
                       assignment: ClusterAssignment | None = None) -> TrainingResult:
    """Cluster posts into initial states, then alternate M-step estimation and Viterbi.

    Raises :class:`StateCollapseError` if fewer than two states stay occupied.
    """
    space = ObservationSpace.build(corpus, config)
    obs = space.encode(corpus)
    if assignment is None:
        assignment = initial_clusters(corpus, config)
    initial = assignment.labels.copy()

    def relabel(states, num_states):
        a = ClusterAssignment(states, num_states)
        if config.merge_insertion_states:
            a = merge_small_states(a, config.state_size_threshold)
        if a.occupied < 2:
            raise StateCollapseError(f"only {a.occupied} occupied state(s) remain")
        return a.labels, a.num_states

    trace = TrainingTrace()
    if config.max_num_iterations == 0:
        states, num_states = relabel(assignment.labels, assignment.num_states)
        params = fit_params(obs, states, num_states, config, space, (config.seed, 0))
    else:
        states, num_states, params = _em_loop(
            obs, space, config, assignment.labels, assignment.num_states, trace, None, relabel
        )
    model = ConversationModel(config, space, params)
    return TrainingResult(states, model, trace, initial, tuple(corpus.thread_lengths))


def label_ids(corpus: Corpus, label_set) -> np.ndarray:
    index = {name: i for i, name in enumerate(label_set)}
    return np.array([index[p.gold_label] if p.gold_label is not None else -1 for p in corpus.posts()], dtype=int)


def train_semisupervised(train: Corpus, evaluation: Corpus, config: ModelConfig) -> TrainingResult:
    """Initialise every parameter from the gold labels of ``train``, then run EM over ``evaluation``.

    State ids are the indices of ``config.label_set``.  The returned states
    cover the posts of ``evaluation`` only.
    """
    if not train.threads:
        raise ParameterError("semi-supervised training needs at least one labelled thread")
    labels = tuple(config.label_set)
    k = len(labels)
    gold = label_ids(train, labels)
    if (gold < 0).all():
        raise ParameterError("training threads carry no gold labels")
    missing = [labels[i] for i in range(k) if not (gold == i).any()]
    if missing:
        warnings.warn(f"labels absent from training data fall back to uniform models: {missing}", stacklevel=2)

    both = Corpus(train.threads + evaluation.threads, labels)
    space = ObservationSpace.build(both, config, feature_corpus=train)
    prior = fit_params(space.encode(train), gold, k, config, space, (config.seed, 0))
    obs = space.encode(evaluation)
    trace = TrainingTrace()
    if evaluation.num_posts == 0:
        states, params = np.zeros(0, dtype=int), prior
    elif config.max_num_iterations == 0:
        states, _ = decode_observations(obs, prior)
        params = prior
    else:
        states, _, params = _em_loop(obs, space, config, None, k, trace, prior, lambda s, n: (s, n))
    model = ConversationModel(config, space, params, list(labels))
    return TrainingResult(states, model, trace, gold, tuple(evaluation.thread_lengths))
