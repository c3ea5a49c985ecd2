"""Corpus-level observation arrays and the per-state emission bundle used by EM.

An :class:`ObservationSpace` fixes the vocabularies (word, POS, char and
skip grams), the feature bins and the GMM input dimensions.  Encoding a
corpus against it yields :class:`Observations`; an :class:`EmissionModel`
fitted on one set of observations scores any other set encoded in the same
space.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .config import ModelConfig
from .corpus import Corpus, Post
from .emission import FeatureModel, LanguageModel, fit_feature_model
from .features import FeatureDiscretizer, corpus_raw_features
from .gmm import GaussianMixture, fit_gmm
from .preprocess import GramSpace



@dataclass(frozen=True)
class Occurrences:
    """Gram ids of every post concatenated in positional order."""

    ids: np.ndarray
    starts: np.ndarray
    lengths: np.ndarray

    @classmethod
    def encode(cls, space: GramSpace, posts: Sequence[Post]) -> "Occurrences":
        per_post = [space.ids(p) for p in posts]
        lengths = np.array([len(x) for x in per_post], dtype=int)
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(int)
        ids = np.fromiter((i for x in per_post for i in x), dtype=int, count=int(lengths.sum()))
        return cls(ids, starts, lengths)

    @property
    def post_of(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.lengths)), self.lengths)

    def counts(self, states: np.ndarray, num_states: int, width: int) -> np.ndarray:
        """(num_states, width) gram counts per state."""
        flat = states[self.post_of] * width + self.ids
        return np.bincount(flat, minlength=num_states * width).reshape(num_states, width).astype(float)

    def reduce(self, values: np.ndarray) -> np.ndarray:
        """Sum per-occurrence rows (n_occ, K) into per-post rows (N, K), in positional order."""
        out = np.zeros((len(self.lengths), values.shape[1]))
        nonempty = self.lengths > 0
        if values.shape[0]:
            out[nonempty] = np.add.reduceat(values, self.starts[nonempty], axis=0)
        return out


@dataclass(frozen=True)
class Observations:
    num_posts: int
    thread_lengths: tuple[int, ...]
    word: Occurrences | None = None
    pos: Occurrences | None = None
    char: Occurrences | None = None
    skip: Occurrences | None = None
    features: np.ndarray | None = None
    dense: np.ndarray | None = None

    def thread_slices(self) -> list[slice]:
        out, start = [], 0
        for length in self.thread_lengths:
            out.append(slice(start, start + length))
            start += length
        return out


def _top_unigrams(posts: Sequence[Post], limit: int) -> list[str]:
    counts = Counter(s for p in posts for s in p.surfaces)
    first = {}
    for p in posts:
        for s in p.surfaces:
            first.setdefault(s, len(first))
    return sorted(counts, key=lambda s: (-counts[s], first[s]))[:limit]


class ObservationSpace:
    def __init__(self, config: ModelConfig, spaces: dict, discretizer=None, dense_vocab=None):
        self.config = config
        self.spaces: dict[str, GramSpace] = spaces
        self.discretizer: FeatureDiscretizer | None = discretizer
        self.dense_vocab: list[str] | None = dense_vocab

    @classmethod
    def build(cls, corpus: Corpus, config: ModelConfig, feature_corpus: Corpus | None = None) -> "ObservationSpace":
        """Vocabularies come from ``corpus``; feature bins from ``feature_corpus`` (default: ``corpus``)."""
        posts = list(corpus.posts())
        n = config.ngram_order
        spaces = {}
        if config.word_lm:
            spaces["word"] = GramSpace.build(posts, "word", n)
        if config.use_pos:
            spaces["pos"] = GramSpace.build(posts, "pos", n)
        if config.char_lm:
            spaces["char"] = GramSpace.build(posts, "char", config.char_order)
        if config.skipgram_lm:
            spaces["skip"] = GramSpace.build(posts, "skip", 2, max_skip=config.max_skip)
        discretizer = None
        if config.use_features:
            source = feature_corpus if feature_corpus is not None else corpus
            discretizer = FeatureDiscretizer.fit(corpus_raw_features(source, config.author_buckets), config.author_buckets)
        dense_vocab = _top_unigrams(posts, config.gmm_max_dims) if config.use_gmm else None
        return cls(config, spaces, discretizer, dense_vocab)

    def encode(self, corpus: Corpus) -> Observations:
        posts = list(corpus.posts())
        occ = {kind: Occurrences.encode(space, posts) for kind, space in self.spaces.items()}
        features = None
        if self.discretizer is not None:
            features = self.discretizer.transform(corpus_raw_features(corpus, self.config.author_buckets))
        dense = None
        if self.dense_vocab is not None:
            index = {s: i for i, s in enumerate(self.dense_vocab)}
            dense = np.zeros((len(posts), len(index)))
            for r, post in enumerate(posts):
                for s in post.surfaces:
                    if s in index:
                        dense[r, index[s]] += 1
        return Observations(
            num_posts=len(posts),
            thread_lengths=tuple(corpus.thread_lengths),
            features=features,
            dense=dense,
            **occ,
        )

    def to_dict(self) -> dict:
        return {
            "spaces": {
                kind: {"n": s.n, "max_skip": s.max_skip, "grams": [list(g) for g in s.index]}
                for kind, s in self.spaces.items()
            },
            "discretizer": self.discretizer.to_dict() if self.discretizer else None,
            "dense_vocab": self.dense_vocab,
        }

    @classmethod
    def from_dict(cls, data: dict, config: ModelConfig) -> "ObservationSpace":
        spaces = {}
        for kind, s in data["spaces"].items():
            index = {tuple(g): i for i, g in enumerate(s["grams"])}
            spaces[kind] = GramSpace(kind, s["n"], index, max_skip=s["max_skip"])
        disc = FeatureDiscretizer.from_dict(data["discretizer"]) if data.get("discretizer") else None
        return cls(config, spaces, disc, data.get("dense_vocab"))


def _lm_probs(counts: np.ndarray, delta1: float) -> np.ndarray:
    """Row-wise p over V known grams plus the trailing unseen bucket."""
    width = counts.shape[1]
    denom = counts.sum(axis=1, keepdims=True) + delta1 * width
    return (counts + delta1) / denom


def _fractions(counts: np.ndarray) -> np.ndarray:
    total = counts.sum(axis=0, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, counts / np.where(total > 0, total, 1.0), 0.0)


class EmissionModel:
    """Per-state emission distributions for every enabled observation family."""

    def __init__(self, config: ModelConfig, space: ObservationSpace, num_states: int,
                 lm_counts: dict, feature_model: FeatureModel | None = None,
                 gmms: list[GaussianMixture] | None = None):
        self.config = config
        self.space = space
        self.num_states = num_states
        self.lm_counts = lm_counts
        self.feature_model = feature_model
        self.gmms = gmms

    @classmethod
    def fit(cls, obs: Observations, states: np.ndarray, num_states: int, config: ModelConfig,
            space: ObservationSpace, rng_seed: Sequence[int] = (0,)) -> "EmissionModel":
        """Fit every state's models from the posts currently assigned to it.

        Posts with a negative state are ignored (unlabelled training posts).
        """
        states = np.asarray(states, dtype=int)
        keep = states >= 0
        lm_counts = {}
        for kind, gspace in space.spaces.items():
            occ: Occurrences = getattr(obs, kind)
            width = gspace.size + 1
            if keep.all():
                lm_counts[kind] = occ.counts(states, num_states, width)
            else:
                masked = np.where(keep, states, num_states)
                lm_counts[kind] = occ.counts(masked, num_states + 1, width)[:num_states]
        fm = None
        if space.discretizer is not None:
            fm = fit_feature_model(obs.features[keep], states[keep], num_states,
                                   space.discretizer.domain_sizes, config.delta1)
        gmms = None
        if config.use_gmm:
            gmms = []
            for k in range(num_states):
                X = obs.dense[states == k]
                seed = np.random.default_rng([*rng_seed, k])
                if len(X) == 0:
                    # an empty state gets one broad component over all the data
                    X = obs.dense[keep]
                    gmms.append(GaussianMixture(
                        [1.0], X.mean(axis=0, keepdims=True),
                        np.maximum(X.var(axis=0, keepdims=True), config.gmm_variance_floor)))
                    continue
                gmms.append(fit_gmm(X, config.num_mixture_components, seed,
                                    variance_floor=config.gmm_variance_floor,
                                    max_iter=config.gmm_max_iter, restarts=config.gmm_restarts))
        return cls(config, space, num_states, lm_counts, fm, gmms)

    def language_model(self, kind: str, state: int) -> LanguageModel:
        """The ``kind`` language model of ``state`` as a standalone object."""
        gspace = self.space.spaces[kind]
        row = self.lm_counts[kind][state]
        counts = {g: int(row[i]) for g, i in gspace.index.items() if row[i]}
        return LanguageModel(counts, gspace.size, self.config.delta1, kind, gspace.n, gspace.max_skip)

    def lambda_matrix(self, obs: Observations) -> np.ndarray:
        """(n_occ, K) mixing weight per aligned word/POS gram pair."""
        if not self.config.fractional_lambda:
            return np.full((len(obs.word.ids), self.num_states), self.config.lam)
        wf = _fractions(self.lm_counts["word"])[:, obs.word.ids].T
        pf = _fractions(self.lm_counts["pos"])[:, obs.pos.ids].T
        total = wf + pf
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, wf / np.where(total > 0, total, 1.0), 0.5)

    def score(self, obs: Observations) -> np.ndarray:
        """(N, K) matrix of log p(post | state), up to the optional per-post normalisation."""
        cfg = self.config
        out = np.zeros((obs.num_posts, self.num_states))
        if "word" in self.lm_counts:
            p_w = _lm_probs(self.lm_counts["word"], cfg.delta1)[:, obs.word.ids].T
            if cfg.use_pos:
                p_p = _lm_probs(self.lm_counts["pos"], cfg.delta1)[:, obs.pos.ids].T
                lam = self.lambda_matrix(obs)
                values = np.log(lam * p_w + (1.0 - lam) * p_p)
            else:
                values = np.log(p_w)
            out += obs.word.reduce(values)
        for kind in ("char", "skip"):
            if kind in self.lm_counts:
                occ = getattr(obs, kind)
                out += occ.reduce(np.log(_lm_probs(self.lm_counts[kind], cfg.delta1)[:, occ.ids].T))
        if self.feature_model is not None:
            out += self.feature_model.score_matrix(obs.features)
        if self.gmms is not None:
            out += np.column_stack([g.log_density(obs.dense) for g in self.gmms])
        if cfg.normalize_emissions:
            out -= logsumexp(out, axis=1, keepdims=True)
        return out

    def to_dict(self) -> dict:
        data = {
            "num_states": self.num_states,
            "lm_counts": {k: _sparse_rows(v) for k, v in self.lm_counts.items()},
        }
        if self.feature_model is not None:
            data["feature_counts"] = [c.tolist() for c in self.feature_model.counts]
        if self.gmms is not None:
            data["gmms"] = [g.to_dict() for g in self.gmms]
        return data

    @classmethod
    def from_dict(cls, data: dict, config: ModelConfig, space: ObservationSpace) -> "EmissionModel":
        k = data["num_states"]
        lm_counts = {}
        for kind, rows in data["lm_counts"].items():
            width = space.spaces[kind].size + 1
            lm_counts[kind] = _dense_rows(rows, k, width)
        fm = None
        if "feature_counts" in data:
            fm = FeatureModel(tuple(np.array(c, dtype=float) for c in data["feature_counts"]),
                              space.discretizer.domain_sizes, config.delta1)
        gmms = [GaussianMixture.from_dict(g) for g in data["gmms"]] if "gmms" in data else None
        return cls(config, space, k, lm_counts, fm, gmms)


def _sparse_rows(matrix: np.ndarray) -> list[dict]:
    return [{str(int(i)): float(row[i]) for i in np.flatnonzero(row)} for row in matrix]


def _dense_rows(rows: list[dict], k: int, width: int) -> np.ndarray:
    out = np.zeros((k, width))
    for r, row in enumerate(rows):
        for i, v in row.items():
            out[r, int(i)] = v
    return out
