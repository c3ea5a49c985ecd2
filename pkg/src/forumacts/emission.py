"""Per-state emission distributions: smoothed n-gram LMs and discrete feature models.

Every probability follows additive (Lidstone) smoothing over the known
domain plus, for language models, one bucket shared by all unseen grams::

    p(g | state) = (count(g) + delta1) / (total + delta1 * (V + 1))
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Post
from .errors import ParameterError
from .preprocess import gram_sequence


@dataclass(frozen=True)
class LanguageModel:
    counts: Mapping[tuple, int]
    vocab_size: int
    delta1: float
    kind: str = "word"
    n: int = 1
    max_skip: int = 2
    total: int = field(init=False)

    def __post_init__(self):
        if not self.delta1 > 0:
            raise ParameterError("delta1 must be > 0")
        object.__setattr__(self, "total", sum(self.counts.values()))

    @property
    def denominator(self) -> float:
        return self.total + self.delta1 * (self.vocab_size + 1)

    def prob(self, gram) -> float:
        if isinstance(gram, str):
            gram = (gram,)
        return (self.counts.get(gram, 0) + self.delta1) / self.denominator

    @property
    def unseen_prob(self) -> float:
        return self.delta1 / self.denominator

    def log_prob(self, gram) -> float:
        return math.log(self.prob(gram))

    def grams(self, post: Post) -> list[tuple]:
        return gram_sequence(post, self.n, self.kind, self.max_skip)


def fit_language_model(
    posts: Iterable[Post],
    kind: str = "word",
    n: int = 1,
    delta1: float = 1e-2,
    vocab_size: int | None = None,
    max_skip: int = 2,
) -> LanguageModel:
    """Count the grams of ``posts`` into a smoothed categorical.

    ``vocab_size`` should be the number of distinct grams in the whole corpus;
    when omitted it defaults to the number seen in ``posts``.  An empty post
    set yields the uniform model.
    """
    counts: Counter = Counter()
    for post in posts:
        counts.update(gram_sequence(post, n, kind, max_skip))
    if vocab_size is None:
        vocab_size = len(counts)
    if vocab_size < len(counts):
        raise ParameterError("vocab_size smaller than the number of observed grams")
    return LanguageModel(dict(counts), vocab_size, delta1, kind, n, max_skip)


def score_post_lm(post: Post, lm: LanguageModel) -> float:
    """log p(post | state) as the sum of per-gram log-probabilities."""
    return math.fsum(lm.log_prob(g) for g in lm.grams(post))


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lam}")


def combined_gram_prob(p_word: float, p_pos: float, lam: float) -> float:
    return lam * p_word + (1.0 - lam) * p_pos


def score_post_combined(post: Post, lm: LanguageModel, pos_lm: LanguageModel, lam) -> float:
    """Unnormalised log-score mixing word and POS n-gram probabilities gram by gram.

    ``lam`` is either a constant in [0, 1] or a callable
    ``lam(word_gram, pos_gram) -> float`` giving a per-pair weight.
    """
    if lm.n != pos_lm.n:
        raise ParameterError("word and POS models must share the same gram order")
    if not callable(lam):
        _check_lambda(lam)
    words = lm.grams(post)
    tags = pos_lm.grams(post)
    terms = []
    for w, t in zip(words, tags):
        weight = lam(w, t) if callable(lam) else lam
        terms.append(math.log(combined_gram_prob(lm.prob(w), pos_lm.prob(t), weight)))
    return math.fsum(terms)


@dataclass(frozen=True)
class FrequencyTables:
    """State-conditional gram frequencies used by the fractional mixing weight."""

    word_counts: Mapping[tuple, np.ndarray]
    pos_counts: Mapping[tuple, np.ndarray]
    num_states: int

    @classmethod
    def from_assignment(cls, posts: Sequence[Post], states: Sequence[int], num_states: int, n: int = 1):
        words: dict[tuple, np.ndarray] = {}
        tags: dict[tuple, np.ndarray] = {}
        for post, state in zip(posts, states):
            for g in gram_sequence(post, n, "word"):
                words.setdefault(g, np.zeros(num_states))[state] += 1
            for g in gram_sequence(post, n, "pos"):
                tags.setdefault(g, np.zeros(num_states))[state] += 1
        return cls(words, tags, num_states)

    def word_frac(self, word, state: int) -> float:
        row = self.word_counts.get(_as_gram(word))
        return 0.0 if row is None or row.sum() == 0 else float(row[state] / row.sum())

    def pos_frac(self, pos, state: int) -> float:
        row = self.pos_counts.get(_as_gram(pos))
        return 0.0 if row is None or row.sum() == 0 else float(row[state] / row.sum())


def _as_gram(g) -> tuple:
    return (g,) if isinstance(g, str) else tuple(g)


def lambda_from_fracs(word_frac: float, pos_frac: float) -> float:
    total = word_frac + pos_frac
    return 0.5 if total == 0 else word_frac / total


def fractional_lambda(word, pos, state: int, tables: FrequencyTables) -> float:
    return lambda_from_fracs(tables.word_frac(word, state), tables.pos_frac(pos, state))


@dataclass(frozen=True)
class FeatureModel:
    """Per-state smoothed categoricals, one per discrete feature.

    ``counts[f]`` has shape (num_states, domain_sizes[f]).
    """

    counts: tuple[np.ndarray, ...]
    domain_sizes: tuple[int, ...]
    delta1: float

    @property
    def num_states(self) -> int:
        return self.counts[0].shape[0] if self.counts else 0

    def distribution(self, feature: int, state: int) -> np.ndarray:
        c = self.counts[feature][state]
        return (c + self.delta1) / (c.sum() + self.delta1 * self.domain_sizes[feature])

    def log_prob(self, feature: int, state: int, value: int) -> float:
        c = self.counts[feature][state]
        hit = c[value] if 0 <= value < len(c) else 0.0
        return math.log((hit + self.delta1) / (c.sum() + self.delta1 * self.domain_sizes[feature]))

    def score_matrix(self, values: np.ndarray) -> np.ndarray:
        """Log-scores for an (N, F) matrix of binned values against every state."""
        values = np.asarray(values, dtype=int)
        out = np.zeros((values.shape[0], self.num_states))
        for f, c in enumerate(self.counts):
            denom = c.sum(axis=1) + self.delta1 * self.domain_sizes[f]
            padded = np.concatenate([c, np.zeros((c.shape[0], 1))], axis=1)
            col = values[:, f]
            col = np.where((col >= 0) & (col < c.shape[1]), col, c.shape[1])
            out += np.log((padded[:, col].T + self.delta1) / denom)
        return out


def fit_feature_model(
    values: np.ndarray, states: Sequence[int], num_states: int, domain_sizes: Sequence[int], delta1: float
) -> FeatureModel:
    values = np.asarray(values, dtype=int).reshape(len(states), len(domain_sizes))
    states = np.asarray(states, dtype=int)
    counts = []
    for f, size in enumerate(domain_sizes):
        c = np.zeros((num_states, size))
        np.add.at(c, (states, values[:, f]), 1)
        counts.append(c)
    return FeatureModel(tuple(counts), tuple(int(s) for s in domain_sizes), delta1)


def score_post_features(values: Sequence[int], fm: FeatureModel, state: int) -> float:
    return math.fsum(fm.log_prob(f, state, int(v)) for f, v in enumerate(values))
