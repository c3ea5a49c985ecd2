"""Discrete post features: structure, metadata, textual similarity and lexical cues."""
from __future__ import annotations

import zlib
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import IMG, QUOTE, URL, Corpus, Post, Thread
from .preprocess import cosine_similarity_matrix

POSITION_BINS = ("first", "second", "third", "later")
NUM_BINS = 4

WH_WORDS = frozenset({"why", "where", "what", "when", "how"})
THANKS = frozenset({"thanks", "thank"})
SAME = frozenset({"same", "similar"})
MODAL_TAGS = frozenset({"MD"})
PROPER_NOUN_TAGS = frozenset({"NNP", "NNPS"})

# (name, kind) where kind is "position", "author", "binary" or "numeric"
FEATURES = (
    ("position", "position"),
    ("author", "author"),
    ("prev_same_author", "binary"),
    ("author_posts_in_thread", "numeric"),
    ("author_prev_posts", "numeric"),
    ("num_tokens", "numeric"),
    ("type_token_ratio", "numeric"),
    ("avg_similarity", "numeric"),
    ("initial_similarity", "numeric"),
    ("question_mark", "binary"),
    ("prev_question_mark", "binary"),
    ("exclamation_mark", "binary"),
    ("quote_url_image", "binary"),
    ("thanks", "binary"),
    ("same_similar", "binary"),
    ("did", "binary"),
    ("wh_words", "numeric"),
    ("modals", "numeric"),
    ("proper_nouns", "numeric"),
)
FEATURE_NAMES = tuple(name for name, _ in FEATURES)


def _has_char(post: Post, ch: str) -> bool:
    return any(ch in s for s in post.surfaces)


def author_bucket(author_id: str, buckets: int = 16) -> int:
    return zlib.crc32(author_id.encode("utf-8")) % buckets


def thread_raw_features(thread: Thread, author_buckets: int = 16) -> list[dict]:
    """Undiscretised feature values for every post of ``thread``."""
    posts = thread.posts
    vocab: dict[str, int] = {}
    for post in posts:
        for s in post.surfaces:
            vocab.setdefault(s, len(vocab))
    X = np.zeros((len(posts), len(vocab)))
    for r, post in enumerate(posts):
        for s in post.surfaces:
            X[r, vocab[s]] += 1
    sim = cosine_similarity_matrix(X)
    authors = Counter(p.author_id for p in posts)

    rows = []
    seen: Counter = Counter()
    for i, post in enumerate(posts):
        words = post.surfaces
        lowered = {w.lower() for w in words}
        tags = [t.pos for t in post.tokens if t.pos]
        prev = posts[i - 1] if i > 0 else None
        others = [sim[i, j] for j in range(len(posts)) if j != i]
        rows.append({
            "position": min(i, len(POSITION_BINS) - 1),
            "author": author_bucket(post.author_id, author_buckets),
            "prev_same_author": int(prev is not None and prev.author_id == post.author_id),
            "author_posts_in_thread": authors[post.author_id],
            "author_prev_posts": seen[post.author_id],
            "num_tokens": len(words),
            "type_token_ratio": len(set(words)) / len(words),
            # rounded so that identical posts land on equal (top-bin) values
            "avg_similarity": round(float(np.mean(others)), 12) if others else 0.0,
            "initial_similarity": round(float(sim[i, 0]), 12),
            "question_mark": int(_has_char(post, "?")),
            "prev_question_mark": int(prev is not None and _has_char(prev, "?")),
            "exclamation_mark": int(_has_char(post, "!")),
            "quote_url_image": int(
                post.has_quote or post.has_url or post.has_image or bool(lowered & {QUOTE.lower(), URL.lower(), IMG.lower()})
            ),
            "thanks": int(bool(lowered & THANKS)),
            "same_similar": int(bool(lowered & SAME)),
            "did": int("did" in lowered),
            "wh_words": sum(w.lower() in WH_WORDS for w in words),
            "modals": sum(t in MODAL_TAGS for t in tags),
            "proper_nouns": sum(t in PROPER_NOUN_TAGS for t in tags),
        })
        seen[post.author_id] += 1
    return rows


@dataclass(frozen=True)
class FeatureDiscretizer:
    """Quartile edges for the numeric features, fitted on prior-initialisation data."""

    edges: dict
    author_buckets: int = 16

    @classmethod
    def fit(cls, raw_rows: Sequence[dict], author_buckets: int = 16) -> "FeatureDiscretizer":
        edges = {}
        for name, kind in FEATURES:
            if kind == "numeric":
                values = np.array([row[name] for row in raw_rows], dtype=float)
                q = np.quantile(values, [0.25, 0.5, 0.75]) if len(values) else np.zeros(3)
                edges[name] = [float(x) for x in q]
        return cls(edges, author_buckets)

    @property
    def domain_sizes(self) -> tuple[int, ...]:
        sizes = {"position": len(POSITION_BINS), "author": self.author_buckets, "binary": 2, "numeric": NUM_BINS}
        return tuple(sizes[kind] for _, kind in FEATURES)

    def transform_row(self, row: dict) -> list[int]:
        out = []
        for name, kind in FEATURES:
            if kind == "numeric":
                out.append(int(np.searchsorted(self.edges[name], row[name], side="right")))
            else:
                out.append(int(row[name]))
        return out

    def transform(self, raw_rows: Sequence[dict]) -> np.ndarray:
        return np.array([self.transform_row(r) for r in raw_rows], dtype=int).reshape(-1, len(FEATURES))

    def to_dict(self) -> dict:
        return {"edges": self.edges, "author_buckets": self.author_buckets}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureDiscretizer":
        return cls(dict(data["edges"]), int(data["author_buckets"]))


@dataclass(frozen=True)
class PostFeatures:
    values: dict

    def __getitem__(self, name):
        return self.values[name]

    @property
    def position(self) -> str:
        return POSITION_BINS[self.values["position"]]

    def as_vector(self) -> list[int]:
        return [self.values[name] for name in FEATURE_NAMES]


def corpus_raw_features(corpus: Corpus, author_buckets: int = 16) -> list[dict]:
    rows = []
    for thread in corpus.threads:
        rows.extend(thread_raw_features(thread, author_buckets))
    return rows


def extract_features(post: Post, thread: Thread, corpus: Corpus, discretizer: FeatureDiscretizer | None = None,
                     author_buckets: int = 16) -> PostFeatures:
    """Binned features of ``post``; bins default to quartiles fitted on ``corpus``."""
    if discretizer is None:
        discretizer = FeatureDiscretizer.fit(corpus_raw_features(corpus, author_buckets), author_buckets)
    rows = thread_raw_features(thread, author_buckets)
    row = rows[thread.posts.index(post)]
    return PostFeatures(dict(zip(FEATURE_NAMES, discretizer.transform_row(row))))
