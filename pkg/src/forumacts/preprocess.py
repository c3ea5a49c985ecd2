"""N-gram extraction, gram vocabularies and post vectors."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .corpus import Post
from .errors import ParameterError

KINDS = ("word", "pos", "char", "skip")


@dataclass(frozen=True)
class NGramBag:
    grams: Counter
    n: int
    kind: str

    def __len__(self) -> int:
        return sum(self.grams.values())


def _units(post: Post, kind: str) -> Sequence[str]:
    if kind in ("word", "skip"):
        return post.surfaces
    if kind == "pos":
        if not post.has_pos:
            raise ParameterError("POS n-grams requested for a post without POS tags")
        return post.pos_tags
    if kind == "char":
        return " ".join(post.surfaces)
    raise ParameterError(f"unknown gram kind {kind!r}")


def gram_sequence(post: Post, n: int, kind: str = "word", max_skip: int = 2) -> list[tuple]:
    """Grams of ``post`` in positional order.

    For ``skip`` the grams are word pairs separated by at most ``max_skip``
    intervening tokens, and ``n`` is ignored.
    """
    if n < 1:
        raise ParameterError(f"gram order must be >= 1, got {n}")
    units = _units(post, kind)
    if kind == "skip":
        return [
            (units[i], units[j])
            for i in range(len(units))
            for j in range(i + 1, min(len(units), i + max_skip + 2))
        ]
    return [tuple(units[i : i + n]) for i in range(len(units) - n + 1)]


def extract_ngrams(post: Post, n: int, kind: str = "word", max_skip: int = 2) -> NGramBag:
    grams = Counter(gram_sequence(post, n, kind, max_skip))
    return NGramBag(grams, 2 if kind == "skip" else n, kind)


class GramSpace:
    """Index of every gram of one kind/order seen in a set of posts.

    Bag matrices built against a space have one extra trailing column that
    collects out-of-vocabulary grams.
    """

    def __init__(self, kind: str, n: int, index: Mapping[tuple, int] | None = None, max_skip: int = 2):
        self.kind = kind
        self.n = n
        self.max_skip = max_skip
        self.index: dict[tuple, int] = dict(index or {})

    @classmethod
    def build(cls, posts: Iterable[Post], kind: str, n: int, max_skip: int = 2) -> "GramSpace":
        space = cls(kind, n, max_skip=max_skip)
        for post in posts:
            for gram in gram_sequence(post, n, kind, max_skip):
                if gram not in space.index:
                    space.index[gram] = len(space.index)
        return space

    @property
    def size(self) -> int:
        return len(self.index)

    @property
    def oov(self) -> int:
        return len(self.index)

    def grams(self, post: Post) -> list[tuple]:
        return gram_sequence(post, self.n, self.kind, self.max_skip)

    def ids(self, post: Post) -> list[int]:
        oov = self.oov
        return [self.index.get(g, oov) for g in self.grams(post)]

    def bag_matrix(self, posts: Sequence[Post]) -> sparse.csr_matrix:
        rows, cols = [], []
        for r, post in enumerate(posts):
            ids = self.ids(post)
            rows.extend([r] * len(ids))
            cols.extend(ids)
        data = np.ones(len(rows))
        return sparse.csr_matrix((data, (rows, cols)), shape=(len(posts), self.size + 1))


def vectorize(post: Post, vocab: Mapping, n: int = 1) -> np.ndarray:
    """Dense n-gram count vector of ``post`` in ``vocab`` order.

    ``vocab`` maps grams to column indices; for unigrams plain strings are
    accepted as keys.  Grams outside the vocabulary are dropped.
    """
    vec = np.zeros(len(vocab))
    for gram in gram_sequence(post, n, "word"):
        idx = vocab.get(gram)
        if idx is None and n == 1:
            idx = vocab.get(gram[0])
        if idx is not None:
            vec[idx] += 1
    return vec


def vectorize_posts(posts: Sequence[Post], n: int = 1, tfidf: bool = False) -> sparse.csr_matrix:
    """Count (or tf-idf) matrix over the word n-grams of ``posts``."""
    space = GramSpace.build(posts, "word", n)
    X = space.bag_matrix(posts)[:, : space.size].tocsr()
    return tfidf_weight(X) if tfidf else X


def tfidf_weight(X) -> sparse.csr_matrix:
    X = sparse.csr_matrix(X, dtype=float)
    df = np.asarray((X > 0).sum(axis=0)).ravel()
    idf = np.log(X.shape[0] / np.maximum(df, 1))
    return (X @ sparse.diags(idf)).tocsr()


def cosine_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0
    return float(np.clip(1.0 - a.dot(b) / (na * nb), 0.0, 2.0))


def cosine_similarity_matrix(X) -> np.ndarray:
    """Pairwise cosine similarity of the rows of ``X``; zero rows score 0."""
    if sparse.issparse(X):
        X = X.toarray()
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    U = X / safe[:, None]
    return np.clip(U @ U.T, -1.0, 1.0)


def cosine_distance_matrix(X) -> np.ndarray:
    if sparse.issparse(X):
        X = X.toarray()
    X = np.asarray(X, dtype=float)
    D = 1.0 - cosine_similarity_matrix(X)
    zero = np.linalg.norm(X, axis=1) == 0
    D[zero, :] = 1.0
    D[:, zero] = 1.0
    np.fill_diagonal(D, 0.0)
    return np.clip(D, 0.0, 2.0)
