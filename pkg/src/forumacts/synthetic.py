"""Synthetic corpora sampled from a planted HMM, for tests and demos."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Post, Thread, Token

PLANTED_LABELS = ("Problem", "Solution", "Other")
PLANTED_PI = (0.8, 0.1, 0.1)
PLANTED_PHI = (
    (0.10, 0.70, 0.20),
    (0.10, 0.50, 0.40),
    (0.20, 0.40, 0.40),
)


@dataclass(frozen=True)
class PlantedCorpus:
    corpus: Corpus
    states: np.ndarray

    @property
    def labels(self) -> list[str]:
        return [self.corpus.label_set[s] for s in self.states]


def planted_corpus(
    num_threads: int = 200,
    length_range: tuple[int, int] = (3, 10),
    post_length: tuple[int, int] = (8, 20),
    words_per_state: int = 40,
    shared_words: int = 40,
    own_word_prob: float = 0.9,
    pi=PLANTED_PI,
    phi=PLANTED_PHI,
    label_names=PLANTED_LABELS,
    embedding_dim: int | None = None,
    labeled: bool = True,
    seed: int = 0,
) -> PlantedCorpus:
    """Sample threads from an HMM whose states own mostly disjoint vocabularies.

    Each token comes from its state's private word list with probability
    ``own_word_prob`` and from a shared list otherwise.  Private words carry a
    state-specific POS tag, shared words a neutral one, so POS n-grams are
    informative too.
    """
    rng = np.random.default_rng(seed)
    pi = np.asarray(pi, dtype=float)
    phi = np.asarray(phi, dtype=float)
    k = len(pi)
    own = [[f"s{s}w{i}" for i in range(words_per_state)] for s in range(k)]
    shared = [f"cw{i}" for i in range(shared_words)]
    own_tags = [(f"T{s}A", f"T{s}B") for s in range(k)]
    shared_tags = ("NN", "DT", "VB")
    # word-specific tags so a surface always has the same POS
    own_tag_of = {w: own_tags[s][i % 2] for s in range(k) for i, w in enumerate(own[s])}
    shared_tag_of = {w: shared_tags[i % 3] for i, w in enumerate(shared)}
    centers = rng.normal(0, 3, size=(k, embedding_dim)) if embedding_dim else None

    threads, states = [], []
    for t in range(num_threads):
        length = int(rng.integers(length_range[0], length_range[1] + 1))
        seq = [int(rng.choice(k, p=pi))]
        for _ in range(length - 1):
            seq.append(int(rng.choice(k, p=phi[seq[-1]])))
        posts = []
        authors = [f"user{int(a)}" for a in rng.integers(0, 30, size=length)]
        for i, s in enumerate(seq):
            tokens = []
            for _ in range(int(rng.integers(post_length[0], post_length[1] + 1))):
                if rng.random() < own_word_prob:
                    w = own[s][int(rng.integers(words_per_state))]
                    tokens.append(Token(w, own_tag_of[w]))
                else:
                    w = shared[int(rng.integers(shared_words))]
                    tokens.append(Token(w, shared_tag_of[w]))
            emb = tuple(float(x) for x in centers[s] + rng.normal(0, 1, embedding_dim)) if embedding_dim else None
            posts.append(Post(i, authors[i], tuple(tokens), label_names[s] if labeled else None, emb))
        threads.append(Thread(f"t{t}", tuple(posts)))
        states.extend(seq)
    return PlantedCorpus(Corpus(tuple(threads), tuple(label_names)), np.array(states))
