import numpy as np

from forumacts.synthetic import PLANTED_PHI, PLANTED_PI, planted_corpus


def test_shapes_and_determinism():
    a = planted_corpus(num_threads=30, embedding_dim=2, seed=4)
    b = planted_corpus(num_threads=30, embedding_dim=2, seed=4)
    assert a.corpus == b.corpus and np.array_equal(a.states, b.states)
    assert all(3 <= len(t.posts) <= 10 for t in a.corpus.threads)
    assert len(a.states) == a.corpus.num_posts
    assert a.labels == a.corpus.gold_labels()


def test_transition_statistics_follow_planted_model():
    pc = planted_corpus(num_threads=2000, seed=0)
    counts = np.zeros((3, 3))
    starts = np.zeros(3)
    i = 0
    for t in pc.corpus.threads:
        seq = pc.states[i:i + len(t.posts)]
        starts[seq[0]] += 1
        for a, b in zip(seq[:-1], seq[1:]):
            counts[a, b] += 1
        i += len(t.posts)
    assert np.allclose(starts / starts.sum(), PLANTED_PI, atol=0.03)
    assert np.allclose(counts / counts.sum(axis=1, keepdims=True), PLANTED_PHI, atol=0.03)


def test_unlabelled_option():
    pc = planted_corpus(num_threads=3, labeled=False, seed=1)
    assert set(pc.corpus.gold_labels()) == {None}
