import numpy as np

from forumacts.corpus import Corpus, Post, Thread, Token
from forumacts.features import (
    FEATURE_NAMES, FeatureDiscretizer, NUM_BINS, corpus_raw_features, extract_features, thread_raw_features,
)


def _post(i, text, author="u", tags=None):
    words = text.split()
    tags = tags or [None] * len(words)
    return Post(i, author, tuple(Token(w, t) for w, t in zip(words, tags)))


def _thread():
    return Thread("t", (
        _post(0, "my jeep will not start ?", "op"),
        _post(1, "did you check the battery", "helper", tags=["VBD", "PRP", "VB", "DT", "NN"]),
        _post(2, "thanks that fixed it !", "op"),
        _post(3, "my jeep will not start ?", "other"),
        _post(4, "same problem here [URL]", "x"),
    ))


def test_position_and_flags():
    thread = _thread()
    corpus = Corpus((thread,), ("Problem", "Solution", "Other"))
    first = extract_features(thread.posts[0], thread, corpus)
    assert first.position == "first"
    assert extract_features(thread.posts[4], thread, corpus).position == "later"
    thanks = extract_features(thread.posts[2], thread, corpus)
    assert thanks["thanks"] == 1 and thanks["exclamation_mark"] == 1
    assert first["question_mark"] == 1
    helper = extract_features(thread.posts[1], thread, corpus)
    assert helper["did"] == 1 and helper["prev_question_mark"] == 1
    last = extract_features(thread.posts[4], thread, corpus)
    assert last["same_similar"] == 1 and last["quote_url_image"] == 1


def test_copy_of_initial_post_lands_in_top_similarity_bin():
    thread = _thread()
    corpus = Corpus((thread,), ("Problem",))
    rows = thread_raw_features(thread)
    assert rows[3]["initial_similarity"] == 1.0
    f = extract_features(thread.posts[3], thread, corpus)
    assert f["initial_similarity"] == NUM_BINS - 1


def test_author_features():
    rows = thread_raw_features(_thread())
    assert [r["author_prev_posts"] for r in rows] == [0, 0, 1, 0, 0]
    assert rows[0]["author_posts_in_thread"] == 2
    assert rows[2]["prev_same_author"] == 0


def test_single_post_thread():
    rows = thread_raw_features(Thread("s", (_post(0, "hello"),)))
    assert rows[0]["avg_similarity"] == 0.0 and rows[0]["initial_similarity"] == 1.0


def test_discretizer_bins_and_round_trip():
    corpus = Corpus((_thread(),), ("Problem",))
    raw = corpus_raw_features(corpus)
    disc = FeatureDiscretizer.fit(raw)
    X = disc.transform(raw)
    assert X.shape == (5, len(FEATURE_NAMES))
    sizes = np.array(disc.domain_sizes)
    assert ((X >= 0) & (X < sizes)).all()
    again = FeatureDiscretizer.from_dict(disc.to_dict())
    assert (again.transform(raw) == X).all()
