import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from forumacts.config import ModelConfig
from forumacts.corpus import Corpus, Post, Thread, Token
from forumacts.synthetic import PLANTED_LABELS, planted_corpus


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line (bypassing capture) and fail the test on FAIL."""

    def report(name: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail

    return report


@pytest.fixture(scope="session")
def planted():
    return planted_corpus(num_threads=200, seed=0)


@pytest.fixture(scope="session")
def planted_config():
    return ModelConfig(initial_num_clusters=3, label_set=PLANTED_LABELS)


def make_post(i, words, label=None, tags=None, author="a", embedding=None):
    tags = tags or [None] * len(words)
    tokens = tuple(Token(w, t) for w, t in zip(words, tags))
    return Post(i, author, tokens, label, embedding)


def make_corpus(threads, labels=("Problem", "Solution", "Other")):
    """``threads`` is a list of lists of (words, label) pairs."""
    out = []
    for t, posts in enumerate(threads):
        out.append(Thread(f"t{t}", tuple(make_post(i, w.split(), lab, author=f"u{i % 2}")
                                         for i, (w, lab) in enumerate(posts))))
    return Corpus(tuple(out), tuple(labels))


@pytest.fixture
def tiny_corpus():
    return make_corpus([
        [("my printer is broken", "Problem"), ("try restarting it", "Solution"), ("thanks that worked", "Other")],
        [("screen stays black", "Problem"), ("update the driver", "Solution")],
        [("wifi keeps dropping", "Problem"), ("reset the router", "Solution"), ("thanks", "Other"),
         ("same issue here", "Problem")],
    ])
