"""Thread/post data model and the line-delimited corpus format.

One JSON object per line describes a thread::

    {"thread_id": "t1",
     "posts": [{"index": 0, "author": "u1",
                "tokens": [{"surface": "Hello", "pos": "UH", "stem": "hello"}, ...],
                "label": "Problem",
                "embedding": [0.1, ...],
                "flags": {"quote": false, "url": false, "img": false}}, ...]}

``label``, ``embedding``, ``flags`` and per-token ``pos``/``stem`` are optional.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .config import DEFAULT_LABELS, ModelConfig
from .errors import ConfigurationError, CorpusFormatError, CorpusValidationError

QUOTE, URL, IMG = "[QUOTE]", "[URL]", "[IMG]"

STOPWORDS = frozenset(
    """a an the and or but if of at by for with about to from in on is are was were be
    been being am i me my we our you your he him his she her it its they them their this
    that these those so than too very can will just do does""".split()
)


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str | None = None
    stem: str | None = None


@dataclass(frozen=True)
class Post:
    post_index: int
    author_id: str
    tokens: tuple[Token, ...]
    gold_label: str | None = None
    embedding: tuple[float, ...] | None = None
    has_quote: bool = False
    has_url: bool = False
    has_image: bool = False

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def pos_tags(self) -> list[str]:
        return [t.pos for t in self.tokens]

    @property
    def has_pos(self) -> bool:
        return all(t.pos for t in self.tokens)


@dataclass(frozen=True)
class Thread:
    thread_id: str
    posts: tuple[Post, ...]

    def __len__(self) -> int:
        return len(self.posts)


@dataclass(frozen=True)
class Corpus:
    threads: tuple[Thread, ...]
    label_set: tuple[str, ...] = DEFAULT_LABELS
    vocab: dict = field(default_factory=dict, compare=False)
    pos_vocab: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.vocab:
            object.__setattr__(self, "vocab", _index(t.surface for p in self.posts() for t in p.tokens))
        if not self.pos_vocab:
            object.__setattr__(
                self, "pos_vocab", _index(t.pos for p in self.posts() for t in p.tokens if t.pos)
            )

    def posts(self) -> Iterator[Post]:
        """All posts in thread-major order."""
        for thread in self.threads:
            yield from thread.posts

    @property
    def num_posts(self) -> int:
        return sum(len(t.posts) for t in self.threads)

    @property
    def thread_lengths(self) -> list[int]:
        return [len(t.posts) for t in self.threads]

    def gold_labels(self) -> list[str | None]:
        return [p.gold_label for p in self.posts()]

    def subset(self, thread_indices: Iterable[int]) -> "Corpus":
        return Corpus(tuple(self.threads[i] for i in thread_indices), self.label_set)

    def with_labels(self, labels: Iterable[str | None]) -> "Corpus":
        """Copy of the corpus with per-post labels replaced (thread-major order)."""
        it = iter(labels)
        threads = []
        for thread in self.threads:
            posts = tuple(_replace_label(p, next(it)) for p in thread.posts)
            threads.append(Thread(thread.thread_id, posts))
        return Corpus(tuple(threads), self.label_set)


def _replace_label(post: Post, label: str | None) -> Post:
    return replace(post, gold_label=label)


def _index(items: Iterable[str]) -> dict[str, int]:
    index: dict[str, int] = {}
    for item in items:
        if item not in index:
            index[item] = len(index)
    return index


def _parse_token(raw, lineno: int, lowercase: bool) -> Token:
    if not isinstance(raw, dict) or not isinstance(raw.get("surface"), str) or not raw["surface"]:
        raise CorpusFormatError("token must be an object with a non-empty 'surface'", lineno)
    surface = raw["surface"]
    if lowercase and surface not in (QUOTE, URL, IMG):
        surface = surface.lower()
    pos = raw.get("pos") or None
    stem = raw.get("stem") or None
    return Token(surface, pos, stem)


def _parse_post(raw, lineno: int, config: ModelConfig) -> Post:
    if not isinstance(raw, dict):
        raise CorpusFormatError("post must be an object", lineno)
    try:
        index = int(raw["index"])
        author = str(raw["author"])
        raw_tokens = raw["tokens"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"post missing or invalid field: {exc}", lineno) from exc
    if not isinstance(raw_tokens, list) or not raw_tokens:
        raise CorpusFormatError("post tokens must be a non-empty list", lineno)
    tokens = [_parse_token(t, lineno, config.lowercase) for t in raw_tokens]
    if config.remove_stopwords:
        kept = [t for t in tokens if t.surface not in STOPWORDS]
        # a post made only of stopwords keeps its tokens
        tokens = kept or tokens
    embedding = raw.get("embedding")
    if embedding is not None:
        try:
            embedding = tuple(float(x) for x in embedding)
        except (TypeError, ValueError) as exc:
            raise CorpusFormatError("embedding must be a list of numbers", lineno) from exc
    surfaces = {t.surface for t in tokens}
    flags = raw.get("flags") or {}
    return Post(
        post_index=index,
        author_id=author,
        tokens=tuple(tokens),
        gold_label=raw.get("label") or None,
        embedding=embedding,
        has_quote=bool(flags.get("quote", QUOTE in surfaces)),
        has_url=bool(flags.get("url", URL in surfaces)),
        has_image=bool(flags.get("img", IMG in surfaces)),
    )


def parse_thread(line: str, lineno: int, config: ModelConfig) -> Thread:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"invalid JSON: {exc.msg}", lineno) from exc
    if not isinstance(raw, dict) or "thread_id" not in raw or not isinstance(raw.get("posts"), list):
        raise CorpusFormatError("record needs 'thread_id' and a 'posts' list", lineno)
    if not raw["posts"]:
        raise CorpusFormatError("thread has no posts", lineno)
    posts = sorted((_parse_post(p, lineno, config) for p in raw["posts"]), key=lambda p: p.post_index)
    for a, b in zip(posts, posts[1:]):
        if a.post_index == b.post_index:
            raise CorpusFormatError(f"duplicate post index {a.post_index}", lineno)
    return Thread(str(raw["thread_id"]), tuple(posts))


def validate_corpus(corpus: Corpus, config: ModelConfig) -> None:
    dims = set()
    with_embedding = 0
    for thread in corpus.threads:
        for post in thread.posts:
            where = f"thread {thread.thread_id!r} post {post.post_index}"
            if post.gold_label is not None and post.gold_label not in corpus.label_set:
                raise CorpusValidationError(f"{where}: label {post.gold_label!r} not in label set")
            if config.use_pos and not post.has_pos:
                raise ConfigurationError(f"{where}: POS model enabled but tokens lack 'pos' tags")
            if post.embedding is not None:
                with_embedding += 1
                dims.add(len(post.embedding))
    if with_embedding and (with_embedding != corpus.num_posts or len(dims) != 1):
        raise CorpusValidationError(
            f"embeddings must be present on every post with one dimensionality; "
            f"found {with_embedding}/{corpus.num_posts} posts, dims {sorted(dims)}"
        )
    if config.use_embeddings and not with_embedding:
        raise ConfigurationError("useEmbeddings is on but the corpus carries no embeddings")


def read_threads(lines: Iterable[str], config: ModelConfig) -> list[Thread]:
    threads = []
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            threads.append(parse_thread(line, lineno, config))
    return threads


def load_corpus(path: str | Path, config: ModelConfig | None = None) -> Corpus:
    config = config or ModelConfig()
    with open(path, encoding="utf-8") as fh:
        threads = read_threads(fh, config)
    corpus = Corpus(tuple(threads), config.label_set)
    validate_corpus(corpus, config)
    return corpus


def post_to_record(post: Post) -> dict:
    tokens = []
    for tok in post.tokens:
        entry = {"surface": tok.surface}
        if tok.pos:
            entry["pos"] = tok.pos
        if tok.stem:
            entry["stem"] = tok.stem
        tokens.append(entry)
    record = {"index": post.post_index, "author": post.author_id, "tokens": tokens}
    if post.gold_label is not None:
        record["label"] = post.gold_label
    if post.embedding is not None:
        record["embedding"] = list(post.embedding)
    record["flags"] = {"quote": post.has_quote, "url": post.has_url, "img": post.has_image}
    return record


def thread_to_record(thread: Thread) -> dict:
    return {"thread_id": thread.thread_id, "posts": [post_to_record(p) for p in thread.posts]}


def dump_corpus(corpus: Corpus, path: str | Path, extra: list[list[dict]] | None = None) -> None:
    """Write ``corpus`` in the line-delimited format.

    ``extra`` optionally holds one dict per post (grouped by thread) whose keys
    are merged into the post records, e.g. decoded state ids.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for t_i, thread in enumerate(corpus.threads):
            record = thread_to_record(thread)
            if extra is not None:
                for rec, more in zip(record["posts"], extra[t_i]):
                    rec.update(more)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def corpus_stats(corpus: Corpus) -> dict:
    counts = Counter(p.gold_label for p in corpus.posts() if p.gold_label is not None)
    return {
        "threads": len(corpus.threads),
        "posts": corpus.num_posts,
        "labeled_posts": sum(counts.values()),
        "label_counts": {label: counts.get(label, 0) for label in corpus.label_set},
    }
