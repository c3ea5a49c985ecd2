"""Model and experiment configuration.

Config files are JSON objects whose keys use the camelCase parameter names
(``initialNumClusters``, ``stateSizeThreshold``, ``delta1`` ...).  In Python
the same values live on snake_case dataclass attributes.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigurationError

DEFAULT_LABELS = (
    "Problem",
    "Solution",
    "Clarification-Request",
    "Clarification",
    "Feedback",
    "Other",
)


def _key(name: str, default: Any, **kw) -> Any:
    if isinstance(default, (list, dict, tuple)):
        return field(default_factory=lambda: default, metadata={"key": name}, **kw)
    return field(default=default, metadata={"key": name}, **kw)


@dataclass(frozen=True)
class ModelConfig:
    initial_num_clusters: int = _key("initialNumClusters", 6)
    merge_insertion_states: bool = _key("mergeInsertionStates", False)
    state_size_threshold: int = _key("stateSizeThreshold", 0)
    lm_type: str = _key("lmType", "unigram")
    delta1: float = _key("delta1", 1e-2)
    delta2: float = _key("delta2", 1e-9)
    max_num_iterations: int = _key("maxNumIterations", 100)
    num_mixture_components: int = _key("numMixtureComponents", 3)

    lam: float = _key("lambda", 0.999)
    use_pos: bool = _key("usePOS", False)
    use_features: bool = _key("useFeatures", False)
    use_embeddings: bool = _key("useEmbeddings", False)
    use_gmm: bool = _key("useGMM", False)
    fractional_lambda: bool = _key("fractionalLambda", False)
    word_lm: bool = _key("wordLM", True)
    char_lm: bool = _key("charLM", False)
    char_order: int = _key("charOrder", 3)
    skipgram_lm: bool = _key("skipGramLM", False)
    max_skip: int = _key("maxSkip", 2)

    lowercase: bool = _key("lowercase", True)
    remove_stopwords: bool = _key("removeStopwords", False)
    tfidf: bool = _key("tfidf", False)
    transition_norm: str = _key("transitionNormalization", "global")
    normalize_emissions: bool = _key("normalizeEmissions", False)
    convergence_tol: float = _key("convergenceTolerance", 1e-6)

    gmm_variance_floor: float = _key("gmmVarianceFloor", 1e-6)
    gmm_max_dims: int = _key("gmmMaxDims", 100)
    gmm_max_iter: int = _key("gmmMaxIterations", 200)
    gmm_restarts: int = _key("gmmRestarts", 1)
    author_buckets: int = _key("authorBuckets", 16)

    label_set: tuple = _key("labelSet", DEFAULT_LABELS)
    seed: int = _key("seed", 0)

    def __post_init__(self):
        object.__setattr__(self, "label_set", tuple(self.label_set))
        self.validate()

    @property
    def ngram_order(self) -> int:
        return 1 if self.lm_type == "unigram" else 2

    def validate(self) -> None:
        problems = []
        if self.initial_num_clusters < 1:
            problems.append("initialNumClusters must be >= 1")
        if self.state_size_threshold < 0:
            problems.append("stateSizeThreshold must be >= 0")
        if self.lm_type not in ("unigram", "bigram"):
            problems.append(f"lmType must be 'unigram' or 'bigram', got {self.lm_type!r}")
        if not self.delta1 > 0 or not self.delta2 > 0:
            problems.append("delta1 and delta2 must be > 0")
        if self.max_num_iterations < 0:
            problems.append("maxNumIterations must be >= 0")
        if self.num_mixture_components < 1:
            problems.append("numMixtureComponents must be >= 1")
        if not 0.0 <= self.lam <= 1.0:
            problems.append("lambda must lie in [0, 1]")
        if self.transition_norm not in ("global", "row"):
            problems.append("transitionNormalization must be 'global' or 'row'")
        if self.use_pos and not self.word_lm:
            problems.append("usePOS combines with the word LM; wordLM must be on")
        if not (self.word_lm or self.char_lm or self.skipgram_lm or self.use_gmm):
            problems.append("no emission model enabled")
        if self.char_order < 1 or self.max_skip < 0:
            problems.append("charOrder must be >= 1 and maxSkip >= 0")
        if self.gmm_variance_floor <= 0 or self.gmm_max_dims < 1 or self.gmm_restarts < 1:
            problems.append("invalid GMM settings")
        if self.seed < 0:
            problems.append("seed must be >= 0")
        if self.author_buckets < 1:
            problems.append("authorBuckets must be >= 1")
        if len(set(self.label_set)) != len(self.label_set) or not self.label_set:
            problems.append("labelSet must be a non-empty list of distinct names")
        if problems:
            raise ConfigurationError("; ".join(problems))

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.metadata["key"]] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**_translate(cls, data))


_EXPERIMENT_KEYS = {"folds", "repetitions", "mode", "grid"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    folds: int = 5
    repetitions: int = 10
    mode: str = "semi"
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigurationError("folds must be >= 2")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        if self.mode not in ("semi", "unsup"):
            raise ConfigurationError("mode must be 'semi' or 'unsup'")
        for key, values in self.grid.items():
            _param_name(key)
            if not isinstance(values, (list, tuple)) or not values:
                raise ConfigurationError(f"grid entry {key!r} must be a non-empty list")

    @property
    def seed(self) -> int:
        return self.model.seed

    def to_dict(self) -> dict:
        out = self.model.to_dict()
        out.update(folds=self.folds, repetitions=self.repetitions, mode=self.mode,
                   grid={k: list(v) for k, v in self.grid.items()})
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        model_part = {k: v for k, v in data.items() if k not in _EXPERIMENT_KEYS}
        extra = {k: data[k] for k in _EXPERIMENT_KEYS if k in data}
        return cls(model=ModelConfig.from_dict(model_part), **extra)


def _name_map(cls) -> dict[str, str]:
    return {f.metadata["key"]: f.name for f in dataclasses.fields(cls)}


def _param_name(key: str) -> str:
    """Resolve a camelCase config key (or snake_case attribute) to an attribute name."""
    names = _name_map(ModelConfig)
    if key in names:
        return names[key]
    if key in names.values():
        return key
    raise ConfigurationError(f"unknown configuration key {key!r}")


def _translate(cls, data: dict) -> dict:
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a JSON object")
    return {_param_name(k): v for k, v in data.items()}


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        return ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
