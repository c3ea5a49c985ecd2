"""Dialogue-act categorisation of forum posts with HMM conversation models."""

__version__ = "0.1.0"

from .config import DEFAULT_LABELS, ExperimentConfig, ModelConfig, load_config
from .corpus import Corpus, Post, Thread, Token, corpus_stats, dump_corpus, load_corpus
from .evaluation import EvalReport, coarse_grain, compute_metrics, run_baselines
from .experiment import crossval_semisupervised, run_unsupervised_experiment, sweep
from .mapping import build_weight_matrix, optimal_mapping
from .training import ConversationModel, TrainingResult, train_semisupervised, train_unsupervised

__all__ = [
    "DEFAULT_LABELS",
    "ConversationModel",
    "Corpus",
    "EvalReport",
    "ExperimentConfig",
    "ModelConfig",
    "Post",
    "Thread",
    "Token",
    "TrainingResult",
    "build_weight_matrix",
    "coarse_grain",
    "compute_metrics",
    "corpus_stats",
    "crossval_semisupervised",
    "dump_corpus",
    "load_config",
    "load_corpus",
    "optimal_mapping",
    "run_baselines",
    "run_unsupervised_experiment",
    "sweep",
    "train_semisupervised",
    "train_unsupervised",
]
