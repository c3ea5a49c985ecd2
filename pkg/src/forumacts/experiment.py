"""Cross-validation, repeated unsupervised runs, grid sweeps and result files."""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, ModelConfig, _param_name
from .corpus import Corpus
from .errors import ExperimentError, ForumActsError, StateCollapseError
from .evaluation import COARSE_LABELS, EvalReport, coarse_grain, compute_metrics, mean_aggregates
from .mapping import build_weight_matrix, optimal_mapping
from .training import train_semisupervised, train_unsupervised

log = logging.getLogger(__name__)


def derive_seed(*path: int) -> int:
    """Deterministic child seed for a (master, repetition, fold, ...) path."""
    return int(np.random.SeedSequence([int(p) for p in path]).generate_state(1)[0])


def fold_partition(num_threads: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle thread indices and deal them round-robin into ``folds`` folds."""
    if folds < 2:
        raise ExperimentError("need at least two folds")
    if num_threads < folds:
        raise ExperimentError(f"{num_threads} threads cannot fill {folds} folds")
    order = rng.permutation(num_threads)
    return [np.sort(order[i::folds]) for i in range(folds)]


@dataclass
class RunRecord:
    repetition: int
    fold: int | None
    report: EvalReport | None = None
    coarse_report: EvalReport | None = None
    rejected: bool = False
    reason: str = ""
    iterations: int = 0
    converged: bool = False
    model: object = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "repetition": self.repetition,
            "fold": self.fold,
            "rejected": self.rejected,
            "reason": self.reason,
            "iterations": self.iterations,
            "converged": self.converged,
            "report": self.report.to_dict() if self.report else None,
            "coarse_report": self.coarse_report.to_dict() if self.coarse_report else None,
        }


@dataclass
class RunResult:
    mode: str
    config: ExperimentConfig
    records: list = field(default_factory=list)

    @property
    def accepted(self) -> list[RunRecord]:
        return [r for r in self.records if not r.rejected]

    @property
    def rejected(self) -> bool:
        return not self.accepted

    @property
    def aggregate(self) -> dict:
        return mean_aggregates([r.report for r in self.accepted])

    @property
    def coarse_aggregate(self) -> dict:
        return mean_aggregates([r.coarse_report for r in self.accepted if r.coarse_report])

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "runs": len(self.records),
            "rejected_runs": len(self.records) - len(self.accepted),
            "aggregate": self.aggregate,
            "coarse_aggregate": self.coarse_aggregate,
        }


def _evaluate(pred, gold, label_set, coarse: bool, record: RunRecord) -> RunRecord:
    record.report = compute_metrics(pred, gold, label_set)
    if coarse:
        record.coarse_report = compute_metrics(coarse_grain(pred), coarse_grain(gold), COARSE_LABELS)
    return record


def crossval_semisupervised(corpus: Corpus, config: ExperimentConfig, coarse: bool = True) -> RunResult:
    """Repeated n-fold runs where one fold initialises the priors and the other n-1 are evaluated."""
    model = config.model
    if not any(p.gold_label for p in corpus.posts()):
        raise ExperimentError("semi-supervised cross-validation needs gold labels")
    result = RunResult("semi", config)
    labels = model.label_set
    for rep in range(config.repetitions):
        rng = np.random.default_rng([model.seed, rep])
        folds = fold_partition(len(corpus.threads), config.folds, rng)
        for f, train_idx in enumerate(folds):
            eval_idx = np.sort(np.concatenate([folds[g] for g in range(config.folds) if g != f]))
            train, evaluation = corpus.subset(train_idx), corpus.subset(eval_idx)
            cfg = model.replace(seed=derive_seed(model.seed, rep, f))
            record = RunRecord(rep, f)
            try:
                trained = train_semisupervised(train, evaluation, cfg)
            except ForumActsError as exc:
                record.rejected, record.reason = True, str(exc)
                result.records.append(record)
                continue
            record.iterations, record.converged = trained.trace.iterations, trained.trace.converged
            record.model = trained.model
            pred = [labels[s] for s in trained.states]
            _evaluate(pred, evaluation.gold_labels(), labels, coarse, record)
            result.records.append(record)
            log.info("rep %d fold %d MicroA=%.3f", rep, f, record.report.aggregates["MicroA"])
    return result


def unsupervised_run(corpus: Corpus, cfg: ModelConfig, rep: int = 0, coarse: bool = True):
    """One unsupervised training + mapping + evaluation.  Returns (record, training result or None)."""
    labels = cfg.label_set
    record = RunRecord(rep, None)
    try:
        trained = train_unsupervised(corpus, cfg)
    except StateCollapseError as exc:
        record.rejected, record.reason = True, str(exc)
        return record, None
    record.iterations, record.converged = trained.trace.iterations, trained.trace.converged
    record.model = trained.model
    found = trained.occupied_states
    if found != len(labels):
        record.rejected = True
        record.reason = f"produced {found} states, expected {len(labels)}"
        return record, trained
    gold = corpus.gold_labels()
    mapping = optimal_mapping(build_weight_matrix(trained.states, gold, labels, trained.num_states))
    trained.model.state_names = [
        None if mapping.assignment.get(s) is None else labels[mapping.assignment[s]]
        for s in range(trained.num_states)
    ]
    pred = mapping.apply(trained.states, labels)
    _evaluate(pred, gold, labels, coarse, record)
    return record, trained


def run_unsupervised_experiment(corpus: Corpus, config: ExperimentConfig, coarse: bool = True) -> RunResult:
    """Train on the full corpus, map clusters to labels and evaluate, ``repetitions`` times.

    Only GMM initialisation is random, so configurations without GMMs are
    run once.  Runs that end with a state count different from the label
    count are recorded as rejected.
    """
    model = config.model
    result = RunResult("unsup", config)
    reps = config.repetitions if model.use_gmm else 1
    for rep in range(reps):
        cfg = model.replace(seed=derive_seed(model.seed, rep))
        record, _ = unsupervised_run(corpus, cfg, rep, coarse)
        if record.rejected:
            log.info("rep %d rejected: %s", rep, record.reason)
        result.records.append(record)
    return result


def run_experiment(corpus: Corpus, config: ExperimentConfig, coarse: bool = True) -> RunResult:
    if config.mode == "semi":
        return crossval_semisupervised(corpus, config, coarse)
    return run_unsupervised_experiment(corpus, config, coarse)


@dataclass
class SweepResult:
    points: list  # (param dict, RunResult)

    def best(self, metric: str):
        live = [(p, r) for p, r in self.points if not r.rejected]
        if not live:
            return None
        return max(live, key=lambda pr: pr[1].aggregate[metric])

    def summary(self) -> dict:
        out = {"points": [{"params": p, **r.summary()} for p, r in self.points]}
        for metric in ("MicroA", "MacroA"):
            best = self.best(metric)
            out[f"best_{metric}"] = None if best is None else {"params": best[0], "aggregate": best[1].aggregate}
        return out


def sweep(corpus: Corpus, config: ExperimentConfig, grid: dict | None = None, coarse: bool = False) -> SweepResult:
    """Run every point of the cartesian ``grid`` (keys are config parameter names)."""
    grid = config.grid if grid is None else grid
    if not grid:
        raise ExperimentError("parameter grid is empty")
    keys = list(grid)
    points = []
    for values in itertools.product(*(grid[k] for k in keys)):
        params = dict(zip(keys, values))
        try:
            model = config.model.replace(**{_param_name(k): v for k, v in params.items()})
            point_cfg = ExperimentConfig(model, config.folds, config.repetitions, config.mode)
        except ForumActsError as exc:
            log.warning("skipping grid point %s: %s", params, exc)
            continue
        points.append((params, run_experiment(corpus, point_cfg, coarse)))
    return SweepResult(points)


def write_results(result: RunResult, out_dir: str | Path) -> None:
    """One report per run (JSON + text table) plus ``aggregate.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rec in result.records:
        stem = f"rep{rec.repetition}" + (f"_fold{rec.fold}" if rec.fold is not None else "")
        (out / f"{stem}.json").write_text(json.dumps(rec.to_dict(), indent=2), encoding="utf-8")
        if rec.report is not None:
            text = rec.report.table()
            if rec.coarse_report is not None:
                text += "\n\ncoarse-grained\n" + rec.coarse_report.table()
            (out / f"{stem}.txt").write_text(text + "\n", encoding="utf-8")
        else:
            (out / f"{stem}.txt").write_text(f"rejected: {rec.reason}\n", encoding="utf-8")
    (out / "aggregate.json").write_text(json.dumps(result.summary(), indent=2), encoding="utf-8")
