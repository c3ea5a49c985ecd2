import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forumacts.config import ExperimentConfig, ModelConfig
from forumacts.errors import ExperimentError
from forumacts.experiment import (
    crossval_semisupervised, derive_seed, fold_partition, run_unsupervised_experiment, sweep, write_results,
)
from forumacts.synthetic import PLANTED_LABELS, planted_corpus


@pytest.fixture(scope="module")
def corpus():
    return planted_corpus(num_threads=40, embedding_dim=3, seed=31).corpus


def _cfg(**kw):
    kw.setdefault("initial_num_clusters", 3)
    return ModelConfig(label_set=PLANTED_LABELS, **kw)


def test_fold_sizes():
    folds = fold_partition(100, 5, np.random.default_rng(0))
    assert [len(f) for f in folds] == [20] * 5
    folds = fold_partition(93, 10, np.random.default_rng(0))
    assert sorted(len(f) for f in folds) == [9] * 7 + [10] * 3


@given(st.integers(2, 60), st.integers(2, 10), st.integers(0, 1000))
def test_folds_partition_threads(n, k, seed):
    if n < k:
        with pytest.raises(ExperimentError):
            fold_partition(n, k, np.random.default_rng(seed))
        return
    folds = fold_partition(n, k, np.random.default_rng(seed))
    flat = np.concatenate(folds)
    assert sorted(flat.tolist()) == list(range(n))


def test_crossval_is_reproducible(corpus):
    cfg = ExperimentConfig(_cfg(), folds=4, repetitions=2)
    a, b = crossval_semisupervised(corpus, cfg), crossval_semisupervised(corpus, cfg)
    assert len(a.records) == 8
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]


def test_crossval_eval_sizes(corpus):
    cfg = ExperimentConfig(_cfg(max_num_iterations=1), folds=5, repetitions=1)
    result = crossval_semisupervised(corpus, cfg)
    rng = np.random.default_rng([cfg.seed, 0])
    folds = fold_partition(40, 5, rng)
    for rec, train in zip(result.records, folds):
        expected = corpus.num_posts - sum(len(corpus.threads[i].posts) for i in train)
        assert rec.report.num_posts == expected


def test_crossval_too_many_folds(corpus):
    with pytest.raises(ExperimentError):
        crossval_semisupervised(corpus.subset(range(3)), ExperimentConfig(_cfg(), folds=5, repetitions=1))


def test_unsupervised_happy_path(corpus):
    result = run_unsupervised_experiment(corpus, ExperimentConfig(_cfg(), mode="unsup"))
    assert len(result.records) == 1 and not result.rejected
    assert result.aggregate["MicroA"] > 0.5
    assert result.records[0].coarse_report is not None


def test_unsupervised_rejection(corpus):
    cfg = _cfg(initial_num_clusters=6, merge_insertion_states=True, state_size_threshold=10**6)
    result = run_unsupervised_experiment(corpus, ExperimentConfig(cfg, mode="unsup"))
    assert result.rejected and result.aggregate == {}
    wrong_count = run_unsupervised_experiment(corpus, ExperimentConfig(_cfg(initial_num_clusters=2), mode="unsup"))
    assert wrong_count.rejected
    assert "expected 3" in wrong_count.records[0].reason


def test_gmm_repetitions_average(corpus):
    cfg = _cfg(use_gmm=True, use_embeddings=True, num_mixture_components=2, max_num_iterations=3)
    result = run_unsupervised_experiment(corpus, ExperimentConfig(cfg, repetitions=10, mode="unsup"))
    assert len(result.records) == 10
    accepted = result.accepted
    if accepted:
        assert result.aggregate["MicroA"] == pytest.approx(
            np.mean([r.report.aggregates["MicroA"] for r in accepted]))
    seeds = {derive_seed(cfg.seed, rep) for rep in range(10)}
    assert len(seeds) == 10


def test_singleton_sweep_equals_direct_run(corpus):
    base = ExperimentConfig(_cfg(), mode="unsup")
    swept = sweep(corpus, base, {"delta1": [0.01]})
    direct = run_unsupervised_experiment(corpus, base, coarse=False)
    assert swept.best("MicroA")[1].aggregate == direct.aggregate


def test_sweep_picks_best_and_skips_rejected(corpus):
    base = ExperimentConfig(_cfg(), mode="unsup")
    result = sweep(corpus, base, {"initialNumClusters": [2, 3]})
    params, best = result.best("MicroA")
    assert params == {"initialNumClusters": 3}
    assert result.points[0][1].rejected
    grid = sweep(corpus, base, {"delta1": [1e-1, 1e-3, 1e-9]})
    best_micro = max(r.aggregate["MicroA"] for _, r in grid.points)
    assert grid.best("MicroA")[1].aggregate["MicroA"] == best_micro
    assert grid.summary()["best_MicroA"]["params"] in [p for p, _ in grid.points]


def test_empty_grid(corpus):
    with pytest.raises(ExperimentError):
        sweep(corpus, ExperimentConfig(_cfg()), {})


def test_write_results(tmp_path, corpus):
    result = crossval_semisupervised(corpus, ExperimentConfig(_cfg(max_num_iterations=1), folds=2, repetitions=1))
    write_results(result, tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["aggregate.json", "rep0_fold0.json", "rep0_fold0.txt", "rep0_fold1.json", "rep0_fold1.txt"]
    summary = json.loads((tmp_path / "aggregate.json").read_text())
    assert summary["aggregate"]["MicroA"] == pytest.approx(result.aggregate["MicroA"])
    assert "coarse-grained" in (tmp_path / "rep0_fold0.txt").read_text()
