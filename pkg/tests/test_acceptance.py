"""Acceptance gate.  One test per criterion; each prints a single PASS/FAIL line."""
import math
import time
from collections import Counter
from fractions import Fraction

import numpy as np

from forumacts.config import ModelConfig
from forumacts.corpus import Post, Thread, Token
from forumacts.emission import fit_language_model, score_post_combined, score_post_lm
from forumacts.evaluation import (
    OTHER, PROBLEM, SOLUTION, baseline_majority, baseline_ps_heuristic1, baseline_ps_heuristic2,
    compute_metrics,
)
from forumacts.gmm import fit_gmm
from forumacts.hmm import path_log_score, viterbi
from forumacts.mapping import build_weight_matrix, optimal_mapping
from forumacts.synthetic import PLANTED_LABELS, planted_corpus
from forumacts.training import _converged, train_semisupervised, train_unsupervised

from oracles import brute_force_assignment, brute_force_viterbi, metrics_oracle, smoothed_categorical


def _random_stochastic(rng, *shape):
    x = rng.random(shape) + 1e-3
    return x / x.sum(axis=-1, keepdims=True)


def _mapped_accuracy(states, gold, labels, eval_mask=None):
    w = build_weight_matrix(states, gold, labels)
    pred = optimal_mapping(w).apply(states, labels)
    if eval_mask is None:
        eval_mask = np.ones(len(gold), dtype=bool)
    hits = [p == g for p, g, m in zip(pred, gold, eval_mask) if m]
    return sum(hits) / len(hits)


def test_ac01_viterbi_matches_exhaustive_search(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    mismatches = 0
    trials = 1000
    for _ in range(trials):
        k = int(rng.integers(2, 6))
        t = int(rng.integers(2, 9))
        pi = _random_stochastic(rng, k)
        phi = _random_stochastic(rng, k, k)
        b = np.log(rng.random((t, k)) + 1e-6)
        path, score = viterbi(b, pi, phi)
        ref_path, ref_score = brute_force_viterbi(b, np.log(pi), np.log(phi))
        if list(path) != ref_path or not math.isclose(score, ref_score, rel_tol=1e-12, abs_tol=1e-12):
            mismatches += 1
        if not math.isclose(path_log_score(path, b, pi, phi), score, rel_tol=1e-12, abs_tol=1e-12):
            mismatches += 1
    elapsed = time.perf_counter() - start
    verdict("AC1 viterbi == exhaustive argmax", mismatches == 0 and elapsed < 30,
            f"{trials} HMMs, {mismatches} mismatches, {elapsed:.1f}s")


def test_ac02_mapping_matches_brute_force(verdict):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    bad = 0
    trials = 1000
    for _ in range(trials):
        r, c = rng.integers(1, 7, size=2)
        w = rng.integers(0, 20, size=(r, c))
        m = optimal_mapping(w)
        achieved = sum(w[row, col] for row, col in m.assignment.items() if col is not None)
        best = brute_force_assignment(w.tolist())
        used = [col for col in m.assignment.values() if col is not None]
        if m.total != best or achieved != best or len(used) != len(set(used)):
            bad += 1
    elapsed = time.perf_counter() - start
    verdict("AC2 Kuhn-Munkres == brute force", bad == 0 and elapsed < 10,
            f"{trials} matrices, {bad} mismatches, {elapsed:.1f}s")


def test_ac03_metrics_match_oracle(verdict):
    rng = np.random.default_rng(3)
    labels = ("Problem", "Solution", "Clarification-Request", "Clarification", "Feedback", "Other")
    worst = 0.0
    micro_ok = True
    for trial in range(1000):
        k = int(rng.integers(1, len(labels) + 1))
        ls = labels[:k]
        n = int(rng.integers(1, 60))
        gold = [ls[i] for i in rng.integers(0, k, n)]
        pred = [ls[i] for i in rng.integers(0, k, n)]
        partial = trial % 3 == 0
        if partial:
            pred = [None if rng.random() < 0.2 else p for p in pred]
        rep = compute_metrics(pred, gold, ls)
        ref = metrics_oracle(pred, gold, ls)
        for c in ls:
            worst = max(worst, abs(rep.accuracy[c] - ref["A"][c]), abs(rep.precision[c] - ref["P"][c]),
                        abs(rep.recall[c] - ref["R"][c]), abs(rep.f1[c] - ref["F"][c]))
        for key, value in ref["agg"].items():
            worst = max(worst, abs(rep.aggregates[key] - value))
        if not partial:
            a = rep.aggregates
            micro_ok &= all(abs(a[x] - a["MicroA"]) <= 1e-12 for x in ("MicroP", "MicroR", "MicroF"))
    verdict("AC3 metric formulas == oracle", worst <= 1e-12 and micro_ok,
            f"max deviation {worst:.2e}, micro equality {'holds' if micro_ok else 'broken'}")


def test_ac04_fitted_distributions_normalised(verdict):
    corpus = planted_corpus(num_threads=40, embedding_dim=4, seed=4).corpus
    configs = [
        dict(use_pos=True, use_features=True),
        dict(char_lm=True, skipgram_lm=True, transition_norm="global"),
        dict(use_gmm=True, use_embeddings=True, num_mixture_components=2, max_num_iterations=3),
        dict(lm_type="bigram", use_pos=True, fractional_lambda=True),
    ]
    worst = 0.0
    checked = 0
    for extra in configs:
        cfg = ModelConfig(initial_num_clusters=3, label_set=PLANTED_LABELS, **extra)
        for result in (train_unsupervised(corpus, cfg),
                       train_semisupervised(corpus.subset(range(10)), corpus.subset(range(10, 40)), cfg)):
            params = result.params
            em = params.emissions
            sums = [params.pi.sum(), params.phi.sum()]
            for kind, space in em.space.spaces.items():
                for s in range(em.num_states):
                    lm = em.language_model(kind, s)
                    sums.append(math.fsum(lm.prob(g) for g in space.index) + lm.unseen_prob)
            if em.feature_model is not None:
                for f in range(len(em.feature_model.counts)):
                    for s in range(em.num_states):
                        sums.append(em.feature_model.distribution(f, s).sum())
            if em.gmms is not None:
                sums.extend(g.weights.sum() for g in em.gmms)
            worst = max(worst, max(abs(x - 1.0) for x in sums))
            checked += len(sums)
    verdict("AC4 every distribution sums to 1", worst <= 1e-9, f"{checked} distributions, max |sum-1| {worst:.2e}")


def test_ac05_smoothing_arithmetic(verdict):
    post = Post(0, "u", tuple(Token(w) for w in "a a a b".split()))
    lm = fit_language_model([post], delta1=0.01, vocab_size=3)
    exact, unseen = smoothed_categorical({"a": 3, "b": 1}, 3, Fraction(1, 100))
    ok = (abs(lm.prob("a") - 3.01 / 4.04) <= 1e-12 and abs(lm.unseen_prob - 0.01 / 4.04) <= 1e-12
          and abs(lm.prob("a") - float(exact["a"])) <= 1e-12 and abs(lm.unseen_prob - float(unseen)) <= 1e-12)
    verdict("AC5 additive smoothing", ok, f"p(a)={lm.prob('a'):.15f} p(unseen)={lm.unseen_prob:.15f}")


def test_ac06_planted_recovery(verdict, planted, planted_config):
    start = time.perf_counter()
    gold = planted.labels
    conv = train_unsupervised(planted.corpus, planted_config)
    acc_conv = _mapped_accuracy(conv.states, gold, PLANTED_LABELS)
    pos = train_unsupervised(planted.corpus, planted_config.replace(use_pos=True))
    acc_pos = _mapped_accuracy(pos.states, gold, PLANTED_LABELS)
    elapsed = time.perf_counter() - start
    ok = acc_conv >= 0.90 and acc_pos >= acc_conv - 0.02 and elapsed < 120
    verdict("AC6 planted HMM recovery", ok, f"CONV {acc_conv:.3f}, CONV+POS {acc_pos:.3f}, {elapsed:.1f}s")


def test_ac07_semisupervised_dominates(verdict, planted_config):
    wins = []
    for seed in range(5):
        pc = planted_corpus(num_threads=200, seed=100 + seed)
        corpus, gold = pc.corpus, pc.labels
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(corpus.threads))
        labelled, rest = np.sort(order[:40]), np.sort(order[40:])
        semi = train_semisupervised(corpus.subset(labelled), corpus.subset(rest), planted_config)
        rest_gold = corpus.subset(rest).gold_labels()
        acc_semi = sum(PLANTED_LABELS[s] == g for s, g in zip(semi.states, rest_gold)) / len(rest_gold)
        # unsupervised sees every thread; score it on the same evaluation posts
        unsup = train_unsupervised(corpus, planted_config)
        in_rest = np.repeat(np.isin(np.arange(len(corpus.threads)), rest), corpus.thread_lengths)
        acc_unsup = _mapped_accuracy(unsup.states, gold, PLANTED_LABELS, in_rest)
        wins.append((acc_semi >= acc_unsup, acc_semi, acc_unsup))
    n = sum(w for w, _, _ in wins)
    detail = ", ".join(f"{s:.3f}/{u:.3f}" for _, s, u in wins)
    verdict("AC7 semi-supervised >= unsupervised", n >= 4, f"{n}/5 seeds (semi/unsup: {detail})")


def test_ac08_lambda_one_reduces_to_conv(verdict, planted_config):
    corpus = planted_corpus(num_threads=30, seed=8).corpus
    posts = list(corpus.posts())
    thirds = [posts[i::3] for i in range(3)]
    v_w = len({t.surface for p in posts for t in p.tokens})
    v_p = len({t.pos for p in posts for t in p.tokens})
    identical = True
    for group in thirds:
        lm = fit_language_model(group, "word", 1, 0.01, v_w)
        pos_lm = fit_language_model(group, "pos", 1, 0.01, v_p)
        for post in posts:
            identical &= score_post_combined(post, lm, pos_lm, 1.0) == score_post_lm(post, lm)
    conv = train_unsupervised(corpus, planted_config)
    mixed = train_unsupervised(corpus, planted_config.replace(use_pos=True, lam=1.0))
    same_paths = np.array_equal(conv.states, mixed.states) and conv.trace.log_probs == mixed.trace.log_probs
    verdict("AC8 lambda=1 equals the word-only model", identical and same_paths,
            f"scores bit-identical={identical}, decoded paths identical={same_paths}")


def test_ac09_baseline_contracts(verdict, planted):
    corpus = planted.corpus
    gold = corpus.gold_labels()
    pred = baseline_majority(corpus)
    counts = Counter(gold)
    top = max(counts.values())
    freq = top / len(gold)
    micro = compute_metrics(pred, gold, corpus.label_set).aggregates["MicroA"]

    def thread(n):
        return Thread("t", tuple(Post(i, "u", (Token("x"),)) for i in range(n)))

    h1 = {n: baseline_ps_heuristic1(thread(n)) for n in (1, 2, 4)}
    h2 = {n: baseline_ps_heuristic2(thread(n)) for n in (1, 2, 4)}
    rules_ok = (
        h1 == {1: [PROBLEM], 2: [PROBLEM, OTHER], 4: [PROBLEM, SOLUTION, SOLUTION, OTHER]}
        and h2 == {1: [PROBLEM], 2: [PROBLEM, SOLUTION], 4: [PROBLEM, SOLUTION, OTHER, OTHER]}
    )
    verdict("AC9 baseline contracts", micro == freq and rules_ok,
            f"majority MicroA {micro} vs frequency {freq}, heuristic rules {'ok' if rules_ok else 'wrong'}")


def test_ac10_em_loop_contract(verdict, planted_config):
    corpus = planted_corpus(num_threads=60, embedding_dim=3, seed=10).corpus
    problems = []
    for max_it in (0, 1, 2, 3, 100):
        for extra in ({}, {"use_gmm": True, "use_embeddings": True, "num_mixture_components": 2}):
            cfg = planted_config.replace(max_num_iterations=max_it, **extra)
            r = train_unsupervised(corpus, cfg)
            lp = r.trace.log_probs
            if len(lp) > max_it:
                problems.append(f"trace {len(lp)} > max {max_it}")
            fired = [i for i in range(1, len(lp)) if _converged(lp[i - 1], lp[i], cfg.convergence_tol)]
            expect = bool(fired) and fired[0] == len(lp) - 1
            if r.trace.converged != expect or (fired and fired[0] != len(lp) - 1):
                problems.append(f"converged flag {r.trace.converged} at max {max_it}")
            if not r.trace.converged and len(lp) != max_it:
                problems.append(f"stopped early without converging at max {max_it}")
            again = train_unsupervised(corpus, cfg)
            if not (np.array_equal(r.states, again.states) and again.trace.log_probs == lp):
                problems.append(f"non-deterministic at max {max_it} {extra}")
    verdict("AC10 EM loop contract", not problems, "; ".join(problems) or "10 configurations consistent")


def test_ac11_gmm_fitting(verdict):
    g = fit_gmm(np.array([[2.0], [4.0]]), 1, seed=0)
    closed_form = abs(g.means[0, 0] - 3.0) <= 1e-9 and abs(g.variances[0, 0] - 1.0) <= 1e-9
    rng = np.random.default_rng(11)
    worst_drop = 0.0
    for trial in range(30):
        X = np.concatenate([rng.normal(m, 1 + trial % 3, size=(40, 3)) for m in (-4, 0, 5)])
        g2 = fit_gmm(X, 3, seed=trial)
        trace = np.array(g2.log_likelihood_trace)
        if len(trace) > 1:
            worst_drop = max(worst_drop, float(np.max(trace[:-1] - trace[1:])))
    ok = closed_form and worst_drop <= 1e-9
    verdict("AC11 GMM fitting", ok,
            f"mean {g.means[0, 0]:.12f} var {g.variances[0, 0]:.12f}, largest log-lik drop {worst_drop:.2e}")
