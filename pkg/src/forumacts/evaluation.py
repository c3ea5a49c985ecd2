"""Per-category and micro/macro-averaged metrics, confusion matrices and baselines."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus, Thread
from .errors import ParameterError

PROBLEM, SOLUTION, OTHER = "Problem", "Solution", "Other"
COARSE_LABELS = (PROBLEM, SOLUTION, OTHER)
AGGREGATES = ("MicroA", "MicroP", "MicroR", "MicroF", "MacroA", "MacroP", "MacroR", "MacroF")


def _div(num: float, den: float) -> float:
    return num / den if den else 0.0


def f1(p: float, r: float) -> float:
    return _div(2 * p * r, p + r)


@dataclass
class EvalReport:
    label_set: tuple
    confusion: np.ndarray
    accuracy: dict
    precision: dict
    recall: dict
    f1: dict
    aggregates: dict
    num_posts: int
    num_predictions: int

    def to_dict(self) -> dict:
        return {
            "labels": list(self.label_set),
            "confusion": self.confusion.tolist(),
            "per_category": {
                c: {"accuracy": self.accuracy[c], "precision": self.precision[c],
                    "recall": self.recall[c], "f1": self.f1[c]}
                for c in self.label_set
            },
            "aggregates": dict(self.aggregates),
            "posts": self.num_posts,
            "predictions": self.num_predictions,
        }

    def table(self) -> str:
        width = max(len(c) for c in self.label_set) + 2
        lines = [f"{'category':<{width}} {'A':>6} {'P':>6} {'R':>6} {'F1':>6}"]
        for c in self.label_set:
            lines.append(f"{c:<{width}} {self.accuracy[c]:6.3f} {self.precision[c]:6.3f} "
                         f"{self.recall[c]:6.3f} {self.f1[c]:6.3f}")
        lines.append("")
        lines.append("  ".join(f"{k}={self.aggregates[k]:.3f}" for k in AGGREGATES))
        lines.append("")
        lines.append("confusion (rows=actual, cols=predicted)")
        lines.append(" " * width + " ".join(f"{c[:6]:>6}" for c in self.label_set))
        for c, row in zip(self.label_set, self.confusion):
            lines.append(f"{c:<{width}}" + " ".join(f"{int(v):6d}" for v in row))
        return "\n".join(lines)


def compute_metrics(predicted: Sequence, gold: Sequence, label_set: Sequence[str]) -> EvalReport:
    """Evaluate predictions against gold labels.

    Posts whose gold label is None are left out.  A None prediction counts as
    "no prediction": it is absent from every "# predictions" denominator but
    still counts as an actual post of its gold category.
    """
    if len(predicted) != len(gold):
        raise ParameterError(f"length mismatch: {len(predicted)} predictions, {len(gold)} gold labels")
    label_set = tuple(label_set)
    index = {c: i for i, c in enumerate(label_set)}
    k = len(label_set)
    confusion = np.zeros((k, k), dtype=int)
    actual = np.zeros(k, dtype=int)
    posts = 0
    for p, g in zip(predicted, gold):
        if g is None:
            continue
        if g not in index:
            raise ParameterError(f"gold label {g!r} not in label set")
        posts += 1
        actual[index[g]] += 1
        if p is None:
            continue
        if p not in index:
            raise ParameterError(f"prediction {p!r} not in label set")
        confusion[index[g], index[p]] += 1

    n_pred = int(confusion.sum())
    tp = np.diag(confusion)
    predicted_as = confusion.sum(axis=0)
    acc, prec, rec, f = {}, {}, {}, {}
    for i, c in enumerate(label_set):
        true_neg = n_pred - confusion[i, :].sum() - confusion[:, i].sum() + tp[i]
        acc[c] = _div(tp[i] + true_neg, n_pred)
        prec[c] = _div(tp[i], predicted_as[i])
        rec[c] = _div(tp[i], actual[i])
        f[c] = f1(prec[c], rec[c])

    micro_a = _div(tp.sum(), n_pred)
    micro_r = _div(tp.sum(), posts)
    macro_p = sum(prec.values()) / k
    macro_r = sum(rec.values()) / k
    aggregates = {
        "MicroA": micro_a,
        "MicroP": micro_a,
        "MicroR": micro_r,
        "MicroF": f1(micro_a, micro_r),
        "MacroA": sum(acc.values()) / k,
        "MacroP": macro_p,
        "MacroR": macro_r,
        "MacroF": f1(macro_p, macro_r),
    }
    return EvalReport(label_set, confusion, acc, prec, rec, f, aggregates, posts, n_pred)


def coarse_grain(labels: Sequence) -> list:
    """Collapse every label other than Problem and Solution into Other."""
    return [lab if lab in (PROBLEM, SOLUTION) or lab is None else OTHER for lab in labels]


def baseline_random(corpus: Corpus, label_set: Sequence[str], seed: int | np.random.Generator = 0) -> list[str]:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = rng.integers(0, len(label_set), size=corpus.num_posts)
    return [label_set[i] for i in draws]


def majority_label(labels: Sequence) -> str:
    counts = Counter(lab for lab in labels if lab is not None)
    if not counts:
        raise ParameterError("majority baseline needs gold labels")
    top = max(counts.values())
    return min(lab for lab, n in counts.items() if n == top)


def baseline_majority(corpus: Corpus) -> list[str]:
    label = majority_label(corpus.gold_labels())
    return [label] * corpus.num_posts


def baseline_ps_heuristic1(thread: Thread) -> list[str]:
    """Problem first, Other last, Solution in between."""
    n = len(thread.posts)
    out = [SOLUTION] * n
    if n > 1:
        out[-1] = OTHER
    out[0] = PROBLEM
    return out


def baseline_ps_heuristic2(thread: Thread) -> list[str]:
    """Problem first, Solution second, Other for the rest."""
    n = len(thread.posts)
    return ([PROBLEM, SOLUTION] + [OTHER] * max(0, n - 2))[:n]


def run_baselines(corpus: Corpus, seed: int = 0) -> dict[str, list[str]]:
    """Predictions of all four baselines, in thread-major post order."""
    return {
        "random": baseline_random(corpus, corpus.label_set, seed),
        "majority": baseline_majority(corpus),
        "ps_heuristic1": [lab for t in corpus.threads for lab in baseline_ps_heuristic1(t)],
        "ps_heuristic2": [lab for t in corpus.threads for lab in baseline_ps_heuristic2(t)],
    }


def mean_aggregates(reports: Sequence[EvalReport]) -> dict:
    if not reports:
        return {}
    return {k: float(np.mean([r.aggregates[k] for r in reports])) for k in AGGREGATES}
