"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 rejected run.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, load_config
from .corpus import corpus_stats, dump_corpus, load_corpus
from .errors import ForumActsError
from .evaluation import COARSE_LABELS, coarse_grain, compute_metrics, run_baselines
from .experiment import crossval_semisupervised, run_unsupervised_experiment, sweep, write_results
from .training import ConversationModel

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_REJECTED = 0, 1, 2, 3

log = logging.getLogger("forumacts")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, corpus=True, out=True) -> None:
    if corpus:
        p.add_argument("--corpus", required=True, help="line-delimited JSON corpus")
    p.add_argument("--config", help="JSON config with camelCase parameter names")
    if out:
        p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="forumacts", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a corpus and print its statistics")
    _common(p, out=False)
    p.add_argument("--out", help="also write stats.json here")

    p = sub.add_parser("stats", help="print corpus statistics")
    _common(p, out=False)
    p.add_argument("--out", help="also write stats.json here")

    for name, help_text in (("train-unsup", "unsupervised training with cluster-to-label mapping"),
                            ("train-semi", "semi-supervised n-fold cross-validation")):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--reps", type=int, help="repetitions")
        p.add_argument("--coarse", action=argparse.BooleanOptionalAction, default=True,
                       help="also report the 3-label coarse-grained evaluation (default on)")
        if name == "train-semi":
            p.add_argument("--folds", type=int, help="number of folds")

    p = sub.add_parser("decode", help="label a corpus with a saved model")
    p.add_argument("--model", required=True, help="model.json written by a training command")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("baselines", help="evaluate the random, majority and two positional baselines")
    _common(p)
    p.add_argument("--coarse", action=argparse.BooleanOptionalAction, default=True)

    p = sub.add_parser("sweep", help="run every point of the config's parameter grid")
    _common(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--coarse", action=argparse.BooleanOptionalAction, default=False)
    return parser


def _experiment_config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    model = cfg.model if args.seed is None else cfg.model.replace(seed=args.seed)
    mode = {"train-unsup": "unsup", "train-semi": "semi"}.get(args.command, cfg.mode)
    return ExperimentConfig(
        model,
        folds=getattr(args, "folds", None) or cfg.folds,
        repetitions=getattr(args, "reps", None) or cfg.repetitions,
        mode=mode,
        grid=cfg.grid,
    )


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, args, config: ExperimentConfig | None, extra: dict | None = None) -> None:
    manifest = {
        "tool": "forumacts",
        "version": __version__,
        "command": args.command,
        "corpus": str(args.corpus),
        "corpus_sha256": _sha256(args.corpus),
    }
    if config is not None:
        manifest["seed"] = config.seed
        manifest["config"] = config.to_dict()
    manifest.update(extra or {})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_stats(args) -> int:
    cfg = _experiment_config(args)
    corpus = load_corpus(args.corpus, cfg.model)
    stats = corpus_stats(corpus)
    lengths = corpus.thread_lengths
    stats["thread_length"] = {"min": min(lengths, default=0), "max": max(lengths, default=0),
                              "mean": (sum(lengths) / len(lengths)) if lengths else 0.0}
    print(json.dumps(stats, indent=2))
    if args.out:
        out = _outdir(args.out)
        (out / "stats.json").write_text(json.dumps(stats, indent=2), encoding="utf-8")
        write_manifest(out, args, cfg)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    corpus = load_corpus(args.corpus, cfg.model)
    run = run_unsupervised_experiment if cfg.mode == "unsup" else crossval_semisupervised
    result = run(corpus, cfg, coarse=args.coarse)
    out = _outdir(args.out)
    write_results(result, out)
    saved = next((r for r in result.accepted if r.model is not None), None)
    if saved is not None:
        saved.model.save(out / "model.json")
    write_manifest(out, args, cfg)
    summary = result.summary()
    print(json.dumps({"runs": summary["runs"], "rejected_runs": summary["rejected_runs"],
                      "aggregate": summary["aggregate"]}, indent=2))
    if result.rejected:
        for rec in result.records:
            print(f"rejected: {rec.reason}", file=sys.stderr)
        return EXIT_REJECTED
    return EXIT_OK


def cmd_decode(args) -> int:
    model = ConversationModel.load(args.model)
    corpus = load_corpus(args.corpus, model.config)
    states = model.decode(corpus)
    names = model.labels_for(states)
    extra, i = [], 0
    for thread in corpus.threads:
        extra.append([{"state": int(states[i + j]), "predicted": names[i + j]} for j in range(len(thread.posts))])
        i += len(thread.posts)
    out = _outdir(args.out)
    dump_corpus(corpus, out / "decoded.jsonl", extra)
    args.seed = model.config.seed
    write_manifest(out, args, ExperimentConfig(model.config),
                   {"model": str(args.model), "model_sha256": _sha256(args.model)})
    print(f"decoded {corpus.num_posts} posts in {len(corpus.threads)} threads")
    return EXIT_OK


def cmd_baselines(args) -> int:
    cfg = _experiment_config(args)
    corpus = load_corpus(args.corpus, cfg.model)
    gold = corpus.gold_labels()
    out = _outdir(args.out)
    summary = {}
    for name, pred in run_baselines(corpus, cfg.seed).items():
        report = compute_metrics(pred, gold, corpus.label_set)
        record = {"fine": report.to_dict()}
        text = report.table()
        if args.coarse:
            coarse = compute_metrics(coarse_grain(pred), coarse_grain(gold), COARSE_LABELS)
            record["coarse"] = coarse.to_dict()
            text += "\n\ncoarse-grained\n" + coarse.table()
        (out / f"{name}.json").write_text(json.dumps(record, indent=2), encoding="utf-8")
        (out / f"{name}.txt").write_text(text + "\n", encoding="utf-8")
        summary[name] = report.aggregates
    write_manifest(out, args, cfg)
    for name, agg in summary.items():
        print(f"{name:<14} MicroA={agg['MicroA']:.4f} MacroA={agg['MacroA']:.4f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    corpus = load_corpus(args.corpus, cfg.model)
    result = sweep(corpus, cfg, coarse=args.coarse)
    out = _outdir(args.out)
    summary = result.summary()
    (out / "sweep.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    write_manifest(out, args, cfg)
    if result.best("MicroA") is None:
        print("every grid point was rejected", file=sys.stderr)
        return EXIT_REJECTED
    for metric in ("MicroA", "MacroA"):
        best = summary[f"best_{metric}"]
        print(f"best {metric}: {best['aggregate'][metric]:.4f} with {json.dumps(best['params'])}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_stats,
    "stats": cmd_stats,
    "train-unsup": cmd_train,
    "train-semi": cmd_train,
    "decode": cmd_decode,
    "baselines": cmd_baselines,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"forumacts: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ForumActsError, OSError) as exc:
        print(f"forumacts: {exc}", file=sys.stderr)
        return EXIT_DATA
