"""Command-line interface: ingest, stats, parse, label, split, train,
evaluate, predict.

Exit codes: 0 success, 1 domain error (structured stderr message), 2 usage
error. A JSON config file (--config) supplies defaults; explicit flags win.
Logging goes to stderr without timestamps so equal runs stay byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, corpus as corpus_mod, datasets, figures, graphlearn as gl
from . import labeling, metrics as metrics_mod, report as report_mod
from .astgraph import graph_to_json, parse_source
from .errors import ConfigMismatch, EmptyInput, McrGraphError
from .tensor import row_softmax

log = logging.getLogger("mcr-graph")

_MODEL_KEYS = {"layer_type", "layer_dims", "dropout", "token_dim", "token_hash_size",
               "feature_seed", "heads", "leaky_slope", "comment_dim", "context_dim"}
_TRAIN_KEYS = {"lr", "epochs", "seed", "weight_decay", "class_weights",
               "beta1", "beta2", "eps"}


def configure_logging() -> None:
    logging.addLevelName(logging.INFO, "info")
    logging.addLevelName(logging.WARNING, "warn")
    logging.addLevelName(logging.ERROR, "error")
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ConfigMismatch("config file must hold a JSON object")
    return obj


def _resolve(flag_value, config: dict, key: str, default):
    """Flags beat the config file, the config file beats the default."""
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _model_config(task: gl.TaskKind, config: dict) -> gl.ModelConfig:
    section = dict(config.get("model", {}))
    unknown = set(section) - _MODEL_KEYS
    if unknown:
        raise ConfigMismatch(f"unknown model config keys: {sorted(unknown)}")
    if "layer_type" in section:
        section["layer_type"] = gl.LayerType(section["layer_type"].upper())
    if "layer_dims" in section:
        section["layer_dims"] = tuple(int(d) for d in section["layer_dims"])
    cfg = replace(gl.ModelConfig(task=task), **section)
    cfg.validate()
    return cfg


def _train_config(config: dict, seed_flag: int | None) -> gl.TrainConfig:
    section = dict(config.get("train", {}))
    unknown = set(section) - _TRAIN_KEYS
    if unknown:
        raise ConfigMismatch(f"unknown train config keys: {sorted(unknown)}")
    if "class_weights" in section and section["class_weights"] is not None:
        section["class_weights"] = tuple(float(w) for w in section["class_weights"])
    if seed_flag is not None:
        section["seed"] = seed_flag
    cfg = replace(gl.TrainConfig(), **section)
    cfg.validate()
    return cfg


def _write_json(obj: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _split_provenance(split: labeling.DatasetSplit) -> dict:
    return {
        "seed": split.seed,
        "ratio": split.ratio,
        "fingerprint": labeling.split_fingerprint(split),
    }


def _check_split_provenance(ckpt: gl.Checkpoint, split: labeling.DatasetSplit) -> None:
    recorded = ckpt.metadata.get("split", {}).get("fingerprint")
    if recorded and recorded != labeling.split_fingerprint(split):
        raise ConfigMismatch(
            "split file does not match the split this checkpoint was trained with")


# --- subcommands -----------------------------------------------------------------

def cmd_ingest(args) -> int:
    config = _load_config(args.config)
    salt = _resolve(args.salt, config, "salt", "")
    with open(args.export, encoding="utf-8") as fh:
        raw = [json.loads(line) for line in fh if line.strip()]
    corpus, skipped = corpus_mod.normalize_export(raw, salt=salt)
    corpus_mod.validate_corpus(corpus)
    corpus_mod.save_corpus(corpus, args.out)
    log.info("wrote %d pull requests to %s (%d records skipped)",
             len(corpus.pull_requests), args.out, len(skipped))
    return 0


def cmd_stats(args) -> int:
    corpus = corpus_mod.load_corpus(args.corpus)
    stats = corpus_mod.corpus_stats(corpus)
    print(json.dumps(stats, indent=2, sort_keys=True))
    if args.out:
        out = Path(args.out)
        _write_json(stats, out / "stats.json")
        figures.save_comment_histogram(stats["comments_per_pr_histogram"],
                                       out / "comments_per_pr.png")
        log.info("stats written to %s", out)
    return 0


def cmd_parse(args) -> int:
    source = Path(args.file).read_text(encoding="utf-8")
    graph = parse_source(source, file_path=args.file)
    n_child = sum(1 for e in graph.edges if e.kind.value == "CHILD")
    print(f"{args.file}: {len(graph.nodes)} nodes, {n_child} child edges, "
          f"{len(graph.edges) - n_child} sibling edges")
    if args.out:
        _write_json(graph_to_json(graph), Path(args.out))
    return 0


def cmd_label(args) -> int:
    config = _load_config(args.config)
    window = _resolve(args.stability_window, config, "stability_window", 2)
    corpus = corpus_mod.load_corpus(args.corpus)
    pr_ids = [pr.id for pr in corpus.pull_requests]
    if args.pr:
        pr_ids = [i for i in pr_ids if i in set(args.pr)]
    graphs = datasets.labeled_graphs_for(corpus, pr_ids, window)
    counts = {"POSITIVE": 0, "NEGATIVE": 0, "UNKNOWN": 0}
    for lg in graphs:
        for lab in lg.labels:
            counts[lab.commented.value] += 1
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            for lg in graphs:
                fh.write(json.dumps(labeling.labeled_graph_to_json(lg), sort_keys=True))
                fh.write("\n")
        log.info("wrote %d labeled graphs to %s", len(graphs), out)
    print(json.dumps({"graphs": len(graphs), "window": window, **counts}, sort_keys=True))
    return 0


def cmd_split(args) -> int:
    config = _load_config(args.config)
    ratio = _resolve(args.ratio, config, "ratio", 0.8)
    seed = _resolve(args.seed, config, "seed", 0)
    corpus = corpus_mod.load_corpus(args.corpus)
    split = labeling.split_dataset(corpus, ratio, seed)
    labeling.save_split(split, args.out)
    log.info("split %d train / %d test (ratio %g, seed %d) -> %s",
             len(split.train_pr_ids), len(split.test_pr_ids), ratio, seed, args.out)
    return 0


def _resolved_run_config(task: gl.TaskKind, model_cfg: gl.ModelConfig,
                         train_cfg: gl.TrainConfig, window: int,
                         split: labeling.DatasetSplit) -> dict:
    return {
        "task": task.value,
        "model": gl.config_to_json(model_cfg),
        "train": {
            "lr": train_cfg.lr, "epochs": train_cfg.epochs, "seed": train_cfg.seed,
            "weight_decay": train_cfg.weight_decay,
            "class_weights": list(train_cfg.class_weights) if train_cfg.class_weights else None,
            "beta1": train_cfg.beta1, "beta2": train_cfg.beta2, "eps": train_cfg.eps,
        },
        "stability_window": window,
        "split": _split_provenance(split),
    }


def cmd_train(args) -> int:
    config = _load_config(args.config)
    task = gl.TaskKind(args.task.upper())
    window = _resolve(args.stability_window, config, "stability_window", 2)
    model_cfg = _model_config(task, config)
    train_cfg = _train_config(config, args.seed)
    corpus = corpus_mod.load_corpus(args.corpus)
    split = labeling.load_split(args.split)

    vocab = None
    if task is gl.TaskKind.QUALITY:
        context_path = _resolve(args.context_model, config, "context_model", None)
        if not context_path:
            raise ConfigMismatch("QUALITY training needs --context-model "
                                 "(a trained likelihood checkpoint)")
        context_model = gl.model_from_checkpoint(gl.load_checkpoint(context_path))
        if context_model.config.task is not gl.TaskKind.LIKELIHOOD:
            raise ConfigMismatch("context model must be a LIKELIHOOD checkpoint")
        vocab_cfg = config.get("vocab", {})
        vocab = datasets.build_comment_vocabulary(
            corpus, split.train_pr_ids,
            min_df=int(vocab_cfg.get("min_df", 2)),
            max_size=int(vocab_cfg.get("max_size", 5000)))
        dataset = datasets.quality_samples_for(corpus, split.train_pr_ids, context_model)
        model_cfg = replace(model_cfg,
                            context_dim=context_model.config.layer_dims[-1])
    else:
        dataset = datasets.labeled_graphs_for(corpus, split.train_pr_ids, window)

    ckpt = gl.train(dataset, model_cfg, train_cfg, vocab=vocab)
    ckpt.metadata["stability_window"] = window
    ckpt.metadata["split"] = _split_provenance(split)
    ckpt.metadata["config"] = _resolved_run_config(task, ckpt.model_config,
                                                   train_cfg, window, split)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    gl.save_checkpoint(ckpt, out)

    losses = ckpt.metadata["epoch_losses"]
    stem = out.with_suffix("")
    with open(f"{stem}.losses.csv", "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(losses, start=1):
            fh.write(f"{i},{loss!r}\n")
    figures.save_loss_curve(losses, f"{stem}.loss.png", title=f"{task.value} training loss")
    log.info("trained %s for %d epochs (final loss %.6f) -> %s",
             task.value, train_cfg.epochs, losses[-1], out)
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    corpus = corpus_mod.load_corpus(args.corpus)
    split = labeling.load_split(args.split)
    ckpt = gl.load_checkpoint(args.model)
    _check_split_provenance(ckpt, split)
    model = gl.model_from_checkpoint(ckpt)
    task = model.config.task
    if args.task and gl.TaskKind(args.task.upper()) is not task:
        raise ConfigMismatch(f"checkpoint holds a {task.value} model")
    threshold = _resolve(args.threshold, config, "threshold", 0.5)
    window = _resolve(args.stability_window, config, "stability_window",
                      ckpt.metadata.get("stability_window", 2))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    payload: dict = {
        "task": task.value,
        "threshold": threshold,
        "split": _split_provenance(split),
        "config": ckpt.metadata.get("config", {}),
        "n_test_prs": len(split.test_pr_ids),
    }

    if task is gl.TaskKind.QUALITY:
        context_path = _resolve(args.context_model, config, "context_model", None)
        if not context_path:
            raise ConfigMismatch("QUALITY evaluation needs --context-model")
        context_model = gl.model_from_checkpoint(gl.load_checkpoint(context_path))
        samples = datasets.quality_samples_for(corpus, split.test_pr_ids, context_model)
        if not samples:
            raise EmptyInput("no quality samples in the test split")
        preds = gl.forward_quality(model, samples).values
        act_labels = np.asarray([int(s.actionability) for s in samples])
        report = metrics_mod.evaluate_classification(
            preds[:, 0], act_labels, threshold,
            class_names=("NOT_ACTIONABLE", "ACTIONABLE"), task="actionability")
        clarity_targets = np.asarray([s.clarity for s in samples])
        regression = metrics_mod.evaluate_regression(preds[:, 1], clarity_targets)
        payload["actionability"] = metrics_mod.report_to_json(report)
        payload["clarity"] = regression
        figures.save_regression_scatter(preds[:, 1], clarity_targets,
                                        out / "clarity_scatter.png")
        if report.roc_auc is not None:
            figures.save_roc_curve(metrics_mod.roc_points(preds[:, 0], act_labels),
                                   report.roc_auc, out / "roc_curve.png")
    else:
        graphs = datasets.labeled_graphs_for(corpus, split.test_pr_ids, window)
        scores, labels = datasets.node_classification_arrays(model, graphs)
        if scores.size == 0:
            raise EmptyInput("no labeled nodes in the test split")
        if task is gl.TaskKind.LIKELIHOOD:
            report = metrics_mod.evaluate_classification(
                scores[:, 1], labels, threshold,
                class_names=gl.LIKELIHOOD_CLASSES, task=task.value.lower())
            figures.save_roc_curve(metrics_mod.roc_points(scores[:, 1], labels),
                                   report.roc_auc, out / "roc_curve.png")
        else:
            report = metrics_mod.evaluate_classification(
                scores, labels, threshold,
                class_names=gl.TOPIC_CLASSES, task=task.value.lower())
        payload["metrics"] = metrics_mod.report_to_json(report)
        payload["stability_window"] = window

    _write_json(payload, out / "metrics.json")
    with open(out / "per_class.csv", "w", encoding="utf-8") as fh:
        fh.write("class,precision,recall,f1,support\n")
        for name, m in report.per_class.items():
            fh.write(f"{name},{m.precision!r},{m.recall!r},{m.f1!r},{m.support}\n")
    figures.save_confusion_matrix(report, out / "confusion_matrix.png")
    log.info("metrics written to %s", out / "metrics.json")
    return 0


def cmd_predict(args) -> int:
    config = _load_config(args.config)
    threshold = _resolve(args.threshold, config, "threshold", 0.5)
    ckpt = gl.load_checkpoint(args.model)
    model = gl.model_from_checkpoint(ckpt)
    topic_model = None
    topic_path = _resolve(args.topic_model, config, "topic_model", None)
    if topic_path:
        topic_model = gl.model_from_checkpoint(gl.load_checkpoint(topic_path))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for file_arg in args.file:
        content = Path(file_arg).read_text(encoding="utf-8")
        graph = parse_source(content, file_path=file_arg)
        doc = report_mod.predict_report(graph, content, model, topic_model,
                                        threshold=threshold)
        stem = out / Path(file_arg).stem
        Path(f"{stem}.report.txt").write_text(report_mod.render_text(doc), encoding="utf-8")
        Path(f"{stem}.report.csv").write_text(report_mod.render_csv(doc), encoding="utf-8")
        _write_json(report_mod.doc_to_json(doc, ckpt.metadata.get("config", {})),
                    Path(f"{stem}.report.json"))
        figures.save_line_likelihood(doc, f"{stem}.likelihood.png")
        flagged = sum(1 for l in doc.lines if l.flagged)
        log.info("%s: %d/%d lines flagged at %.2f", file_arg, flagged,
                 len(doc.lines), threshold)
    return 0


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcr-graph",
        description="Learn review-comment behavior from code-review corpora.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a provider export into a corpus")
    p.add_argument("--export", required=True, help="raw provider export (JSON lines)")
    p.add_argument("--salt", default=None, help="pseudonymization salt")
    p.add_argument("--config", help="JSON run configuration (flags win)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus summary statistics")
    p.add_argument("--corpus", required=True, help="corpus JSON-lines file")
    p.add_argument("--out", help="directory for stats.json and figures")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("parse", help="parse one source file into a graph")
    p.add_argument("--file", required=True)
    p.add_argument("--out", help="write the graph as JSON")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("label", help="label every revision graph in a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config")
    p.add_argument("--stability-window", type=int, default=None)
    p.add_argument("--pr", action="append", help="restrict to a pull request id")
    p.add_argument("--out", help="write labeled graphs as JSON lines")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("split", help="deterministic train/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config")
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model on the train split")
    p.add_argument("--task", required=True, choices=["likelihood", "topic", "quality"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stability-window", type=int, default=None)
    p.add_argument("--context-model", default=None,
                   help="likelihood checkpoint providing QUALITY context embeddings")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on the test split")
    p.add_argument("--task", choices=["likelihood", "topic", "quality"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--config")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--stability-window", type=int, default=None)
    p.add_argument("--context-model", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="annotated report for source files")
    p.add_argument("--file", action="append", required=True)
    p.add_argument("--model", required=True, help="likelihood checkpoint")
    p.add_argument("--topic-model", default=None)
    p.add_argument("--config")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except McrGraphError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    except OSError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
