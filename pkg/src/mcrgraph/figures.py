"""Matplotlib renderings written next to the delimited outputs.

Everything uses the Agg backend so the CLI works headless; each function
writes one PNG and closes its figure.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .metrics import MetricsReport  # noqa: E402
from .report import ReportDocument  # noqa: E402


def save_loss_curve(epoch_losses: list[float], path, title: str = "training loss") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(epoch_losses) + 1), epoch_losses, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_confusion_matrix(report: MetricsReport, path) -> None:
    cm = np.asarray(report.confusion, dtype=np.float64)
    names = list(report.per_class)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(cm, cmap="Blues")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right")
    ax.set_yticks(range(len(names)), names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(f"{report.task}: confusion matrix")
    for i in range(len(names)):
        for j in range(len(names)):
            color = "white" if cm[i, j] > cm.max() / 2 else "black"
            ax.text(j, i, int(cm[i, j]), ha="center", va="center", color=color)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_roc_curve(points: list[tuple[float, float]], auc: float | None, path) -> None:
    xs = [p[0] for p in points] + [1.0]
    ys = [p[1] for p in points] + [1.0]
    fig, ax = plt.subplots(figsize=(5, 4.5))
    ax.plot(xs, ys, lw=1.5, drawstyle="steps-post")
    ax.plot([0, 1], [0, 1], "--", color="grey", lw=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("ROC" if auc is None else f"ROC (AUC = {auc:0.4f})")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_line_likelihood(doc: ReportDocument, path) -> None:
    """Per-line likelihood bars with the flagging threshold."""
    line_nos = [l.line_no for l in doc.lines]
    scores = [l.score for l in doc.lines]
    colors = ["firebrick" if l.flagged else "steelblue" for l in doc.lines]
    fig, ax = plt.subplots(figsize=(7, max(2.5, 0.22 * len(line_nos) + 1)))
    ax.barh(line_nos, scores, color=colors, height=0.8)
    ax.axvline(doc.threshold, color="grey", ls="--", lw=1)
    ax.set_xlim(0, 1)
    ax.invert_yaxis()
    ax.set_xlabel("comment likelihood")
    ax.set_ylabel("source line")
    ax.set_title(f"{doc.file_path} @ r{doc.revision_index}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_comment_histogram(histogram: dict[str, int], path) -> None:
    counts = sorted(int(k) for k in histogram)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(counts)), [histogram[str(c)] for c in counts], color="steelblue")
    ax.set_xticks(range(len(counts)), labels=[str(c) for c in counts])
    ax.set_xlabel("comments per pull request")
    ax.set_ylabel("pull requests")
    ax.set_title("comment volume")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_regression_scatter(preds, targets, path, title: str = "clarity") -> None:
    fig, ax = plt.subplots(figsize=(5, 4.5))
    ax.scatter(targets, preds, s=18, alpha=0.7)
    ax.plot([0, 1], [0, 1], "--", color="grey", lw=1)
    ax.set_xlabel("target")
    ax.set_ylabel("prediction")
    ax.set_title(title)
    ax.set_xlim(0, 1.05)
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
