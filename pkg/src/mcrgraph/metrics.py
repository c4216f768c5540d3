"""Classification and regression metrics computed straight from definitions.

ROC-AUC uses the rank formulation (Mann-Whitney U with average ranks for
ties), which equals the proportion of concordant positive/negative pairs
with ties counted one half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, SingleClassAuc


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    task: str
    n: int
    accuracy: float
    per_class: dict[str, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: tuple[tuple[int, ...], ...]  # rows = gold, cols = predicted
    roc_auc: float | None = None  # absent when only one class is present
    mae: float | None = None
    rmse: float | None = None


def confusion_matrix(labels: np.ndarray, preds: np.ndarray, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for gold, pred in zip(labels, preds):
        cm[gold, pred] += 1
    return cm


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def roc_auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based AUC; raises SingleClassAuc when a class is missing."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassAuc(f"need both classes, got {n_pos} positive / {n_neg} negative")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank over the tie run
        i = j + 1
    pos_rank_sum = ranks[labels == 1].sum()
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_points(scores: np.ndarray, labels: np.ndarray) -> list[tuple[float, float]]:
    """(FPR, TPR) step points swept over descending score thresholds."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    points = [(0.0, 0.0)]
    tp = fp = 0
    for threshold in sorted(set(scores), reverse=True):
        at = scores == threshold
        tp += int((labels[at] == 1).sum())
        fp += int((labels[at] == 0).sum())
        points.append((_safe_div(fp, n_neg), _safe_div(tp, n_pos)))
    return points


def evaluate_classification(scores: np.ndarray, labels: np.ndarray,
                            threshold: float = 0.5,
                            class_names: tuple[str, ...] | None = None,
                            task: str = "classification") -> MetricsReport:
    """Confusion-matrix metrics from scores.

    1-d scores are positive-class probabilities thresholded at `threshold`;
    2-d scores are per-class and predictions use argmax (AUC only when the
    width is 2, from column 1).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.size == 0 or labels.size == 0:
        raise EmptyInput("no samples to evaluate")
    if scores.ndim == 1:
        n_classes = 2
        preds = (scores >= threshold).astype(np.int64)
        auc_scores: np.ndarray | None = scores
    else:
        n_classes = scores.shape[1]
        preds = scores.argmax(axis=1)
        auc_scores = scores[:, 1] if n_classes == 2 else None
    if class_names is None:
        class_names = tuple(str(i) for i in range(n_classes))

    cm = confusion_matrix(labels, preds, n_classes)
    per_class = {}
    for c, name in enumerate(class_names):
        tp = int(cm[c, c])
        precision = _safe_div(tp, int(cm[:, c].sum()))
        recall = _safe_div(tp, int(cm[c, :].sum()))
        per_class[name] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=_safe_div(2 * precision * recall, precision + recall),
            support=int(cm[c, :].sum()),
        )

    roc_auc = None
    if auc_scores is not None:
        try:
            roc_auc = roc_auc_score(auc_scores, labels)
        except SingleClassAuc:
            roc_auc = None

    values = list(per_class.values())
    return MetricsReport(
        task=task,
        n=int(labels.size),
        accuracy=_safe_div(int(np.trace(cm)), int(labels.size)),
        per_class=per_class,
        macro_precision=float(np.mean([m.precision for m in values])),
        macro_recall=float(np.mean([m.recall for m in values])),
        macro_f1=float(np.mean([m.f1 for m in values])),
        confusion=tuple(tuple(int(x) for x in row) for row in cm),
        roc_auc=roc_auc,
    )


def evaluate_regression(preds: np.ndarray, targets: np.ndarray) -> dict[str, float]:
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.size == 0 or targets.size == 0:
        raise EmptyInput("no samples to evaluate")
    if preds.shape != targets.shape:
        raise EmptyInput(f"shape mismatch: {preds.shape} vs {targets.shape}")
    err = preds - targets
    return {"mae": float(np.abs(err).mean()), "rmse": float(np.sqrt((err * err).mean()))}


def report_to_json(report: MetricsReport) -> dict:
    return {
        "task": report.task,
        "n": report.n,
        "accuracy": report.accuracy,
        "per_class": {
            name: {"precision": m.precision, "recall": m.recall,
                   "f1": m.f1, "support": m.support}
            for name, m in report.per_class.items()
        },
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "confusion": [list(row) for row in report.confusion],
        "roc_auc": report.roc_auc,
        "mae": report.mae,
        "rmse": report.rmse,
    }
