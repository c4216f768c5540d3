"""Annotated prediction reports: per-node records plus a per-line source
listing with likelihood scores, topic tags, and threshold markers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from . import graphlearn as gl
from .astgraph import AstGraph
from .corpus import line_count
from .errors import ConfigMismatch
from .tensor import row_softmax


@dataclass(frozen=True)
class PredictionRecord:
    pr_id: str
    file_path: str
    revision_index: int
    node_id: int
    line_start: int
    line_end: int
    likelihood: float  # P(commented) in [0, 1]
    topic: str | None  # argmax topic name when a topic model ran
    topic_scores: dict[str, float] | None
    gold: str | None = None


@dataclass(frozen=True)
class ReportLine:
    line_no: int
    text: str
    score: float  # max likelihood over covering nodes; 0 when uncovered
    topic: str | None
    flagged: bool


@dataclass(frozen=True)
class ReportDocument:
    file_path: str
    revision_index: int
    threshold: float
    lines: tuple[ReportLine, ...]
    records: tuple[PredictionRecord, ...]


def predict_report(
    graph: AstGraph,
    content: str,
    likelihood_model: gl.Model,
    topic_model: gl.Model | None = None,
    threshold: float = 0.5,
    pr_id: str = "",
    gold: dict[int, str] | None = None,
) -> ReportDocument:
    """Score one revision graph; pure function of its inputs.

    The graph carries spans only, so the source text comes in alongside it
    to render the listing.
    """
    if likelihood_model.config.task is not gl.TaskKind.LIKELIHOOD:
        raise ConfigMismatch(
            f"likelihood checkpoint trained for {likelihood_model.config.task.value}")
    if topic_model is not None:
        if topic_model.config.task is not gl.TaskKind.TOPIC:
            raise ConfigMismatch(
                f"topic checkpoint trained for {topic_model.config.task.value}")
        for attr in ("token_dim", "token_hash_size", "feature_seed"):
            if getattr(topic_model.config, attr) != getattr(likelihood_model.config, attr):
                raise ConfigMismatch(f"checkpoints disagree on feature spec ({attr})")

    features = gl.node_features(graph, likelihood_model.config)
    adj = gl.dense_adjacency(graph)
    logits, _ = gl.forward_nodes(likelihood_model, features, adj)
    likelihood = row_softmax(logits).values[:, 1]

    topic_probs = None
    if topic_model is not None:
        tlogits, _ = gl.forward_nodes(topic_model, gl.node_features(graph, topic_model.config), adj)
        topic_probs = row_softmax(tlogits).values

    records = []
    for node in graph.nodes:
        topic = None
        scores = None
        if topic_probs is not None:
            row = topic_probs[node.id]
            topic = gl.TOPIC_CLASSES[int(row.argmax())]
            scores = {name: float(p) for name, p in zip(gl.TOPIC_CLASSES, row)}
        records.append(PredictionRecord(
            pr_id=pr_id,
            file_path=graph.file_path,
            revision_index=graph.revision_index,
            node_id=node.id,
            line_start=node.span.line_start,
            line_end=node.span.line_end,
            likelihood=float(likelihood[node.id]),
            topic=topic,
            topic_scores=scores,
            gold=None if gold is None else gold.get(node.id),
        ))

    source_lines = content.splitlines()
    lines = []
    for line_no in range(1, line_count(content) + 1):
        covering = [r for r in records
                    if r.line_start <= line_no <= r.line_end]
        if covering:
            best = max(covering, key=lambda r: (r.likelihood, -r.node_id))
            score, topic = best.likelihood, best.topic
        else:
            score, topic = 0.0, None
        lines.append(ReportLine(
            line_no=line_no,
            text=source_lines[line_no - 1] if line_no <= len(source_lines) else "",
            score=score,
            topic=topic,
            flagged=score >= threshold,
        ))

    return ReportDocument(
        file_path=graph.file_path,
        revision_index=graph.revision_index,
        threshold=threshold,
        lines=tuple(lines),
        records=tuple(records),
    )


def render_text(doc: ReportDocument) -> str:
    """Plain-text listing; one row per source line, in order."""
    out = io.StringIO()
    out.write(f"# {doc.file_path} @ revision {doc.revision_index}"
              f" (threshold {doc.threshold:g})\n")
    for line in doc.lines:
        marker = "*" if line.flagged else " "
        topic = f" [{line.topic}]" if line.topic else ""
        out.write(f"{marker} {line.score:0.4f} {line.line_no:>4} | {line.text}{topic}\n")
    return out.getvalue()


def render_csv(doc: ReportDocument) -> str:
    """Delimited per-node records, sorted by (file_path, node_id)."""
    out = io.StringIO()
    out.write("file_path,revision_index,node_id,line_start,line_end,likelihood,topic,gold\n")
    for r in sorted(doc.records, key=lambda r: (r.file_path, r.node_id)):
        out.write(f"{r.file_path},{r.revision_index},{r.node_id},{r.line_start},"
                  f"{r.line_end},{r.likelihood!r},{r.topic or ''},{r.gold or ''}\n")
    return out.getvalue()


def doc_to_json(doc: ReportDocument, config: dict | None = None) -> dict:
    return {
        "file_path": doc.file_path,
        "revision_index": doc.revision_index,
        "threshold": doc.threshold,
        "config": config or {},
        "lines": [
            {"line_no": l.line_no, "text": l.text, "score": l.score,
             "topic": l.topic, "flagged": l.flagged}
            for l in doc.lines
        ],
        "records": [
            {"pr_id": r.pr_id, "file_path": r.file_path,
             "revision_index": r.revision_index, "node_id": r.node_id,
             "line_start": r.line_start, "line_end": r.line_end,
             "likelihood": r.likelihood, "topic": r.topic,
             "topic_scores": r.topic_scores, "gold": r.gold}
            for r in doc.records
        ],
    }
