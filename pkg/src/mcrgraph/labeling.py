"""Comment anchoring, node label construction, weak topic labels, quality
targets, and leakage-free dataset splits.

Label semantics per node of a revision graph:

* POSITIVE — some comment on this (file, revision) anchors to the node.
* NEGATIVE — the node's span overlaps changed lines, no comment anywhere in
  the pull request anchors inside its span, and the span stayed stable for
  ``min(window, remaining revisions)`` subsequent revisions.
* UNKNOWN — everything else; masked out of losses and metrics downstream.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import dataclass

from . import astgraph
from .astgraph import AstGraph
from .corpus import (
    PullRequest,
    ReviewComment,
    ReviewCorpus,
    changed_lines,
    line_count,
    revisions_of,
    stability_horizon,
    step_line_map,
)
from .errors import MiniJSyntaxError, RevisionMismatch

log = logging.getLogger(__name__)


class MetaTopic(enum.Enum):
    STYLE = "STYLE"
    STRUCTURE = "STRUCTURE"
    BUG = "BUG"
    USECASE = "USECASE"
    OTHER = "OTHER"


TOPIC_ORDER = tuple(MetaTopic)

# Case-insensitive substring match, checked in priority order
# BUG > USECASE > STRUCTURE > STYLE (see docs/topics.md).
TOPIC_KEYWORDS: dict[MetaTopic, tuple[str, ...]] = {
    MetaTopic.BUG: ("bug", "crash", "null pointer", "exception", "overflow",
                    "leak", "race", "incorrect", "wrong result"),
    MetaTopic.USECASE: ("requirement", "use case", "spec", "expected behavior",
                        "user story"),
    MetaTopic.STRUCTURE: ("refactor", "extract", "split", "duplicate",
                          "coupling", "move this", "complexity"),
    MetaTopic.STYLE: ("rename", "naming", "format", "indent", "typo",
                      "convention", "readability", "comment style"),
}

_TOPIC_PRIORITY = (MetaTopic.BUG, MetaTopic.USECASE, MetaTopic.STRUCTURE, MetaTopic.STYLE)


class Commented(enum.Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class NodeLabel:
    node_id: int
    commented: Commented
    topic: MetaTopic | None = None  # present iff POSITIVE

    def __post_init__(self):
        if (self.commented is Commented.POSITIVE) != (self.topic is not None):
            raise ValueError("topic must be present exactly for POSITIVE labels")


@dataclass(frozen=True)
class LabeledGraph:
    graph: AstGraph
    labels: tuple[NodeLabel, ...]
    provenance: dict

    def label_of(self, node_id: int) -> NodeLabel:
        return self.labels[node_id]


@dataclass(frozen=True)
class QualityLabel:
    comment_id: str
    actionability: int  # 1 iff the commented code was changed afterwards
    clarity: float  # 1/(1+replies), in (0, 1]


@dataclass(frozen=True)
class DatasetSplit:
    train_pr_ids: frozenset[str]
    test_pr_ids: frozenset[str]
    seed: int
    ratio: float


# --- weak topic labels ---------------------------------------------------------

def weak_topic_label(body: str) -> MetaTopic:
    """First matching keyword category by priority; OTHER when none match."""
    lowered = body.lower()
    for topic in _TOPIC_PRIORITY:
        if any(kw in lowered for kw in TOPIC_KEYWORDS[topic]):
            return topic
    return MetaTopic.OTHER


def comment_topic(comment: ReviewComment) -> MetaTopic:
    """Topic of a comment: a human override when present, else the keyword rule."""
    if comment.topic_override is not None:
        return MetaTopic(comment.topic_override.upper())
    return weak_topic_label(comment.body)


# --- anchoring -------------------------------------------------------------------

def anchor_comment(graph: AstGraph, comment: ReviewComment, changed: set[int]) -> int:
    """Anchor a comment to the smallest AST node covering its lines.

    Prefers the intersection of the comment range with changed lines;
    falls back to the raw range when the intersection is empty.
    """
    span_lines = set(range(comment.line_start, comment.line_end + 1))
    overlap = span_lines & changed
    if overlap:
        return astgraph.node_span_cover(graph, min(overlap), max(overlap))
    return astgraph.node_span_cover(graph, comment.line_start, comment.line_end)


def _parse_revision(pr: PullRequest, file_path: str, revision_index: int) -> AstGraph | None:
    for rev in pr.revisions:
        if rev.file_path == file_path and rev.revision_index == revision_index:
            try:
                return astgraph.parse_source(rev.content, file_path, revision_index)
            except MiniJSyntaxError as exc:
                log.warning("skipping unparseable revision %s@%d: %s", file_path, revision_index, exc)
                return None
    return None


def _forward_line_map(pr: PullRequest, file_path: str, from_rev: int, to_rev: int) -> dict[int, int | None]:
    """Compose per-step maps for all lines of from_rev up to to_rev."""
    revs = revisions_of(pr, file_path)
    by_index = {r.revision_index: r for r in revs}
    mapping: dict[int, int | None] = {
        l: l for l in range(1, line_count(by_index[from_rev].content) + 1)
    }
    for k in range(from_rev + 1, to_rev + 1):
        step = step_line_map(revs, k)
        for orig, cur in mapping.items():
            if cur is not None:
                mapping[orig] = step.get(cur)
    return mapping


def label_graph(
    graph: AstGraph,
    comments: list[ReviewComment],
    pr: PullRequest,
    window: int,
) -> LabeledGraph:
    """Assign POSITIVE/NEGATIVE/UNKNOWN to every node of a revision graph."""
    if window < 1:
        raise ValueError("stability window must be >= 1")
    revs = revisions_of(pr, graph.file_path)
    by_index = {r.revision_index: r for r in revs}
    if graph.revision_index not in by_index:
        raise RevisionMismatch(
            f"pr {pr.id} has no revision {graph.revision_index} of {graph.file_path}")
    for c in comments:
        if c.file_path != graph.file_path or c.revision_index != graph.revision_index:
            raise RevisionMismatch(
                f"comment {c.id} targets {c.file_path}@{c.revision_index}, "
                f"graph is {graph.file_path}@{graph.revision_index}")

    revision = by_index[graph.revision_index]
    changed = changed_lines(revision)
    last_index = revs[-1].revision_index
    remaining = last_index - graph.revision_index
    needed = min(window, remaining)

    # POSITIVE: anchored nodes; topic from the earliest anchoring comment.
    anchored_here: dict[int, ReviewComment] = {}
    for c in sorted(comments, key=lambda c: (c.created_at, c.id)):
        node_id = anchor_comment(graph, c, changed)
        anchored_here.setdefault(node_id, c)

    # Anchor spans of every comment in the whole PR on this file, expressed in
    # this revision's line coordinates, for the NEGATIVE exclusion test.
    exclusion_ranges: list[tuple[int, int]] = []
    later_anchor_ranges: dict[int, list[tuple[int, int]]] = {}
    for c in pr.comments:
        if c.file_path != graph.file_path:
            continue
        if c.revision_index == graph.revision_index:
            node = graph.nodes[anchor_comment(graph, c, changed)]
            exclusion_ranges.append((node.span.line_start, node.span.line_end))
        else:
            other = _parse_revision(pr, c.file_path, c.revision_index)
            if other is None:
                continue
            other_changed = changed_lines(by_index[c.revision_index])
            node = other.nodes[anchor_comment(other, c, other_changed)]
            rng = (node.span.line_start, node.span.line_end)
            if c.revision_index < graph.revision_index:
                fwd = _forward_line_map(pr, graph.file_path, c.revision_index, graph.revision_index)
                survivors = [fwd[l] for l in range(rng[0], rng[1] + 1) if fwd.get(l) is not None]
                if survivors:
                    exclusion_ranges.append((min(survivors), max(survivors)))
            else:
                later_anchor_ranges.setdefault(c.revision_index, []).append(rng)

    # For later-revision comments, map this revision's node extents forward and
    # test whether the anchor range falls inside the mapped extent.
    forward_maps = {
        target: _forward_line_map(pr, graph.file_path, graph.revision_index, target)
        for target in later_anchor_ranges
    }

    def excluded(node: astgraph.AstNode) -> bool:
        for lo, hi in exclusion_ranges:
            if node.span.line_start <= lo and hi <= node.span.line_end:
                return True
        for target, ranges in later_anchor_ranges.items():
            fwd = forward_maps[target]
            survivors = [
                fwd[l]
                for l in range(node.span.line_start, node.span.line_end + 1)
                if fwd.get(l) is not None
            ]
            if not survivors:
                continue
            lo, hi = min(survivors), max(survivors)
            for als, ale in ranges:
                if lo <= als and ale <= hi:
                    return True
        return False

    labels: list[NodeLabel] = []
    for node in graph.nodes:
        if node.id in anchored_here:
            topic = comment_topic(anchored_here[node.id])
            labels.append(NodeLabel(node.id, Commented.POSITIVE, topic))
            continue
        node_lines = set(range(node.span.line_start, node.span.line_end + 1))
        if node_lines & changed and not excluded(node):
            horizon = stability_horizon(pr, graph.file_path, node_lines, graph.revision_index)
            if horizon >= needed:
                labels.append(NodeLabel(node.id, Commented.NEGATIVE))
                continue
        labels.append(NodeLabel(node.id, Commented.UNKNOWN))

    provenance = {
        "pr_id": pr.id,
        "file_path": graph.file_path,
        "revision_index": graph.revision_index,
        "stability_window": window,
    }
    return LabeledGraph(graph=graph, labels=tuple(labels), provenance=provenance)


# --- quality targets -------------------------------------------------------------

def quality_labels(pr: PullRequest, comment: ReviewComment) -> QualityLabel:
    """Derive (actionability, clarity) targets for one comment.

    Actionability is 1 iff a later revision removes a line of the anchored
    node's span or inserts a line inside its tracked extent. Clarity is
    1/(1+k) for k later comments in the same thread.
    """
    if all(c.id != comment.id for c in pr.comments):
        raise RevisionMismatch(f"comment {comment.id} does not belong to pr {pr.id}")
    revs = revisions_of(pr, comment.file_path)
    by_index = {r.revision_index: r for r in revs}
    if comment.revision_index not in by_index:
        raise RevisionMismatch(
            f"pr {pr.id} has no revision {comment.revision_index} of {comment.file_path}")

    graph = astgraph.parse_source(
        by_index[comment.revision_index].content, comment.file_path, comment.revision_index)
    node = graph.nodes[anchor_comment(graph, comment, changed_lines(by_index[comment.revision_index]))]

    tracked = set(range(node.span.line_start, node.span.line_end + 1))
    actionability = 0
    last_index = revs[-1].revision_index
    for k in range(comment.revision_index + 1, last_index + 1):
        step = step_line_map(revs, k)
        moved = {step.get(l) for l in tracked}
        if None in moved:
            actionability = 1
            break
        tracked = {l for l in moved if l is not None}
        if tracked:
            lo, hi = min(tracked), max(tracked)
            if any(lo <= a <= hi for a in changed_lines(by_index[k])):
                actionability = 1
                break

    replies = sum(
        1
        for c in pr.comments
        if c.thread_id == comment.thread_id and c.created_at > comment.created_at
    )
    return QualityLabel(comment_id=comment.id, actionability=actionability,
                        clarity=1.0 / (1.0 + replies))


# --- dataset splits --------------------------------------------------------------

def _split_fraction(seed: int, pr_id: str) -> float:
    digest = hashlib.blake2b(f"{seed}:{pr_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def split_dataset(corpus: ReviewCorpus, ratio: float, seed: int) -> DatasetSplit:
    """Deterministic PR-granular split; `ratio` is the target train fraction.

    Assignment depends only on (seed, pr_id), never on list order.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    train: set[str] = set()
    test: set[str] = set()
    for pr in corpus.pull_requests:
        if _split_fraction(seed, pr.id) < 1.0 - ratio:
            test.add(pr.id)
        else:
            train.add(pr.id)
    return DatasetSplit(frozenset(train), frozenset(test), seed, ratio)


def split_to_json(split: DatasetSplit) -> dict:
    return {
        "train_pr_ids": sorted(split.train_pr_ids),
        "test_pr_ids": sorted(split.test_pr_ids),
        "seed": split.seed,
        "ratio": split.ratio,
    }


def split_from_json(obj: dict) -> DatasetSplit:
    return DatasetSplit(
        train_pr_ids=frozenset(obj["train_pr_ids"]),
        test_pr_ids=frozenset(obj["test_pr_ids"]),
        seed=int(obj["seed"]),
        ratio=float(obj["ratio"]),
    )


def split_fingerprint(split: DatasetSplit) -> str:
    """Stable digest of a split, recorded in checkpoints so evaluation can
    refuse a split other than the one the model was trained against."""
    payload = json.dumps(split_to_json(split), sort_keys=True)
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()


def load_split(path) -> DatasetSplit:
    with open(path, encoding="utf-8") as fh:
        return split_from_json(json.load(fh))


def save_split(split: DatasetSplit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(split_to_json(split), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- labeled-graph serialization ----------------------------------------------

def labeled_graph_to_json(lg: LabeledGraph) -> dict:
    return {
        "graph": astgraph.graph_to_json(lg.graph),
        "labels": [
            {
                "node_id": l.node_id,
                "commented": l.commented.value,
                "topic": l.topic.value if l.topic is not None else None,
            }
            for l in lg.labels
        ],
        "provenance": lg.provenance,
    }


def labeled_graph_from_json(obj: dict) -> LabeledGraph:
    graph = astgraph.graph_from_json(obj["graph"])
    labels = tuple(
        NodeLabel(
            node_id=int(l["node_id"]),
            commented=Commented(l["commented"]),
            topic=MetaTopic(l["topic"]) if l.get("topic") is not None else None,
        )
        for l in obj["labels"]
    )
    return LabeledGraph(graph=graph, labels=labels, provenance=dict(obj["provenance"]))
