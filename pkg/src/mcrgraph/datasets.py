"""Dataset assembly: turns a corpus plus a split into the labeled graphs and
quality samples the training and evaluation paths consume.

Files that fail to parse are skipped with a logged reason — labeled data
never contains half-parsed graphs.
"""

from __future__ import annotations

import logging

import numpy as np

from . import graphlearn as gl
from .astgraph import parse_source
from .corpus import PullRequest, ReviewCorpus, changed_lines, revisions_of
from .errors import MiniJSyntaxError
from .labeling import LabeledGraph, anchor_comment, label_graph, quality_labels
from .textrep import Vocabulary, build_vocabulary, tokenize

log = logging.getLogger(__name__)


def _prs_by_id(corpus: ReviewCorpus, pr_ids) -> list[PullRequest]:
    wanted = set(pr_ids)
    return sorted((pr for pr in corpus.pull_requests if pr.id in wanted),
                  key=lambda pr: pr.id)


def labeled_graphs_for(corpus: ReviewCorpus, pr_ids, window: int) -> list[LabeledGraph]:
    """One labeled graph per parseable (pr, file, revision), in sorted order."""
    out = []
    for pr in _prs_by_id(corpus, pr_ids):
        for file_path in pr.file_paths():
            for rev in revisions_of(pr, file_path):
                try:
                    graph = parse_source(rev.content, file_path, rev.revision_index)
                except MiniJSyntaxError as exc:
                    log.warning("skipping %s %s@%d: %s", pr.id, file_path,
                                rev.revision_index, exc)
                    continue
                comments = [c for c in pr.comments
                            if c.file_path == file_path
                            and c.revision_index == rev.revision_index]
                out.append(label_graph(graph, comments, pr, window))
    return out


def comment_documents(corpus: ReviewCorpus, pr_ids) -> list[list[str]]:
    """Tokenized comment bodies, for vocabulary construction."""
    return [
        tokenize(c.body)
        for pr in _prs_by_id(corpus, pr_ids)
        for c in sorted(pr.comments, key=lambda c: c.id)
    ]


def quality_samples_for(corpus: ReviewCorpus, pr_ids,
                        context_model: gl.Model) -> list[gl.QualitySample]:
    """One sample per comment whose revision parses.

    The context is the frozen likelihood model's final-layer embedding of
    the comment's anchored node.
    """
    samples = []
    for pr in _prs_by_id(corpus, pr_ids):
        hidden_cache: dict[tuple[str, int], tuple] = {}
        for comment in sorted(pr.comments, key=lambda c: c.id):
            key = (comment.file_path, comment.revision_index)
            if key not in hidden_cache:
                revs = {r.revision_index: r
                        for r in revisions_of(pr, comment.file_path)}
                rev = revs[comment.revision_index]
                try:
                    graph = parse_source(rev.content, rev.file_path, rev.revision_index)
                except MiniJSyntaxError as exc:
                    log.warning("skipping comments on %s %s@%d: %s",
                                pr.id, rev.file_path, rev.revision_index, exc)
                    hidden_cache[key] = None
                    continue
                features = gl.node_features(graph, context_model.config)
                _, hidden = gl.forward_nodes(context_model, features,
                                             gl.dense_adjacency(graph))
                hidden_cache[key] = (graph, hidden.values, changed_lines(rev))
            if hidden_cache[key] is None:
                continue
            graph, hidden, changed = hidden_cache[key]
            node_id = anchor_comment(graph, comment, changed)
            target = quality_labels(pr, comment)
            samples.append(gl.QualitySample(
                comment_id=comment.id,
                pr_id=pr.id,
                tokens=tuple(tokenize(comment.body)),
                context=tuple(float(x) for x in hidden[node_id]),
                actionability=float(target.actionability),
                clarity=target.clarity,
            ))
    return samples


def build_comment_vocabulary(corpus: ReviewCorpus, pr_ids, min_df: int = 2,
                             max_size: int = 5000) -> Vocabulary:
    return build_vocabulary(comment_documents(corpus, pr_ids), min_df, max_size)


def node_classification_arrays(model: gl.Model,
                               graphs: list[LabeledGraph]) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (scores, labels) over all unmasked nodes, for metrics.

    Scores are softmax probabilities; labels follow the task's class order.
    """
    from .tensor import row_softmax

    score_rows, label_rows = [], []
    for lg in graphs:
        features, adj, labels, mask = gl.graph_arrays(lg, model.config)
        if not mask.any():
            continue
        logits, _ = gl.forward_nodes(model, features, adj)
        probs = row_softmax(logits).values
        score_rows.append(probs[mask])
        label_rows.append(labels[mask])
    if not score_rows:
        return np.zeros((0, model.config.n_classes)), np.zeros(0, dtype=np.int64)
    return np.vstack(score_rows), np.concatenate(label_rows)
