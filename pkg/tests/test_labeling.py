"""Unit tests for anchoring, node labels, topics, quality targets, and splits."""

import dataclasses
from pathlib import Path

import pytest

from mcrgraph.astgraph import NodeKind, parse_source
from mcrgraph.corpus import changed_lines, load_corpus, revisions_of
from mcrgraph.errors import RevisionMismatch
from mcrgraph.labeling import (
    Commented,
    MetaTopic,
    NodeLabel,
    anchor_comment,
    comment_topic,
    label_graph,
    labeled_graph_from_json,
    labeled_graph_to_json,
    load_split,
    quality_labels,
    save_split,
    split_dataset,
    split_fingerprint,
    split_from_json,
    split_to_json,
    weak_topic_label,
)

from .synth import synth_split_corpus

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def mini():
    return load_corpus(DATA / "mini_corpus.jsonl")


def pr_by_id(corpus, pr_id):
    return next(pr for pr in corpus.pull_requests if pr.id == pr_id)


def labeled(pr, path, rev_index, window):
    rev = revisions_of(pr, path)[rev_index]
    graph = parse_source(rev.content, path, rev_index)
    comments = [c for c in pr.comments
                if c.file_path == path and c.revision_index == rev_index]
    return graph, label_graph(graph, comments, pr, window)


# --- weak topics -----------------------------------------------------------------

@pytest.mark.parametrize("body,topic", [
    ("this will crash on empty input", MetaTopic.BUG),
    ("NULL POINTER somewhere in here", MetaTopic.BUG),
    ("what use case does this serve?", MetaTopic.USECASE),
    ("please refactor into two methods", MetaTopic.STRUCTURE),
    ("rename for readability", MetaTopic.STYLE),
    ("looks good to me", MetaTopic.OTHER),
    ("", MetaTopic.OTHER),
])
def test_weak_topic_label(body, topic):
    assert weak_topic_label(body) is topic


def test_weak_topic_priority_bug_beats_style():
    assert weak_topic_label("rename this; it hides a bug") is MetaTopic.BUG


def test_weak_topic_priority_usecase_beats_structure():
    assert weak_topic_label("refactor to match the requirement") is MetaTopic.USECASE


def test_comment_topic_override_wins(mini):
    pr4 = pr_by_id(mini, "demo/widgets#4")
    c405 = next(c for c in pr4.comments if c.id.endswith("c405"))
    assert weak_topic_label(c405.body) is MetaTopic.OTHER
    assert comment_topic(c405) is MetaTopic.USECASE


def test_comment_topic_override_is_case_insensitive(mini):
    pr4 = pr_by_id(mini, "demo/widgets#4")
    c405 = next(c for c in pr4.comments if c.id.endswith("c405"))
    lowered = dataclasses.replace(c405, topic_override="structure")
    assert comment_topic(lowered) is MetaTopic.STRUCTURE


# --- node labels ------------------------------------------------------------------

def test_node_label_requires_topic_iff_positive():
    NodeLabel(0, Commented.POSITIVE, MetaTopic.BUG)
    NodeLabel(0, Commented.NEGATIVE)
    with pytest.raises(ValueError):
        NodeLabel(0, Commented.POSITIVE)
    with pytest.raises(ValueError):
        NodeLabel(0, Commented.UNKNOWN, MetaTopic.BUG)


def test_anchor_on_changed_line_picks_deepest_leaf(mini):
    pr1 = pr_by_id(mini, "demo/widgets#1")
    graph, lg = labeled(pr1, "Calc.minij", 0, 2)
    positives = [l for l in lg.labels if l.commented is Commented.POSITIVE]
    assert len(positives) == 1
    node = graph.nodes[positives[0].node_id]
    assert node.kind is NodeKind.IDENTIFIER and node.token == "a"
    assert node.span.line_start == 3
    assert positives[0].topic is MetaTopic.BUG


def test_anchor_falls_back_to_raw_range_off_changed_lines(mini):
    # PR5 comment c501 sits on line 6, untouched by revision 1
    pr5 = pr_by_id(mini, "demo/widgets#5")
    rev1 = revisions_of(pr5, "Matrix.minij")[1]
    assert 6 not in changed_lines(rev1)
    graph = parse_source(rev1.content, "Matrix.minij", 1)
    c501 = next(c for c in pr5.comments if c.id.endswith("c501"))
    node = graph.nodes[anchor_comment(graph, c501, changed_lines(rev1))]
    assert node.span.line_start == 6 and node.span.line_end == 6


def test_multi_line_comment_anchors_to_enclosing_block(mini):
    pr4 = pr_by_id(mini, "demo/widgets#4")
    graph, lg = labeled(pr4, "Parser.minij", 0, 2)
    c403_anchor = [l for l in lg.labels
                   if l.commented is Commented.POSITIVE
                   and graph.nodes[l.node_id].span.line_start == 6
                   and graph.nodes[l.node_id].span.line_end == 8]
    assert len(c403_anchor) == 1
    assert graph.nodes[c403_anchor[0].node_id].kind is NodeKind.BLOCK
    assert c403_anchor[0].topic is MetaTopic.STRUCTURE


def test_pr4_positive_topics(mini):
    pr4 = pr_by_id(mini, "demo/widgets#4")
    _, lg = labeled(pr4, "Parser.minij", 0, 2)
    topics = sorted(l.topic.value for l in lg.labels
                    if l.commented is Commented.POSITIVE)
    # c401 STYLE, c402 BUG, c403 STRUCTURE, c405 USECASE (override), c406 BUG;
    # replies c404/c202 anchor onto already-positive nodes
    assert topics == ["BUG", "BUG", "STRUCTURE", "STYLE", "USECASE"]


def test_exclusion_blocks_negatives_around_anchors(mini):
    pr1 = pr_by_id(mini, "demo/widgets#1")
    graph, lg = labeled(pr1, "Calc.minij", 0, 2)
    # everything whose span contains commented line 3 must not be NEGATIVE
    for label in lg.labels:
        node = graph.nodes[label.node_id]
        if node.span.line_start <= 3 <= node.span.line_end:
            assert label.commented is not Commented.NEGATIVE


def test_cross_revision_exclusion(mini):
    # at revision 1 of PR1 the class declaration spans the still-live anchor
    # from revision 0, so it cannot be NEGATIVE despite touching changed lines
    pr1 = pr_by_id(mini, "demo/widgets#1")
    graph, lg = labeled(pr1, "Calc.minij", 1, 2)
    class_decl = next(n for n in graph.nodes if n.kind is NodeKind.CLASS_DECL)
    assert lg.labels[class_decl.id].commented is Commented.UNKNOWN
    # while the edited return line itself is a clean NEGATIVE
    edited = [l for l in lg.labels
              if graph.nodes[l.node_id].span.line_start == 7
              and graph.nodes[l.node_id].span.line_end == 7]
    assert edited and all(l.commented is Commented.NEGATIVE for l in edited)


def test_stability_window_flips_negative_to_unknown(mini):
    # PR3 line 7 survives exactly one revision; W=1 accepts it, W=2 does not
    pr3 = pr_by_id(mini, "demo/widgets#3")
    graph, lg1 = labeled(pr3, "Queue.minij", 0, 1)
    _, lg2 = labeled(pr3, "Queue.minij", 0, 2)
    line7 = [n.id for n in graph.nodes
             if n.span.line_start == 7 and n.span.line_end == 7]
    assert line7
    assert all(lg1.labels[i].commented is Commented.NEGATIVE for i in line7)
    assert all(lg2.labels[i].commented is Commented.UNKNOWN for i in line7)


def test_negative_set_antitone_in_window(mini):
    for pr in mini.pull_requests:
        for path in pr.file_paths():
            for rev in revisions_of(pr, path):
                sets = []
                for w in (1, 2, 3):
                    _, lg = labeled(pr, path, rev.revision_index, w)
                    sets.append({l.node_id for l in lg.labels
                                 if l.commented is Commented.NEGATIVE})
                assert sets[1] <= sets[0] and sets[2] <= sets[1]


def test_label_graph_rejects_foreign_comment(mini):
    pr1 = pr_by_id(mini, "demo/widgets#1")
    pr4 = pr_by_id(mini, "demo/widgets#4")
    rev = revisions_of(pr1, "Calc.minij")[0]
    graph = parse_source(rev.content, "Calc.minij", 0)
    with pytest.raises(RevisionMismatch):
        label_graph(graph, list(pr4.comments[:1]), pr1, 2)


def test_label_graph_rejects_unknown_revision(mini):
    pr1 = pr_by_id(mini, "demo/widgets#1")
    graph = parse_source("class X {\n}\n", "Calc.minij", 5)
    with pytest.raises(RevisionMismatch):
        label_graph(graph, [], pr1, 2)


def test_label_graph_rejects_bad_window(mini):
    pr1 = pr_by_id(mini, "demo/widgets#1")
    rev = revisions_of(pr1, "Calc.minij")[0]
    graph = parse_source(rev.content, "Calc.minij", 0)
    with pytest.raises(ValueError):
        label_graph(graph, [], pr1, 0)


def test_labeled_graph_json_round_trip(mini):
    pr4 = pr_by_id(mini, "demo/widgets#4")
    _, lg = labeled(pr4, "Parser.minij", 0, 2)
    again = labeled_graph_from_json(labeled_graph_to_json(lg))
    assert again == lg


# --- quality targets ----------------------------------------------------------------

def test_quality_actionability_edit_after_comment(mini):
    pr2 = pr_by_id(mini, "demo/widgets#2")
    c201 = next(c for c in pr2.comments if c.id.endswith("c201"))
    q = quality_labels(pr2, c201)
    assert q.actionability == 1
    assert q.clarity == 0.5  # one reply in the thread


def test_quality_untouched_comment_is_not_actionable(mini):
    pr2 = pr_by_id(mini, "demo/widgets#2")
    c203 = next(c for c in pr2.comments if c.id.endswith("c203"))
    q = quality_labels(pr2, c203)
    assert q.actionability == 0 and q.clarity == 1.0


def test_quality_block_anchor_counts_interior_edits(mini):
    pr4 = pr_by_id(mini, "demo/widgets#4")
    c403 = next(c for c in pr4.comments if c.id.endswith("c403"))
    assert quality_labels(pr4, c403).actionability == 1


def test_quality_rejects_foreign_comment(mini):
    pr1 = pr_by_id(mini, "demo/widgets#1")
    pr2 = pr_by_id(mini, "demo/widgets#2")
    c201 = next(c for c in pr2.comments if c.id.endswith("c201"))
    with pytest.raises(RevisionMismatch):
        quality_labels(pr1, c201)


# --- splits -----------------------------------------------------------------------

def test_split_is_deterministic_and_disjoint():
    corpus = synth_split_corpus(200)
    a = split_dataset(corpus, 0.8, seed=7)
    b = split_dataset(corpus, 0.8, seed=7)
    assert a == b
    assert not (a.train_pr_ids & a.test_pr_ids)
    assert a.train_pr_ids | a.test_pr_ids == {pr.id for pr in corpus.pull_requests}


def test_split_ignores_pr_order():
    corpus = synth_split_corpus(100)
    shuffled = dataclasses.replace(
        corpus, pull_requests=tuple(reversed(corpus.pull_requests)))
    assert split_dataset(corpus, 0.8, 3) == split_dataset(shuffled, 0.8, 3)


def test_split_seed_changes_assignment():
    corpus = synth_split_corpus(300)
    a = split_dataset(corpus, 0.8, seed=0)
    b = split_dataset(corpus, 0.8, seed=1)
    assert a.train_pr_ids != b.train_pr_ids


def test_split_rejects_degenerate_ratio():
    corpus = synth_split_corpus(10)
    with pytest.raises(ValueError):
        split_dataset(corpus, 0.0, 0)
    with pytest.raises(ValueError):
        split_dataset(corpus, 1.0, 0)


def test_split_json_round_trip(tmp_path):
    split = split_dataset(synth_split_corpus(50), 0.75, seed=2)
    assert split_from_json(split_to_json(split)) == split
    path = tmp_path / "split.json"
    save_split(split, path)
    assert load_split(path) == split


def test_split_fingerprint_tracks_content():
    split_a = split_dataset(synth_split_corpus(50), 0.8, seed=2)
    split_b = split_dataset(synth_split_corpus(50), 0.8, seed=3)
    assert split_fingerprint(split_a) == split_fingerprint(split_a)
    assert split_fingerprint(split_a) != split_fingerprint(split_b)
