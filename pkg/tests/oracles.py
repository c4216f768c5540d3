"""Independent reference implementations used as test oracles.

Everything here is built on different machinery than the package under
test: difflib for line tracking, exhaustive search for span covering,
brute-force pair counting for AUC, and central finite differences for
gradients. Keep it that way — these exist to disagree when the package
is wrong.
"""

from __future__ import annotations

import difflib
import re

import numpy as np

from mcrgraph.astgraph import AstGraph, parse_source
from mcrgraph.corpus import PullRequest, ReviewComment, line_count, revisions_of

# --- difflib-based line tracking ---------------------------------------------------


def _lines(content: str) -> list[str]:
    return content.splitlines(keepends=True)


def difflib_line_map(old: str, new: str) -> dict[int, int | None]:
    """old-file line -> new-file line; None when removed or edited."""
    matcher = difflib.SequenceMatcher(a=_lines(old), b=_lines(new), autojunk=False)
    mapping: dict[int, int | None] = {}
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            for k in range(i2 - i1):
                mapping[i1 + k + 1] = j1 + k + 1
        else:
            for i in range(i1, i2):
                mapping[i + 1] = None
    return mapping


def difflib_changed_lines(old: str, new: str) -> set[int]:
    """New-file lines introduced by this edit (insert/replace ranges)."""
    matcher = difflib.SequenceMatcher(a=_lines(old), b=_lines(new), autojunk=False)
    changed: set[int] = set()
    for tag, _i1, _i2, j1, j2 in matcher.get_opcodes():
        if tag in ("insert", "replace"):
            changed.update(range(j1 + 1, j2 + 1))
    return changed


# --- exhaustive span covering -------------------------------------------------------


def _depths(graph: AstGraph) -> dict[int, int]:
    parent: dict[int, int] = {}
    for e in graph.edges:
        if e.kind.value == "CHILD":
            parent[e.dst] = e.src
    depths = {}
    for node in graph.nodes:
        d, cur = 0, node.id
        while cur in parent:
            cur = parent[cur]
            d += 1
        depths[node.id] = d
    return depths


def exhaustive_span_cover(graph: AstGraph, line_start: int, line_end: int) -> int:
    """Smallest covering node, deepest wins ties, then lowest id; root as
    fallback when nothing covers the range."""
    depths = _depths(graph)
    best = None
    for node in graph.nodes:
        if not (node.span.line_start <= line_start and line_end <= node.span.line_end):
            continue
        size = node.span.line_end - node.span.line_start
        key = (size, -depths[node.id], node.id)
        if best is None or key < best[0]:
            best = (key, node.id)
    return 0 if best is None else best[1]


# --- brute-force AUC ---------------------------------------------------------------


def brute_force_auc(scores, labels) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


# --- finite differences -------------------------------------------------------------


def finite_diff_grad(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar f at x, coordinate by coordinate."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        out[i] = (hi - lo) / (2.0 * eps)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float((np.abs(analytic - numeric) / denom).max())


# --- independent expression-atom scanner ---------------------------------------------

_TOKEN_RE = re.compile(
    r"""//[^\n]*            # line comment
      | /\*.*?\*/           # block comment
      | "(?:\\.|[^"\\\n])*" # string literal
      | \d+(?:\.\d+)?       # number
      | [A-Za-z_][A-Za-z0-9_]*
      | \|\||&&|==|!=|<=|>=
      | [^\sA-Za-z0-9_]     # single punctuation/operator
    """,
    re.VERBOSE | re.DOTALL,
)

_KEYWORDS = {"class", "if", "else", "while", "for", "return"}
_LITERAL_WORDS = {"true", "false", "null"}


def expression_atoms(source: str) -> list[str]:
    """Source-order identifiers-in-expression-position and literals.

    Declared names (class names, types, field/method/parameter/variable
    names) are syntax, not expression atoms, and are skipped.
    """
    raw = [t for t in _TOKEN_RE.findall(source)
           if not (t.startswith("//") or t.startswith("/*"))]
    atoms: list[str] = []
    i = 0

    def is_word(tok: str) -> bool:
        return bool(re.match(r"[A-Za-z_]", tok)) and tok not in _KEYWORDS \
            and tok not in _LITERAL_WORDS

    while i < len(raw):
        tok = raw[i]
        if tok == "class":
            i += 2  # keyword and the class name
            continue
        if is_word(tok):
            # type-then-name: IDENT IDENT, or IDENT [ ] ... IDENT — both are
            # declaration syntax, never expression atoms
            j = i + 1
            while j + 1 < len(raw) and raw[j] == "[" and raw[j + 1] == "]":
                j += 2
            if j < len(raw) and is_word(raw[j]):
                i = j + 1
                continue
            atoms.append(tok)
            i += 1
            continue
        if tok in _LITERAL_WORDS or tok[0].isdigit() or tok.startswith('"'):
            atoms.append(tok)
            i += 1
            continue
        i += 1
    return atoms


# --- independent weak-topic labeler ---------------------------------------------------

_ORACLE_TOPICS = [
    ("BUG", ["bug", "crash", "null pointer", "exception", "overflow", "leak",
             "race", "incorrect", "wrong result"]),
    ("USECASE", ["requirement", "use case", "spec", "expected behavior", "user story"]),
    ("STRUCTURE", ["refactor", "extract", "split", "duplicate", "coupling",
                   "move this", "complexity"]),
    ("STYLE", ["rename", "naming", "format", "indent", "typo", "convention",
               "readability", "comment style"]),
]


def oracle_topic(body: str) -> str:
    low = body.lower()
    for name, keywords in _ORACLE_TOPICS:
        for kw in keywords:
            if kw in low:
                return name
    return "OTHER"


# --- independent labeler (difflib tracking + exhaustive covering) ---------------------


class _FileHistory:
    def __init__(self, pr: PullRequest, file_path: str):
        revs = revisions_of(pr, file_path)
        self.contents = {r.revision_index: r.content for r in revs}
        self.last = revs[-1].revision_index

    def changed(self, rev: int) -> set[int]:
        if rev == 0:
            return set(range(1, line_count(self.contents[0]) + 1))
        return difflib_changed_lines(self.contents[rev - 1], self.contents[rev])

    def step(self, to_rev: int) -> dict[int, int | None]:
        return difflib_line_map(self.contents[to_rev - 1], self.contents[to_rev])

    def track(self, lines: set[int], from_rev: int, to_rev: int) -> dict[int, int | None]:
        result: dict[int, int | None] = {l: l for l in lines}
        for k in range(from_rev + 1, to_rev + 1):
            mapping = self.step(k)
            for orig, cur in result.items():
                if cur is not None:
                    result[orig] = mapping.get(cur)
        return result

    def horizon(self, lines: set[int], from_rev: int) -> int:
        tracked = set(lines)
        steps = 0
        for k in range(from_rev + 1, self.last + 1):
            mapping = self.step(k)
            moved = {mapping.get(l) for l in tracked}
            if None in moved and tracked:
                break
            tracked = {l for l in moved if l is not None}
            steps += 1
        return steps


def _topic_of(comment: ReviewComment) -> str:
    if comment.topic_override is not None:
        return comment.topic_override.upper()
    return oracle_topic(comment.body)


def _anchor(graph: AstGraph, comment: ReviewComment, changed: set[int]) -> int:
    span = set(range(comment.line_start, comment.line_end + 1))
    overlap = span & changed
    if overlap:
        return exhaustive_span_cover(graph, min(overlap), max(overlap))
    return exhaustive_span_cover(graph, comment.line_start, comment.line_end)


def oracle_label_graph(pr: PullRequest, file_path: str, rev: int,
                       window: int) -> dict[int, tuple[str, str | None]]:
    """node_id -> (POSITIVE/NEGATIVE/UNKNOWN, topic) for one revision graph."""
    history = _FileHistory(pr, file_path)
    graph = parse_source(history.contents[rev], file_path, rev)
    changed = history.changed(rev)
    graphs = {rev: graph}

    def graph_at(k: int) -> AstGraph:
        if k not in graphs:
            graphs[k] = parse_source(history.contents[k], file_path, k)
        return graphs[k]

    here = [c for c in pr.comments
            if c.file_path == file_path and c.revision_index == rev]
    positives: dict[int, ReviewComment] = {}
    for c in sorted(here, key=lambda c: (c.created_at, c.id)):
        positives.setdefault(_anchor(graph, c, changed), c)

    exclusion_ranges: list[tuple[int, int]] = []
    later: list[tuple[int, tuple[int, int]]] = []  # (revision, anchored line range)
    for c in pr.comments:
        if c.file_path != file_path:
            continue
        other = graph_at(c.revision_index)
        node = other.nodes[_anchor(other, c, history.changed(c.revision_index))]
        rng = (node.span.line_start, node.span.line_end)
        if c.revision_index == rev:
            exclusion_ranges.append(rng)
        elif c.revision_index < rev:
            fwd = history.track(set(range(rng[0], rng[1] + 1)), c.revision_index, rev)
            survivors = [v for v in fwd.values() if v is not None]
            if survivors:
                exclusion_ranges.append((min(survivors), max(survivors)))
        else:
            later.append((c.revision_index, rng))

    out: dict[int, tuple[str, str | None]] = {}
    for node in graph.nodes:
        if node.id in positives:
            out[node.id] = ("POSITIVE", _topic_of(positives[node.id]))
            continue
        lo, hi = node.span.line_start, node.span.line_end
        node_lines = set(range(lo, hi + 1))

        excluded = any(lo <= a and b <= hi for a, b in exclusion_ranges)
        if not excluded:
            for target_rev, (als, ale) in later:
                fwd = history.track(node_lines, rev, target_rev)
                survivors = [v for v in fwd.values() if v is not None]
                if survivors and min(survivors) <= als and ale <= max(survivors):
                    excluded = True
                    break

        needed = min(window, history.last - rev)
        if node_lines & changed and not excluded \
                and history.horizon(node_lines, rev) >= needed:
            out[node.id] = ("NEGATIVE", None)
        else:
            out[node.id] = ("UNKNOWN", None)
    return out


def oracle_quality(pr: PullRequest, comment: ReviewComment) -> tuple[int, float]:
    """(actionability, clarity) by brute-force scan over later revisions."""
    history = _FileHistory(pr, comment.file_path)
    rev = comment.revision_index
    graph = parse_source(history.contents[rev], comment.file_path, rev)
    node = graph.nodes[_anchor(graph, comment, history.changed(rev))]
    tracked = set(range(node.span.line_start, node.span.line_end + 1))

    actionability = 0
    for k in range(rev + 1, history.last + 1):
        mapping = history.step(k)
        moved = {mapping.get(l) for l in tracked}
        if None in moved:
            actionability = 1
            break
        tracked = {l for l in moved if l is not None}
        if tracked:
            lo, hi = min(tracked), max(tracked)
            if any(lo <= a <= hi for a in history.changed(k)):
                actionability = 1
                break

    replies = sum(1 for c in pr.comments
                  if c.thread_id == comment.thread_id
                  and c.created_at > comment.created_at)
    return actionability, 1.0 / (1.0 + replies)
