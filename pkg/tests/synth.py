"""Synthetic data generators for the test suite.

The planted-rule corpora double as oracles: the generator knows which nodes
are positive, so a model trained on its output can be scored exactly.
"""

from __future__ import annotations

from datetime import datetime, timezone

import numpy as np

from mcrgraph.astgraph import AstGraph, NodeKind, parse_source
from mcrgraph.corpus import PullRequest, ReviewCorpus
from mcrgraph.labeling import Commented, LabeledGraph, MetaTopic, NodeLabel

# --- random MiniJ sources ------------------------------------------------------------

_TYPES = ("int", "long", "boolean", "String", "double")
_NAMES = ("acc", "base", "count", "data", "extra", "flag", "gain", "high",
          "item", "jump", "keep", "low", "mark", "next", "out", "pos",
          "rate", "size", "tail", "used", "value", "width")
_BINOPS = ("+", "-", "*", "/", "%", "<", ">", "<=", ">=", "==", "!=", "&&", "||")


class _MiniJGen:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"{self.rng.choice(_NAMES)}{self.counter}"

    def expr(self, depth: int = 0) -> str:
        roll = self.rng.random()
        if depth >= 2 or roll < 0.35:
            choices = [
                str(self.rng.integers(0, 100)),
                self.rng.choice(_NAMES),
                "true", "false",
            ]
            return str(self.rng.choice(choices))
        if roll < 0.7:
            return f"{self.expr(depth + 1)} {self.rng.choice(_BINOPS)} {self.expr(depth + 1)}"
        if roll < 0.8:
            return f"!{self.expr(depth + 1)}" if self.rng.random() < 0.5 \
                else f"-{self.expr(depth + 1)}"
        if roll < 0.9:
            args = ", ".join(self.expr(depth + 1)
                             for _ in range(int(self.rng.integers(0, 3))))
            return f"{self.rng.choice(_NAMES)}({args})"
        if roll < 0.95:
            return f"{self.rng.choice(_NAMES)}.{self.rng.choice(_NAMES)}"
        return f"{self.rng.choice(_NAMES)}[{self.expr(depth + 1)}]"

    def statement(self, indent: str, depth: int = 0) -> list[str]:
        roll = self.rng.random()
        if depth >= 2 or roll < 0.3:
            return [f"{indent}{self.rng.choice(_NAMES)} = {self.expr()};"]
        if roll < 0.45:
            return [f"{indent}{self.rng.choice(_TYPES)} {self.fresh()} = {self.expr()};"]
        if roll < 0.6:
            body = self.statement(indent + "    ", depth + 1)
            return [f"{indent}if ({self.expr()}) {{", *body, f"{indent}}}"]
        if roll < 0.7:
            body = self.statement(indent + "    ", depth + 1)
            return [f"{indent}while ({self.expr()}) {{", *body, f"{indent}}}"]
        if roll < 0.8:
            i = self.fresh()
            body = self.statement(indent + "    ", depth + 1)
            return [f"{indent}for (int {i} = 0; {i} < 10; {i} = {i} + 1) {{",
                    *body, f"{indent}}}"]
        if roll < 0.9:
            return [f"{indent}return {self.expr()};"]
        return [f"{indent}{self.rng.choice(_NAMES)}({self.expr()});"]

    def method(self) -> list[str]:
        name = self.fresh()
        n_params = int(self.rng.integers(0, 3))
        params = ", ".join(f"{self.rng.choice(_TYPES)} {self.fresh()}"
                           for _ in range(n_params))
        lines = [f"    int {name}({params}) {{"]
        for _ in range(int(self.rng.integers(1, 4))):
            lines.extend(self.statement("        "))
        lines.append(f"        return {self.expr()};")
        lines.append("    }")
        return lines

    def source(self) -> str:
        lines = [f"class {self.rng.choice(_NAMES).capitalize()}{self.counter} {{"]
        if self.rng.random() < 0.5:
            lines.append(f"    int {self.fresh()} = {self.expr()};")
        for _ in range(int(self.rng.integers(1, 3))):
            lines.extend(self.method())
        lines.append("}")
        return "\n".join(lines) + "\n"


def gen_minij(rng: np.random.Generator) -> str:
    return _MiniJGen(rng).source()


def random_graphs(rng: np.random.Generator, n: int) -> list[AstGraph]:
    return [parse_source(gen_minij(rng), f"synth_{i}.minij", 0) for i in range(n)]


# --- planted-rule corpora --------------------------------------------------------------


def _planted_source(rng: np.random.Generator) -> str:
    """Methods mixing if-guarded returns with bare/loop returns, flat enough
    that every IF ancestor of a RETURN sits within two hops.  The mix is
    weighted so guarded returns make up well over the share a majority-class
    predictor could fake."""
    gen = _MiniJGen(rng)
    lines = [f"class Planted{rng.integers(0, 10_000)} {{"]
    for _ in range(int(rng.integers(2, 4))):
        name = gen.fresh()
        lines.append(f"    int {name}() {{")
        for _ in range(int(rng.integers(3, 6))):
            kind = rng.random()
            cond = gen.expr(depth=2)
            a, b = gen.expr(depth=2), gen.expr(depth=2)
            if kind < 0.4:
                lines.append(f"        if ({cond}) {{ return {a}; }} else {{ return {b}; }}")
            elif kind < 0.55:
                lines.append(f"        if ({cond}) return {a}; else return {b};")
            elif kind < 0.7:
                lines.append(f"        if ({cond}) {{ return {a}; }}")
            elif kind < 0.85:
                lines.append(f"        while ({cond}) {{ return {a}; }}")
            elif kind < 0.95:
                lines.append(f"        return {a};")
            else:
                lines.append(f"        {gen.rng.choice(_NAMES)} = {a};")
        lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _return_inside_if(graph: AstGraph) -> set[int]:
    parent = {e.dst: e.src for e in graph.edges if e.kind.value == "CHILD"}
    kinds = {n.id: n.kind for n in graph.nodes}
    hits = set()
    for node in graph.nodes:
        if node.kind is not NodeKind.RETURN:
            continue
        cur = node.id
        while cur in parent:
            cur = parent[cur]
            if kinds[cur] is NodeKind.IF:
                hits.add(node.id)
                break
            if kinds[cur] in (NodeKind.WHILE, NodeKind.FOR, NodeKind.METHOD_DECL):
                break
    return hits


def planted_likelihood_dataset(rng: np.random.Generator, n_graphs: int = 30) -> list[LabeledGraph]:
    """Every node labeled: RETURN under an IF arm -> POSITIVE, rest NEGATIVE."""
    out = []
    i = 0
    while len(out) < n_graphs:
        graph = parse_source(_planted_source(rng), f"planted_{i}.minij", 0)
        i += 1
        positives = _return_inside_if(graph)
        n_returns = sum(1 for n in graph.nodes if n.kind is NodeKind.RETURN)
        if not positives or len(positives) == n_returns:
            continue  # need both return populations in every graph
        labels = tuple(
            NodeLabel(n.id, Commented.POSITIVE, MetaTopic.OTHER)
            if n.id in positives else NodeLabel(n.id, Commented.NEGATIVE)
            for n in graph.nodes
        )
        out.append(LabeledGraph(graph=graph, labels=labels, provenance={
            "pr_id": f"planted#{len(out)}", "file_path": graph.file_path,
            "revision_index": 0, "stability_window": 1,
        }))
    return out


_TOPIC_BUCKETS = {
    MetaTopic.STYLE: {NodeKind.IDENTIFIER, NodeKind.LITERAL},
    MetaTopic.STRUCTURE: {NodeKind.CLASS_DECL, NodeKind.METHOD_DECL,
                          NodeKind.FIELD_DECL, NodeKind.BLOCK, NodeKind.PARAM},
    MetaTopic.BUG: {NodeKind.IF, NodeKind.WHILE, NodeKind.FOR},
    MetaTopic.USECASE: {NodeKind.RETURN, NodeKind.CALL, NodeKind.ASSIGN,
                        NodeKind.VAR_DECL},
}


def planted_topic(kind: NodeKind) -> MetaTopic:
    for topic, kinds in _TOPIC_BUCKETS.items():
        if kind in kinds:
            return topic
    return MetaTopic.OTHER


def planted_topic_dataset(rng: np.random.Generator, n_graphs: int = 30) -> list[LabeledGraph]:
    """Every node POSITIVE with a topic decided by its syntactic kind."""
    out = []
    for i, graph in enumerate(random_graphs(rng, n_graphs)):
        labels = tuple(
            NodeLabel(n.id, Commented.POSITIVE, planted_topic(n.kind))
            for n in graph.nodes
        )
        out.append(LabeledGraph(graph=graph, labels=labels, provenance={
            "pr_id": f"planted#{i}", "file_path": graph.file_path,
            "revision_index": 0, "stability_window": 1,
        }))
    return out


# --- synthetic corpora and file pairs ---------------------------------------------------


def synth_split_corpus(n_prs: int) -> ReviewCorpus:
    """Minimal corpus: ids only, enough for split behavior."""
    created = datetime(2025, 1, 1, tzinfo=timezone.utc)
    prs = tuple(
        PullRequest(id=f"org/repo#{i}", repo="org/repo", created_at=created, merged=True)
        for i in range(n_prs)
    )
    return ReviewCorpus(pull_requests=prs)


def random_text_pair(rng: np.random.Generator, max_lines: int = 40) -> tuple[str, str]:
    """(old, new) file contents with random line edits, for diff round-trips.

    Contents follow the corpus convention: newline-terminated throughout.
    """
    n = int(rng.integers(1, max_lines))
    old_lines = [f"line {i} {rng.integers(0, 5)}" for i in range(n)]
    new_lines = []
    for text in old_lines:
        roll = rng.random()
        if roll < 0.15:
            continue  # deleted
        if roll < 0.3:
            new_lines.append(text + " edited")
            continue
        new_lines.append(text)
        if roll > 0.85:
            new_lines.append(f"inserted {rng.integers(0, 100)}")
    if not new_lines:
        new_lines = ["only line"]
    old = "".join(l + "\n" for l in old_lines)
    new = "".join(l + "\n" for l in new_lines)
    return old, new
