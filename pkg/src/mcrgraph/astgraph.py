"""MiniJ parsing into typed AST graphs, plus graph utilities.

MiniJ is a small Java-like language (grammar in docs/grammar.md). The
parser produces an AstGraph: typed nodes with 1-based inclusive source
spans, CHILD edges forming a tree in pre-order id order, and NEXT_SIBLING
edges between consecutive children. There is no error recovery: the first
syntax error raises MiniJSyntaxError.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import MiniJSyntaxError, OutOfRange


class NodeKind(enum.Enum):
    COMPILATION_UNIT = "COMPILATION_UNIT"
    CLASS_DECL = "CLASS_DECL"
    FIELD_DECL = "FIELD_DECL"
    METHOD_DECL = "METHOD_DECL"
    PARAM = "PARAM"
    BLOCK = "BLOCK"
    IF = "IF"
    WHILE = "WHILE"
    FOR = "FOR"
    RETURN = "RETURN"
    VAR_DECL = "VAR_DECL"
    EXPR_STMT = "EXPR_STMT"
    ASSIGN = "ASSIGN"
    BINARY = "BINARY"
    UNARY = "UNARY"
    CALL = "CALL"
    FIELD_ACCESS = "FIELD_ACCESS"
    INDEX = "INDEX"
    IDENTIFIER = "IDENTIFIER"
    LITERAL = "LITERAL"


KIND_ORDER = tuple(NodeKind)  # stable one-hot ordering for features

TOKEN_KINDS = frozenset(
    {NodeKind.IDENTIFIER, NodeKind.LITERAL, NodeKind.BINARY, NodeKind.UNARY, NodeKind.ASSIGN}
)


class EdgeKind(enum.Enum):
    CHILD = "CHILD"
    NEXT_SIBLING = "NEXT_SIBLING"


@dataclass(frozen=True)
class Span:
    line_start: int
    col_start: int
    line_end: int
    col_end: int

    def covers_lines(self, line_start: int, line_end: int) -> bool:
        return self.line_start <= line_start and line_end <= self.line_end

    def contains(self, other: "Span") -> bool:
        return (self.line_start, self.col_start) <= (other.line_start, other.col_start) and (
            other.line_end, other.col_end
        ) <= (self.line_end, self.col_end)

    @property
    def line_size(self) -> int:
        return self.line_end - self.line_start


@dataclass(frozen=True)
class AstNode:
    id: int
    kind: NodeKind
    token: str | None
    span: Span


@dataclass(frozen=True)
class AstEdge:
    src: int
    dst: int
    kind: EdgeKind


@dataclass(frozen=True)
class AstGraph:
    file_path: str
    revision_index: int
    nodes: tuple[AstNode, ...]
    edges: tuple[AstEdge, ...]

    def children(self) -> dict[int, list[int]]:
        table: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.kind is EdgeKind.CHILD:
                table[e.src].append(e.dst)
        return table

    def parents(self) -> dict[int, int | None]:
        table: dict[int, int | None] = {n.id: None for n in self.nodes}
        for e in self.edges:
            if e.kind is EdgeKind.CHILD:
                table[e.dst] = e.src
        return table

    def depths(self) -> list[int]:
        parent = self.parents()
        depth = [0] * len(self.nodes)
        for n in self.nodes:  # pre-order: parent id < child id
            p = parent[n.id]
            depth[n.id] = 0 if p is None else depth[p] + 1
        return depth


# --- lexer -----------------------------------------------------------------

KEYWORDS = frozenset({"class", "if", "else", "while", "for", "return"})
LITERAL_WORDS = frozenset({"true", "false", "null"})

_TWO_CHAR_OPS = ("||", "&&", "==", "!=", "<=", ">=")
_ONE_CHAR = set("+-*/%<>=!(){}[];,.")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | string | keyword | literal | punct | eof
    text: str
    line: int
    col: int

    @property
    def col_end(self) -> int:
        return self.col + max(len(self.text), 1) - 1


def tokenize_source(content: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(content)
    while i < n:
        ch = content[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if content.startswith("//", i):
            while i < n and content[i] != "\n":
                i += 1
                col += 1
            continue
        if content.startswith("/*", i):
            start_line, start_col = line, col
            i += 2
            col += 2
            while i < n and not content.startswith("*/", i):
                if content[i] == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
                i += 1
            if i >= n:
                raise MiniJSyntaxError(start_line, start_col, "'*/'", "end of file")
            i += 2
            col += 2
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (content[i].isalnum() or content[i] == "_"):
                i += 1
            text = content[start:i]
            if text in KEYWORDS:
                kind = "keyword"
            elif text in LITERAL_WORDS:
                kind = "literal"
            else:
                kind = "ident"
            tokens.append(Token(kind, text, line, col))
            col += len(text)
            continue
        if ch.isdigit():
            start = i
            while i < n and content[i].isdigit():
                i += 1
            if i < n - 1 and content[i] == "." and content[i + 1].isdigit():
                i += 1
                while i < n and content[i].isdigit():
                    i += 1
            text = content[start:i]
            tokens.append(Token("number", text, line, col))
            col += len(text)
            continue
        if ch == '"':
            start = i
            start_col = col
            i += 1
            col += 1
            while i < n and content[i] not in ('"', "\n"):
                if content[i] == "\\" and i + 1 < n:
                    i += 2
                    col += 2
                else:
                    i += 1
                    col += 1
            if i >= n or content[i] == "\n":
                raise MiniJSyntaxError(line, start_col, "closing '\"'", "end of line")
            i += 1
            col += 1
            tokens.append(Token("string", content[start:i], line, start_col))
            continue
        two = content[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token("punct", two, line, col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        raise MiniJSyntaxError(line, col, "a token", repr(ch))
    tokens.append(Token("eof", "", line, col))
    return tokens


# --- parser ----------------------------------------------------------------

class _Node:
    __slots__ = ("kind", "token", "children", "span")

    def __init__(self, kind: NodeKind, token: str | None, children: list["_Node"], span: Span):
        self.kind = kind
        self.token = token
        self.children = children
        self.span = span


def _merge(a: Span, b: Span) -> Span:
    start = min((a.line_start, a.col_start), (b.line_start, b.col_start))
    end = max((a.line_end, a.col_end), (b.line_end, b.col_end))
    return Span(start[0], start[1], end[0], end[1])


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def _found(self, tok: Token) -> str:
        return "end of file" if tok.kind == "eof" else repr(tok.text)

    def fail(self, expected: str) -> None:
        tok = self.peek()
        raise MiniJSyntaxError(tok.line, tok.col, expected, self._found(tok))

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == text or tok.kind == "keyword" and tok.text == text:
            return self.advance()
        self.fail(f"'{text}'")

    def expect_ident(self, what: str = "an identifier") -> Token:
        tok = self.peek()
        if tok.kind == "ident":
            return self.advance()
        self.fail(what)

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "keyword") and tok.text == text

    def span_of(self, tok: Token) -> Span:
        return Span(tok.line, tok.col, tok.line, tok.col_end)

    def last_span(self) -> Span:
        tok = self.tokens[self.pos - 1]
        return self.span_of(tok)

    # type := IDENT ("[" "]")*
    def parse_type(self) -> Span:
        tok = self.expect_ident("a type name")
        span = self.span_of(tok)
        while self.at("["):
            self.advance()
            close = self.expect("]")
            span = _merge(span, self.span_of(close))
        return span

    def parse_program(self) -> list[_Node]:
        classes = []
        while not self.peek().kind == "eof":
            classes.append(self.parse_class())
        return classes

    def parse_class(self) -> _Node:
        start = self.peek()
        if not self.at("class"):
            self.fail("'class'")
        self.advance()
        self.expect_ident("a class name")
        self.expect("{")
        members = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self.fail("'}'")
            members.append(self.parse_member())
        close = self.expect("}")
        span = _merge(self.span_of(start), self.span_of(close))
        return _Node(NodeKind.CLASS_DECL, None, members, span)

    def parse_member(self) -> _Node:
        start = self.peek()
        type_span = self.parse_type()
        self.expect_ident("a member name")
        if self.at("("):
            return self.parse_method_rest(start)
        return self.parse_field_rest(start)

    def parse_method_rest(self, start: Token) -> _Node:
        self.expect("(")
        params: list[_Node] = []
        if not self.at(")"):
            params.append(self.parse_param())
            while self.at(","):
                self.advance()
                params.append(self.parse_param())
        self.expect(")")
        body = self.parse_block()
        span = _merge(self.span_of(start), body.span)
        return _Node(NodeKind.METHOD_DECL, None, params + [body], span)

    def parse_field_rest(self, start: Token) -> _Node:
        children = []
        if self.at("="):
            self.advance()
            children.append(self.parse_expr())
        semi = self.expect(";")
        span = _merge(self.span_of(start), self.span_of(semi))
        return _Node(NodeKind.FIELD_DECL, None, children, span)

    def parse_param(self) -> _Node:
        start = self.peek()
        self.parse_type()
        name = self.expect_ident("a parameter name")
        span = _merge(self.span_of(start), self.span_of(name))
        return _Node(NodeKind.PARAM, None, [], span)

    def parse_block(self) -> _Node:
        open_tok = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self.fail("'}'")
            stmts.append(self.parse_stmt())
        close = self.expect("}")
        return _Node(NodeKind.BLOCK, None, stmts, _merge(self.span_of(open_tok), self.span_of(close)))

    def _starts_var_decl(self) -> bool:
        if self.peek().kind != "ident":
            return False
        nxt = self.peek(1)
        if nxt.kind == "ident":
            return True
        return nxt.kind == "punct" and nxt.text == "[" and self.peek(2).kind == "punct" and self.peek(2).text == "]"

    def parse_stmt(self) -> _Node:
        if self.at("{"):
            return self.parse_block()
        if self.at("if"):
            return self.parse_if()
        if self.at("while"):
            return self.parse_while()
        if self.at("for"):
            return self.parse_for()
        if self.at("return"):
            return self.parse_return()
        if self._starts_var_decl():
            return self.parse_var_decl()
        return self.parse_expr_stmt()

    def parse_if(self) -> _Node:
        start = self.advance()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_stmt()
        children = [cond, then]
        span = _merge(self.span_of(start), then.span)
        if self.at("else"):
            self.advance()
            other = self.parse_stmt()
            children.append(other)
            span = _merge(span, other.span)
        return _Node(NodeKind.IF, None, children, span)

    def parse_while(self) -> _Node:
        start = self.advance()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        body = self.parse_stmt()
        return _Node(NodeKind.WHILE, None, [cond, body], _merge(self.span_of(start), body.span))

    def parse_for(self) -> _Node:
        start = self.advance()
        self.expect("(")
        children: list[_Node] = []
        if self.at(";"):
            self.advance()
        elif self._starts_var_decl():
            children.append(self.parse_var_decl())
        else:
            children.append(self.parse_expr_stmt())
        if not self.at(";"):
            children.append(self.parse_expr())
        self.expect(";")
        if not self.at(")"):
            children.append(self.parse_expr())
        self.expect(")")
        body = self.parse_stmt()
        children.append(body)
        return _Node(NodeKind.FOR, None, children, _merge(self.span_of(start), body.span))

    def parse_return(self) -> _Node:
        start = self.advance()
        children = []
        if not self.at(";"):
            children.append(self.parse_expr())
        semi = self.expect(";")
        return _Node(NodeKind.RETURN, None, children, _merge(self.span_of(start), self.span_of(semi)))

    def parse_var_decl(self) -> _Node:
        start = self.peek()
        self.parse_type()
        self.expect_ident("a variable name")
        children = []
        if self.at("="):
            self.advance()
            children.append(self.parse_expr())
        semi = self.expect(";")
        return _Node(NodeKind.VAR_DECL, None, children, _merge(self.span_of(start), self.span_of(semi)))

    def parse_expr_stmt(self) -> _Node:
        start = self.peek()
        expr = self.parse_expr()
        semi = self.expect(";")
        return _Node(NodeKind.EXPR_STMT, None, [expr], _merge(self.span_of(start), self.span_of(semi)))

    # expressions, lowest precedence first
    def parse_expr(self) -> _Node:
        return self.parse_assignment()

    def parse_assignment(self) -> _Node:
        left = self.parse_or()
        if self.at("="):
            self.advance()
            right = self.parse_assignment()
            return _Node(NodeKind.ASSIGN, "=", [left, right], _merge(left.span, right.span))
        return left

    def _binary_chain(self, ops: tuple[str, ...], parse_next) -> _Node:
        node = parse_next()
        while self.peek().kind == "punct" and self.peek().text in ops:
            op = self.advance()
            right = parse_next()
            node = _Node(NodeKind.BINARY, op.text, [node, right], _merge(node.span, right.span))
        return node

    def parse_or(self) -> _Node:
        return self._binary_chain(("||",), self.parse_and)

    def parse_and(self) -> _Node:
        return self._binary_chain(("&&",), self.parse_equality)

    def parse_equality(self) -> _Node:
        return self._binary_chain(("==", "!="), self.parse_relational)

    def parse_relational(self) -> _Node:
        return self._binary_chain(("<", "<=", ">", ">="), self.parse_additive)

    def parse_additive(self) -> _Node:
        return self._binary_chain(("+", "-"), self.parse_multiplicative)

    def parse_multiplicative(self) -> _Node:
        return self._binary_chain(("*", "/", "%"), self.parse_unary)

    def parse_unary(self) -> _Node:
        if self.peek().kind == "punct" and self.peek().text in ("!", "-"):
            op = self.advance()
            operand = self.parse_unary()
            return _Node(NodeKind.UNARY, op.text, [operand], _merge(self.span_of(op), operand.span))
        return self.parse_postfix()

    def parse_postfix(self) -> _Node:
        node = self.parse_primary()
        while True:
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.parse_expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.parse_expr())
                close = self.expect(")")
                node = _Node(NodeKind.CALL, None, [node] + args, _merge(node.span, self.span_of(close)))
            elif self.at("."):
                self.advance()
                name = self.expect_ident("a field name")
                field = _Node(NodeKind.IDENTIFIER, name.text, [], self.span_of(name))
                node = _Node(NodeKind.FIELD_ACCESS, None, [node, field], _merge(node.span, field.span))
            elif self.at("["):
                self.advance()
                index = self.parse_expr()
                close = self.expect("]")
                node = _Node(NodeKind.INDEX, None, [node, index], _merge(node.span, self.span_of(close)))
            else:
                return node

    def parse_primary(self) -> _Node:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            return _Node(NodeKind.IDENTIFIER, tok.text, [], self.span_of(tok))
        if tok.kind in ("number", "string", "literal"):
            self.advance()
            return _Node(NodeKind.LITERAL, tok.text, [], self.span_of(tok))
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        self.fail("an expression")


def _file_span(content: str) -> Span:
    if content == "":
        return Span(1, 1, 1, 1)
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    last = lines[-1] if lines else ""
    return Span(1, 1, max(1, len(lines)), max(1, len(last)))


def parse_source(content: str, file_path: str = "<memory>", revision_index: int = 0) -> AstGraph:
    """Parse MiniJ source into an AstGraph with dense pre-order node ids."""
    tokens = tokenize_source(content)
    parser = _Parser(tokens)
    classes = parser.parse_program()
    root = _Node(NodeKind.COMPILATION_UNIT, None, classes, _file_span(content))

    nodes: list[AstNode] = []
    edges: list[AstEdge] = []

    def flatten(node: _Node) -> int:
        nid = len(nodes)
        nodes.append(AstNode(nid, node.kind, node.token, node.span))
        child_ids = [flatten(c) for c in node.children]
        for cid in child_ids:
            edges.append(AstEdge(nid, cid, EdgeKind.CHILD))
        for a, b in zip(child_ids, child_ids[1:]):
            edges.append(AstEdge(a, b, EdgeKind.NEXT_SIBLING))
        return nid

    flatten(root)
    return AstGraph(file_path=file_path, revision_index=revision_index,
                    nodes=tuple(nodes), edges=tuple(edges))


# --- graph utilities ----------------------------------------------------------

def node_span_cover(graph: AstGraph, line_start: int, line_end: int) -> int:
    """Id of the node with the smallest line span fully covering the range.

    Ties go to the deepest node, then the lowest id; falls back to the root
    when no node covers the range. Raises OutOfRange when line_start exceeds
    the file length (the root span's last line).
    """
    if line_start < 1 or line_start > line_end:
        raise OutOfRange(f"bad line range {line_start}..{line_end}")
    root = graph.nodes[0]
    if line_start > root.span.line_end:
        raise OutOfRange(f"line {line_start} beyond end of file ({root.span.line_end} lines)")
    depth = graph.depths()
    best: tuple[int, int, int] | None = None
    best_id = 0
    for n in graph.nodes:
        if n.span.covers_lines(line_start, line_end):
            key = (n.span.line_size, -depth[n.id], n.id)
            if best is None or key < best:
                best = key
                best_id = n.id
    return best_id


def to_adjacency(
    graph: AstGraph,
    edge_kinds: set[EdgeKind] | None = None,
    symmetric: bool = True,
    self_loops: bool = True,
) -> list[tuple[int, int, int]]:
    """Sparse adjacency entries (i, j, 1), deduplicated and sorted."""
    if edge_kinds is None:
        edge_kinds = {EdgeKind.CHILD, EdgeKind.NEXT_SIBLING}
    entries: set[tuple[int, int]] = set()
    for e in graph.edges:
        if e.kind in edge_kinds:
            entries.add((e.src, e.dst))
            if symmetric:
                entries.add((e.dst, e.src))
    if self_loops:
        entries.update((n.id, n.id) for n in graph.nodes)
    return [(i, j, 1) for i, j in sorted(entries)]


def validate_graph(graph: AstGraph) -> None:
    """Structural sanity checks; raises ValueError on violations."""
    nodes = graph.nodes
    if not nodes or nodes[0].kind is not NodeKind.COMPILATION_UNIT:
        raise ValueError("graph must have a COMPILATION_UNIT root with id 0")
    for i, n in enumerate(nodes):
        if n.id != i:
            raise ValueError(f"node ids must be dense 0..n-1, got {n.id} at position {i}")
        has_token = n.token is not None
        if has_token != (n.kind in TOKEN_KINDS):
            raise ValueError(f"node {n.id} ({n.kind.value}): token presence violates kind rule")
    parent = graph.parents()
    roots = [n.id for n in nodes if parent[n.id] is None]
    if roots != [0]:
        raise ValueError(f"CHILD edges must form a single tree rooted at 0, roots={roots}")
    for e in graph.edges:
        if e.kind is EdgeKind.CHILD:
            if e.src >= e.dst:
                raise ValueError(f"CHILD edge ({e.src},{e.dst}) violates pre-order ids")
            if not nodes[e.src].span.contains(nodes[e.dst].span):
                raise ValueError(f"child {e.dst} span escapes parent {e.src} span")
    children = graph.children()
    sibling_pairs = {(e.src, e.dst) for e in graph.edges if e.kind is EdgeKind.NEXT_SIBLING}
    expected = set()
    for kids in children.values():
        expected.update(zip(kids, kids[1:]))
    if sibling_pairs != expected:
        raise ValueError("NEXT_SIBLING edges must link consecutive children of the same parent")


# --- serialization --------------------------------------------------------------

def graph_to_json(graph: AstGraph) -> dict:
    return {
        "file_path": graph.file_path,
        "revision_index": graph.revision_index,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "token": n.token,
                "span": {
                    "line_start": n.span.line_start,
                    "col_start": n.span.col_start,
                    "line_end": n.span.line_end,
                    "col_end": n.span.col_end,
                },
            }
            for n in graph.nodes
        ],
        "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind.value} for e in graph.edges],
    }


def graph_from_json(obj: dict) -> AstGraph:
    nodes = tuple(
        AstNode(
            id=int(n["id"]),
            kind=NodeKind(n["kind"]),
            token=n.get("token"),
            span=Span(
                int(n["span"]["line_start"]),
                int(n["span"]["col_start"]),
                int(n["span"]["line_end"]),
                int(n["span"]["col_end"]),
            ),
        )
        for n in obj["nodes"]
    )
    edges = tuple(
        AstEdge(int(e["src"]), int(e["dst"]), EdgeKind(e["kind"])) for e in obj["edges"]
    )
    graph = AstGraph(
        file_path=obj["file_path"],
        revision_index=int(obj["revision_index"]),
        nodes=nodes,
        edges=edges,
    )
    validate_graph(graph)
    return graph
