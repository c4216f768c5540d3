"""Unified-diff parsing, application, and generation.

Hunks operate on newline-terminated text. A ``"\\ No newline at end of
file"`` marker in the input is tolerated and normalized away: the marked
line is treated as if it were newline-terminated.
"""

from __future__ import annotations

import difflib
import enum
import re
from dataclasses import dataclass

from .errors import HunkMismatch, MalformedDiff

_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
_NO_EOL = "\\ No newline at end of file"


class Origin(enum.Enum):
    CONTEXT = "CONTEXT"
    ADDED = "ADDED"
    REMOVED = "REMOVED"


@dataclass(frozen=True)
class DiffLine:
    origin: Origin
    text: str


@dataclass(frozen=True)
class ChangeHunk:
    """One contiguous block of a unified diff.

    Counters are 1-based per the unified-diff header convention; a zero
    old_len means "insert after old line old_start".
    """

    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: tuple[DiffLine, ...]

    def validate(self) -> None:
        n_ctx = sum(1 for l in self.lines if l.origin is Origin.CONTEXT)
        n_add = sum(1 for l in self.lines if l.origin is Origin.ADDED)
        n_rem = sum(1 for l in self.lines if l.origin is Origin.REMOVED)
        if n_ctx + n_add != self.new_len:
            raise MalformedDiff(0, f"new_len {self.new_len} != context+added {n_ctx + n_add}")
        if n_ctx + n_rem != self.old_len:
            raise MalformedDiff(0, f"old_len {self.old_len} != context+removed {n_ctx + n_rem}")


def _split_lines(content: str) -> list[str]:
    """Split newline-terminated content into lines without terminators."""
    if content == "":
        return []
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _join_lines(lines: list[str]) -> str:
    return "".join(line + "\n" for line in lines)


def parse_unified_diff(text: str) -> list[ChangeHunk]:
    """Parse the hunks of a single-file unified diff.

    ``---``/``+++`` file headers are skipped; hunk order is preserved.
    Raises MalformedDiff on bad headers or line-count mismatches.
    """
    hunks: list[ChangeHunk] = []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- ") or line.startswith("+++ ") or line == "":
            i += 1
            continue
        m = _HUNK_HEADER.match(line)
        if not m:
            raise MalformedDiff(i + 1, f"expected hunk header, got {line!r}")
        old_start = int(m.group(1))
        old_len = int(m.group(2)) if m.group(2) is not None else 1
        new_start = int(m.group(3))
        new_len = int(m.group(4)) if m.group(4) is not None else 1
        i += 1
        body: list[DiffLine] = []
        n_old = n_new = 0
        while i < len(lines) and (n_old < old_len or n_new < new_len):
            raw = lines[i]
            if raw == _NO_EOL:
                i += 1
                continue
            if raw == "":
                # some tools emit a bare empty line for an empty context line
                origin, payload = Origin.CONTEXT, ""
            else:
                tag, payload = raw[0], raw[1:]
                if tag == " ":
                    origin = Origin.CONTEXT
                elif tag == "+":
                    origin = Origin.ADDED
                elif tag == "-":
                    origin = Origin.REMOVED
                else:
                    raise MalformedDiff(i + 1, f"unexpected diff line {raw!r}")
            if origin in (Origin.CONTEXT, Origin.REMOVED):
                n_old += 1
            if origin in (Origin.CONTEXT, Origin.ADDED):
                n_new += 1
            body.append(DiffLine(origin, payload))
            i += 1
        if n_old != old_len or n_new != new_len:
            raise MalformedDiff(i, f"hunk body has {n_old}/{n_new} lines, header says {old_len}/{new_len}")
        # swallow a trailing no-newline marker belonging to this hunk
        if i < len(lines) and lines[i] == _NO_EOL:
            i += 1
        hunk = ChangeHunk(old_start, old_len, new_start, new_len, tuple(body))
        hunk.validate()
        hunks.append(hunk)
    return hunks


def format_unified_diff(hunks: list[ChangeHunk]) -> str:
    """Serialize hunks back to unified-diff text (headers only, no file names)."""
    out: list[str] = []
    for h in hunks:
        out.append(f"@@ -{h.old_start},{h.old_len} +{h.new_start},{h.new_len} @@")
        for dl in h.lines:
            tag = {Origin.CONTEXT: " ", Origin.ADDED: "+", Origin.REMOVED: "-"}[dl.origin]
            out.append(tag + dl.text)
    return _join_lines(out)


def apply_hunks(old_content: str, hunks: list[ChangeHunk]) -> str:
    """Apply hunks to old_content and return the new content.

    Raises HunkMismatch when a context or removed line disagrees with the
    old content.
    """
    if not hunks:
        return old_content
    old_lines = _split_lines(old_content)
    new_lines: list[str] = []
    cursor = 0  # 0-based index into old_lines of the next uncopied line
    for idx, h in enumerate(hunks):
        # a zero-length old side means "insert after line old_start"
        start = h.old_start - 1 if h.old_len > 0 else h.old_start
        if start < cursor or start > len(old_lines):
            raise HunkMismatch(idx, f"hunk starts at old line {h.old_start}, cursor at {cursor + 1}")
        new_lines.extend(old_lines[cursor:start])
        cursor = start
        for dl in h.lines:
            if dl.origin is Origin.ADDED:
                new_lines.append(dl.text)
                continue
            if cursor >= len(old_lines):
                raise HunkMismatch(idx, "hunk extends past end of file")
            if old_lines[cursor] != dl.text:
                raise HunkMismatch(idx, f"old line {cursor + 1} is {old_lines[cursor]!r}, diff expects {dl.text!r}")
            if dl.origin is Origin.CONTEXT:
                new_lines.append(dl.text)
            cursor += 1
    new_lines.extend(old_lines[cursor:])
    return _join_lines(new_lines)


def diff_contents(old_content: str, new_content: str, context: int = 3) -> list[ChangeHunk]:
    """Compute hunks turning old_content into new_content (difflib-backed)."""
    old_lines = _split_lines(old_content)
    new_lines = _split_lines(new_content)
    matcher = difflib.SequenceMatcher(a=old_lines, b=new_lines, autojunk=False)
    hunks: list[ChangeHunk] = []
    for group in matcher.get_grouped_opcodes(context):
        first, last = group[0], group[-1]
        old_start, old_len = first[1] + 1, last[2] - first[1]
        new_start, new_len = first[3] + 1, last[4] - first[3]
        if old_len == 0:
            old_start -= 1  # unified-diff convention for pure insertions
        if new_len == 0:
            new_start -= 1
        body: list[DiffLine] = []
        for tag, i1, i2, j1, j2 in group:
            if tag == "equal":
                body.extend(DiffLine(Origin.CONTEXT, t) for t in old_lines[i1:i2])
            else:
                body.extend(DiffLine(Origin.REMOVED, t) for t in old_lines[i1:i2])
                body.extend(DiffLine(Origin.ADDED, t) for t in new_lines[j1:j2])
        hunk = ChangeHunk(old_start, old_len, new_start, new_len, tuple(body))
        hunk.validate()
        hunks.append(hunk)
    return hunks


def hunk_line_map(old_line_count: int, hunks: list[ChangeHunk]) -> dict[int, int | None]:
    """Map each 1-based old line number to its new line number.

    Lines marked REMOVED map to None. Lines outside all hunks shift by the
    accumulated length delta.
    """
    mapping: dict[int, int | None] = {}
    old_pos = 1
    new_pos = 1
    for h in hunks:
        boundary = h.old_start if h.old_len > 0 else h.old_start + 1
        while old_pos < boundary:
            mapping[old_pos] = new_pos
            old_pos += 1
            new_pos += 1
        for dl in h.lines:
            if dl.origin is Origin.CONTEXT:
                mapping[old_pos] = new_pos
                old_pos += 1
                new_pos += 1
            elif dl.origin is Origin.REMOVED:
                mapping[old_pos] = None
                old_pos += 1
            else:
                new_pos += 1
    while old_pos <= old_line_count:
        mapping[old_pos] = new_pos
        old_pos += 1
        new_pos += 1
    return mapping
