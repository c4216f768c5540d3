"""Exception types shared across the package.

Every domain error derives from McrGraphError so the CLI can map any of
them to exit code 1 with a structured message.
"""

from __future__ import annotations


class McrGraphError(Exception):
    """Base class for all domain errors raised by this package."""


# --- corpus / diff errors ---------------------------------------------------

class MalformedDiff(McrGraphError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"malformed diff at line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class HunkMismatch(McrGraphError):
    def __init__(self, hunk_index: int, detail: str = ""):
        msg = f"hunk {hunk_index} does not apply"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.hunk_index = hunk_index


class SchemaError(McrGraphError):
    def __init__(self, record: str, field: str, reason: str):
        super().__init__(f"{record}: field '{field}': {reason}")
        self.record = record
        self.field = field
        self.reason = reason


class UnmappableRecord(McrGraphError):
    """A provider-export record that cannot be converted; skipped and logged."""

    def __init__(self, record_id: str, reason: str):
        super().__init__(f"record {record_id}: {reason}")
        self.record_id = record_id
        self.reason = reason


class UnknownRevision(McrGraphError):
    def __init__(self, file_path: str, revision_index: int):
        super().__init__(f"no revision {revision_index} for {file_path}")
        self.file_path = file_path
        self.revision_index = revision_index


# --- parser / graph errors --------------------------------------------------

class MiniJSyntaxError(McrGraphError):
    """First syntax error in a MiniJ source file; no recovery is attempted."""

    def __init__(self, line: int, col: int, expected: str, found: str):
        super().__init__(f"line {line}, col {col}: expected {expected}, found {found}")
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


class OutOfRange(McrGraphError):
    pass


# --- labeling errors ----------------------------------------------------------

class RevisionMismatch(McrGraphError):
    pass


# --- numeric / training errors ----------------------------------------------

class DimensionMismatch(McrGraphError):
    pass


class GraphDetached(McrGraphError):
    """backward() was called on a value with no recorded lineage."""


class EmptyMask(McrGraphError):
    pass


class EmptyDataset(McrGraphError):
    pass


# --- evaluation / reporting errors -------------------------------------------

class EmptyInput(McrGraphError):
    pass


class SingleClassAuc(McrGraphError):
    """ROC-AUC is undefined when only one class is present."""


class ConfigMismatch(McrGraphError):
    pass
