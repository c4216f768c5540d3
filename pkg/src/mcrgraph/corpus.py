"""Review-corpus data model, ingestion, validation, and revision tracking.

The on-disk corpus format is UTF-8 JSON lines: a header object carrying
``schema_version`` followed by one pull request per line. See
docs/formats.md for the exact field layout and docs/ingestion.md for the
provider-export mapping consumed by :func:`normalize_export`.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable

from .diffs import (
    ChangeHunk,
    DiffLine,
    Origin,
    apply_hunks,
    diff_contents,
    hunk_line_map,
)
from .errors import MalformedDiff, SchemaError, UnknownRevision, UnmappableRecord

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


# --- timestamps ---------------------------------------------------------------

def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_rfc3339(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


# --- domain types --------------------------------------------------------------

@dataclass(frozen=True)
class ReviewComment:
    id: str
    pr_id: str
    file_path: str
    revision_index: int
    line_start: int  # 1-based inclusive, new-file coordinates
    line_end: int
    body: str
    author: str  # pseudonymized
    created_at: datetime
    thread_id: str
    reply_to: str | None = None
    topic_override: str | None = None  # human meta-topic label; wins over the keyword rule


@dataclass(frozen=True)
class FileRevision:
    pr_id: str
    file_path: str
    revision_index: int
    content: str
    hunks: tuple[ChangeHunk, ...] = ()  # diff versus previous revision; empty for index 0


@dataclass(frozen=True)
class PullRequest:
    id: str
    repo: str
    created_at: datetime
    merged: bool
    revisions: tuple[FileRevision, ...] = ()
    comments: tuple[ReviewComment, ...] = ()

    def file_paths(self) -> list[str]:
        return sorted({r.file_path for r in self.revisions})


@dataclass(frozen=True)
class ReviewCorpus:
    schema_version: int = SCHEMA_VERSION
    pull_requests: tuple[PullRequest, ...] = ()


def line_count(content: str) -> int:
    """Number of lines in newline-terminated content; an empty file has 0."""
    if content == "":
        return 0
    return content.count("\n") + (0 if content.endswith("\n") else 1)


def revisions_of(pr: PullRequest, file_path: str) -> list[FileRevision]:
    return sorted(
        (r for r in pr.revisions if r.file_path == file_path),
        key=lambda r: r.revision_index,
    )


# --- serialization --------------------------------------------------------------

def _hunk_to_json(h: ChangeHunk) -> dict:
    return {
        "old_start": h.old_start,
        "old_len": h.old_len,
        "new_start": h.new_start,
        "new_len": h.new_len,
        "lines": [{"origin": dl.origin.value, "text": dl.text} for dl in h.lines],
    }


def _hunk_from_json(obj: dict, where: str) -> ChangeHunk:
    try:
        lines = tuple(DiffLine(Origin(l["origin"]), l["text"]) for l in obj["lines"])
        hunk = ChangeHunk(
            int(obj["old_start"]), int(obj["old_len"]),
            int(obj["new_start"]), int(obj["new_len"]), lines,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(where, "hunks", f"bad hunk object: {exc}") from exc
    try:
        hunk.validate()
    except MalformedDiff as exc:
        raise SchemaError(where, "hunks", str(exc)) from exc
    return hunk


def pull_request_to_json(pr: PullRequest) -> dict:
    return {
        "id": pr.id,
        "repo": pr.repo,
        "created_at": format_rfc3339(pr.created_at),
        "merged": pr.merged,
        "revisions": [
            {
                "pr_id": r.pr_id,
                "file_path": r.file_path,
                "revision_index": r.revision_index,
                "content": r.content,
                "hunks": [_hunk_to_json(h) for h in r.hunks],
            }
            for r in pr.revisions
        ],
        "comments": [
            {
                "id": c.id,
                "pr_id": c.pr_id,
                "file_path": c.file_path,
                "revision_index": c.revision_index,
                "line_start": c.line_start,
                "line_end": c.line_end,
                "body": c.body,
                "author": c.author,
                "created_at": format_rfc3339(c.created_at),
                "thread_id": c.thread_id,
                "reply_to": c.reply_to,
                **({"topic_override": c.topic_override} if c.topic_override is not None else {}),
            }
            for c in pr.comments
        ],
    }


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(where, key, "missing field")
    return obj[key]


def _parse_ts(value, where: str, fld: str) -> datetime:
    try:
        return parse_rfc3339(str(value))
    except ValueError as exc:
        raise SchemaError(where, fld, f"bad timestamp {value!r}") from exc


def pull_request_from_json(obj: dict, where: str) -> PullRequest:
    pr_id = str(_require(obj, "id", where))
    revisions = []
    for i, rv in enumerate(obj.get("revisions", [])):
        rwhere = f"{where} revisions[{i}]"
        revisions.append(
            FileRevision(
                pr_id=str(rv.get("pr_id", pr_id)),
                file_path=str(_require(rv, "file_path", rwhere)),
                revision_index=int(_require(rv, "revision_index", rwhere)),
                content=str(_require(rv, "content", rwhere)),
                hunks=tuple(_hunk_from_json(h, rwhere) for h in rv.get("hunks", [])),
            )
        )
    comments = []
    for i, cm in enumerate(obj.get("comments", [])):
        cwhere = f"{where} comments[{i}]"
        comments.append(
            ReviewComment(
                id=str(_require(cm, "id", cwhere)),
                pr_id=str(cm.get("pr_id", pr_id)),
                file_path=str(_require(cm, "file_path", cwhere)),
                revision_index=int(_require(cm, "revision_index", cwhere)),
                line_start=int(_require(cm, "line_start", cwhere)),
                line_end=int(_require(cm, "line_end", cwhere)),
                body=str(_require(cm, "body", cwhere)),
                author=str(_require(cm, "author", cwhere)),
                created_at=_parse_ts(_require(cm, "created_at", cwhere), cwhere, "created_at"),
                thread_id=str(_require(cm, "thread_id", cwhere)),
                reply_to=(str(cm["reply_to"]) if cm.get("reply_to") is not None else None),
                topic_override=(str(cm["topic_override"])
                                if cm.get("topic_override") is not None else None),
            )
        )
    return PullRequest(
        id=pr_id,
        repo=str(_require(obj, "repo", where)),
        created_at=_parse_ts(_require(obj, "created_at", where), where, "created_at"),
        merged=bool(_require(obj, "merged", where)),
        revisions=tuple(revisions),
        comments=tuple(comments),
    )


def validate_corpus(corpus: ReviewCorpus) -> None:
    """Check every corpus invariant; raise SchemaError with a record locator."""
    if corpus.schema_version != SCHEMA_VERSION:
        raise SchemaError("header", "schema_version",
                          f"unsupported version {corpus.schema_version}, expected {SCHEMA_VERSION}")
    seen_ids: set[str] = set()
    for pr in corpus.pull_requests:
        where = f"pr {pr.id}"
        if pr.id in seen_ids:
            raise SchemaError(where, "id", "duplicate id")
        seen_ids.add(pr.id)
        by_file: dict[str, list[FileRevision]] = {}
        for r in pr.revisions:
            if r.pr_id != pr.id:
                raise SchemaError(where, "revisions.pr_id", f"{r.pr_id!r} != {pr.id!r}")
            by_file.setdefault(r.file_path, []).append(r)
        for path, revs in by_file.items():
            revs.sort(key=lambda r: r.revision_index)
            for expect, r in enumerate(revs):
                rwhere = f"{where} {path}@{r.revision_index}"
                if r.revision_index != expect:
                    raise SchemaError(rwhere, "revision_index",
                                      f"indices must be 0-based and gap-free, expected {expect}")
                if expect == 0:
                    if r.hunks:
                        raise SchemaError(rwhere, "hunks", "revision 0 must have no hunks")
                else:
                    try:
                        rebuilt = apply_hunks(revs[expect - 1].content, list(r.hunks))
                    except Exception as exc:
                        raise SchemaError(rwhere, "hunks", f"hunks do not apply: {exc}") from exc
                    if rebuilt != r.content:
                        raise SchemaError(rwhere, "content",
                                          "applying hunks to previous revision does not reproduce content")
        threads: dict[str, list[ReviewComment]] = {}
        for c in pr.comments:
            cwhere = f"{where} comment {c.id}"
            if c.id in seen_ids:
                raise SchemaError(cwhere, "id", "duplicate id")
            seen_ids.add(c.id)
            if c.pr_id != pr.id:
                raise SchemaError(cwhere, "pr_id", f"{c.pr_id!r} != {pr.id!r}")
            if c.line_start > c.line_end:
                raise SchemaError(cwhere, "line_start", f"line_start {c.line_start} > line_end {c.line_end}")
            if c.line_start < 1:
                raise SchemaError(cwhere, "line_start", "lines are 1-based")
            revs = by_file.get(c.file_path, [])
            if not any(r.revision_index == c.revision_index for r in revs):
                raise SchemaError(cwhere, "revision_index",
                                  f"no revision {c.revision_index} of {c.file_path} in this pull request")
            threads.setdefault(c.thread_id, []).append(c)
        for tid, members in threads.items():
            by_id = {c.id: c for c in members}
            for c in members:
                if c.reply_to is None:
                    continue
                cwhere = f"{where} comment {c.id}"
                parent = by_id.get(c.reply_to)
                if parent is None:
                    raise SchemaError(cwhere, "reply_to", f"{c.reply_to!r} not found in thread {tid!r}")
                if not parent.created_at < c.created_at:
                    raise SchemaError(cwhere, "reply_to", "replies must be later than their parent")


def load_corpus(path) -> ReviewCorpus:
    """Load and validate a JSON-lines corpus file."""
    prs: list[PullRequest] = []
    schema_version = SCHEMA_VERSION
    with open(path, encoding="utf-8") as fh:
        line_no = 0
        saw_header = False
        for raw in fh:
            line_no += 1
            raw = raw.strip()
            if not raw:
                continue
            where = f"line {line_no}"
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(where, "-", f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise SchemaError(where, "-", "each record must be a JSON object")
            if not saw_header:
                saw_header = True
                if "schema_version" in obj and "id" not in obj:
                    schema_version = int(obj["schema_version"])
                    if schema_version != SCHEMA_VERSION:
                        raise SchemaError(where, "schema_version",
                                          f"unsupported version {schema_version}, expected {SCHEMA_VERSION}")
                    continue
                # header is optional for version-current files
            prs.append(pull_request_from_json(obj, f"{where} (pr {obj.get('id', '?')})"))
    corpus = ReviewCorpus(schema_version=schema_version, pull_requests=tuple(prs))
    validate_corpus(corpus)
    return corpus


def save_corpus(corpus: ReviewCorpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema_version": corpus.schema_version}) + "\n")
        for pr in corpus.pull_requests:
            fh.write(json.dumps(pull_request_to_json(pr), sort_keys=True) + "\n")


# --- provider-export ingestion ---------------------------------------------------

def pseudonymize(login: str, salt: str) -> str:
    """Salted 64-bit hash of an author login; raw logins are never stored."""
    digest = hashlib.blake2b(f"{salt}:{login}".encode("utf-8"), digest_size=8)
    return digest.hexdigest()


def normalize_export(
    raw_records: Iterable[dict], salt: str = ""
) -> tuple[ReviewCorpus, list[UnmappableRecord]]:
    """Convert provider-export records into a validated ReviewCorpus.

    Unmappable records are skipped, logged, and returned; they are never
    silently dropped. See docs/ingestion.md for the mapping table.
    """
    skipped: list[UnmappableRecord] = []

    def skip(record_id: str, reason: str) -> None:
        err = UnmappableRecord(record_id, reason)
        skipped.append(err)
        log.warning("skipping export record %s: %s", record_id, reason)

    prs: dict[str, dict] = {}  # number -> {"id","repo","created_at","merged"}
    snapshots: dict[tuple[str, str], dict[int, str]] = {}  # (number, path) -> ordinal -> content
    comments: list[dict] = []

    records = list(raw_records)
    for rec in records:
        if not isinstance(rec, dict):
            skip("?", "record is not an object")
            continue
        kind = rec.get("record_type")
        if kind != "pull_request":
            continue
        number = rec.get("number")
        repo = rec.get("repository")
        if number is None or repo is None:
            skip(str(rec.get("number", "?")), "pull_request record needs number and repository")
            continue
        number = str(number)
        if number in prs:
            skip(number, "duplicate pull_request number")
            continue
        try:
            created = parse_rfc3339(str(rec.get("created_at")))
        except (ValueError, TypeError):
            skip(number, f"bad created_at {rec.get('created_at')!r}")
            continue
        prs[number] = {
            "id": f"{repo}#{number}",
            "repo": str(repo),
            "created_at": created,
            "merged": bool(rec.get("merged", False)),
        }

    for rec in records:
        if not isinstance(rec, dict):
            continue
        kind = rec.get("record_type")
        if kind == "file_snapshot":
            rid = f"snapshot {rec.get('path', '?')}@{rec.get('ordinal', '?')}"
            number = str(rec.get("pull_request"))
            if number not in prs:
                skip(rid, f"unknown pull_request {number!r}")
                continue
            path = rec.get("path")
            content = rec.get("content")
            ordinal = rec.get("ordinal")
            if path is None or content is None or ordinal is None:
                skip(rid, "file_snapshot record needs path, ordinal, and content")
                continue
            store = snapshots.setdefault((number, str(path)), {})
            if int(ordinal) in store:
                skip(rid, "duplicate ordinal for this file")
                continue
            store[int(ordinal)] = str(content)
        elif kind == "review_comment":
            rid = f"comment {rec.get('comment_id', '?')}"
            if rec.get("comment_id") is None:
                skip(rid, "review_comment record needs comment_id")
                continue
            number = str(rec.get("pull_request"))
            if number not in prs:
                skip(rid, f"unknown pull_request {number!r}")
                continue
            if rec.get("path") is None:
                skip(rid, "missing file path")
                continue
            required = ("ordinal", "line", "body", "user", "created_at")
            missing = [k for k in required if rec.get(k) is None]
            if missing:
                skip(rid, f"missing fields: {', '.join(missing)}")
                continue
            try:
                created = parse_rfc3339(str(rec["created_at"]))
            except ValueError:
                skip(rid, f"bad created_at {rec['created_at']!r}")
                continue
            line = int(rec["line"])
            end_line = int(rec.get("end_line", line))
            if line < 1 or end_line < line:
                skip(rid, f"bad line range {line}..{end_line}")
                continue
            comments.append(
                {
                    "rid": rid,
                    "number": number,
                    "comment_id": str(rec["comment_id"]),
                    "path": str(rec["path"]),
                    "ordinal": int(rec["ordinal"]),
                    "line": line,
                    "end_line": end_line,
                    "body": str(rec["body"]),
                    "user": str(rec["user"]),
                    "created_at": created,
                    "thread_key": str(rec.get("thread_key") or rec["comment_id"]),
                }
            )
        elif kind == "pull_request":
            pass
        else:
            skip(str(rec.get("comment_id") or rec.get("number") or "?"),
                 f"unknown record_type {kind!r}")

    # compact ordinals to dense revision indices and compute hunks
    rev_index: dict[tuple[str, str], dict[int, int]] = {}
    revisions_by_pr: dict[str, list[FileRevision]] = {n: [] for n in prs}
    for (number, path), by_ordinal in sorted(snapshots.items()):
        pr_id = prs[number]["id"]
        ordered = sorted(by_ordinal.items())
        rev_index[(number, path)] = {ordinal: idx for idx, (ordinal, _) in enumerate(ordered)}
        prev: str | None = None
        for idx, (_, content) in enumerate(ordered):
            hunks = () if prev is None else tuple(diff_contents(prev, content))
            revisions_by_pr[number].append(
                FileRevision(pr_id=pr_id, file_path=path, revision_index=idx,
                             content=content, hunks=hunks)
            )
            prev = content

    comments_by_pr: dict[str, list[ReviewComment]] = {n: [] for n in prs}
    by_thread: dict[tuple[str, str], list[dict]] = {}
    for cm in comments:
        idx_map = rev_index.get((cm["number"], cm["path"]), {})
        if cm["ordinal"] not in idx_map:
            skip(cm["rid"], f"no snapshot for {cm['path']}@ordinal {cm['ordinal']}")
            continue
        cm["revision_index"] = idx_map[cm["ordinal"]]
        by_thread.setdefault((cm["number"], cm["thread_key"]), []).append(cm)

    for (number, thread_key), members in sorted(by_thread.items()):
        pr_id = prs[number]["id"]
        members.sort(key=lambda c: (c["created_at"], c["comment_id"]))
        prev_id: str | None = None
        for cm in members:
            cid = f"{pr_id}:c{cm['comment_id']}"
            comments_by_pr[number].append(
                ReviewComment(
                    id=cid,
                    pr_id=pr_id,
                    file_path=cm["path"],
                    revision_index=cm["revision_index"],
                    line_start=cm["line"],
                    line_end=cm["end_line"],
                    body=cm["body"],
                    author=pseudonymize(cm["user"], salt),
                    created_at=cm["created_at"],
                    thread_id=f"{pr_id}:t{thread_key}",
                    reply_to=prev_id,
                )
            )
            prev_id = cid

    pull_requests = []
    for number in sorted(prs, key=lambda n: prs[n]["id"]):
        meta = prs[number]
        revs = sorted(revisions_by_pr[number], key=lambda r: (r.file_path, r.revision_index))
        cms = sorted(comments_by_pr[number],
                     key=lambda c: (c.file_path, c.revision_index, c.created_at, c.id))
        pull_requests.append(
            PullRequest(id=meta["id"], repo=meta["repo"], created_at=meta["created_at"],
                        merged=meta["merged"], revisions=tuple(revs), comments=tuple(cms))
        )
    corpus = ReviewCorpus(pull_requests=tuple(pull_requests))
    validate_corpus(corpus)
    return corpus, skipped


# --- change tracking --------------------------------------------------------------

def changed_lines(revision: FileRevision) -> set[int]:
    """New-file line numbers this revision changed.

    Revision 0 introduces the file, so every line counts; later revisions
    contribute their ADDED lines.
    """
    if revision.revision_index == 0:
        return set(range(1, line_count(revision.content) + 1))
    changed: set[int] = set()
    for h in revision.hunks:
        new_pos = h.new_start if h.new_len > 0 else h.new_start + 1
        for dl in h.lines:
            if dl.origin is Origin.ADDED:
                changed.add(new_pos)
                new_pos += 1
            elif dl.origin is Origin.CONTEXT:
                new_pos += 1
    return changed


def step_line_map(revisions: list[FileRevision], to_index: int) -> dict[int, int | None]:
    """Line map from revision to_index-1 to revision to_index of one file."""
    prev = revisions[to_index - 1]
    return hunk_line_map(line_count(prev.content), list(revisions[to_index].hunks))


def track_lines(
    pr: PullRequest, file_path: str, lines: set[int], from_revision: int, to_revision: int
) -> dict[int, int | None]:
    """Track new-file line numbers from one revision of a file to a later one.

    Returns a map original line -> line at to_revision, with None for lines
    removed or edited along the way.
    """
    revs = revisions_of(pr, file_path)
    indices = {r.revision_index for r in revs}
    if from_revision not in indices:
        raise UnknownRevision(file_path, from_revision)
    if to_revision not in indices:
        raise UnknownRevision(file_path, to_revision)
    result: dict[int, int | None] = {l: l for l in lines}
    for k in range(from_revision + 1, to_revision + 1):
        mapping = step_line_map(revs, k)
        for orig, cur in result.items():
            if cur is not None:
                result[orig] = mapping.get(cur)
    return result


def stability_horizon(
    pr: PullRequest, file_path: str, lines: set[int], from_revision: int
) -> int:
    """Consecutive later revisions of the file in which none of ``lines`` is
    removed or edited; counts through the final revision."""
    revs = revisions_of(pr, file_path)
    if from_revision not in {r.revision_index for r in revs}:
        raise UnknownRevision(file_path, from_revision)
    tracked = set(lines)
    horizon = 0
    last_index = revs[-1].revision_index
    for k in range(from_revision + 1, last_index + 1):
        mapping = step_line_map(revs, k)
        moved = {mapping.get(l) for l in tracked}
        if None in moved and tracked:
            break
        tracked = {l for l in moved if l is not None}
        horizon += 1
    return horizon


# --- aggregation -------------------------------------------------------------------

def corpus_stats(corpus: ReviewCorpus) -> dict:
    """Summary counts for a corpus; pure aggregation."""
    n_comments = sum(len(pr.comments) for pr in corpus.pull_requests)
    n_revisions = sum(len(pr.revisions) for pr in corpus.pull_requests)
    threads = {(pr.id, c.thread_id) for pr in corpus.pull_requests for c in pr.comments}
    histogram = Counter(len(pr.comments) for pr in corpus.pull_requests)
    return {
        "n_prs": len(corpus.pull_requests),
        "n_comments": n_comments,
        "n_revisions": n_revisions,
        "n_threads": len(threads),
        "comments_per_pr_histogram": {str(k): v for k, v in sorted(histogram.items())},
    }
