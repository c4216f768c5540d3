"""Author the hand-designed 5-PR mini corpus and freeze its oracle traces.

Outputs (under tests/data/):
  mini_export.jsonl   raw provider-export records
  mini_corpus.jsonl   normalized corpus (plus one human topic override)
  label_trace.json    node labels per (window, pr, file, revision), from the
                      independent difflib-based oracle in tests/oracles.py
  quality_trace.json  (actionability, clarity) per comment, same oracle

Rerunning regenerates everything; the script asserts the design intent
(intended topics, anchors, actionability) before freezing, so an accidental
edit to the inputs fails loudly rather than silently shifting the trace.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from mcrgraph.corpus import normalize_export, revisions_of, save_corpus  # noqa: E402
from tests.oracles import oracle_label_graph, oracle_quality, oracle_topic  # noqa: E402

DATA = ROOT / "tests" / "data"

# --- file revisions, hand-designed ------------------------------------------------

CALC_0 = """\
class Calc {
    int add(int a, int b) {
        return a + b;
    }

    int scale(int a) {
        return a * 10;
    }
}
"""
CALC_1 = CALC_0.replace("a * 10", "a * 100")

REPORT_0 = """\
class Report {
    int format(int width) {
        int pad = width + 2;
        return pad;
    }

    int header() {
        return 7;
    }
}
"""
REPORT_1 = REPORT_0.replace("width + 2", "width * 2")
REPORT_2 = REPORT_1.replace("width * 2", "width * 3")

QUEUE_0 = """\
class Queue {
    int size = 0;
    int[] items;

    int push(int value) {
        items[size] = value;
        size = size + 1;
        return size;
    }

    int peek() {
        return items[0];
    }
}
"""
QUEUE_1 = QUEUE_0.replace("items[0]", "items[size - 1]")
QUEUE_2 = QUEUE_1.replace("size + 1", "size + 2")
QUEUE_3 = QUEUE_2.replace("int size = 0", "int size = 1")

PARSER_0 = """\
class Parser {
    int depth = 0;

    int consume(int[] items, int count) {
        int total = 0;
        for (int i = 0; i < count; i = i + 1) {
            total = total + items[i];
        }
        return total;
    }

    boolean balanced(String text) {
        while (depth > 0) {
            depth = depth - 1;
        }
        return depth == 0;
    }
}
"""
PARSER_1 = PARSER_0.replace("total + items[i]", "total + read(items, i)")

MATRIX_0 = """\
class Matrix {
    int[][] cells;
    int rows;

    int at(int r, int c) {
        return cells[r][c];
    }

    int trace() {
        int acc = 0;
        int i = 0;
        while (i < rows) {
            acc = acc + cells[i][i];
            i = i + 1;
        }
        return acc;
    }

    int count() {
        return cells.length;
    }
}
"""
MATRIX_1 = MATRIX_0.replace("acc + cells[i][i]", "acc + at(i, i)")


def _pr(number: int, created: str) -> dict:
    return {"record_type": "pull_request", "number": number,
            "repository": "demo/widgets", "created_at": created, "merged": True}


def _snap(number: int, path: str, ordinal: int, content: str) -> dict:
    return {"record_type": "file_snapshot", "pull_request": number,
            "path": path, "ordinal": ordinal, "content": content}


def _comment(number: int, cid: int, path: str, ordinal: int, line: int,
             body: str, user: str, created: str, *, end_line: int | None = None,
             thread: int | None = None) -> dict:
    rec = {"record_type": "review_comment", "comment_id": cid,
           "pull_request": number, "path": path, "ordinal": ordinal,
           "line": line, "body": body, "user": user, "created_at": created}
    if end_line is not None:
        rec["end_line"] = end_line
    if thread is not None:
        rec["thread_key"] = thread
    return rec


# Non-dense snapshot ordinals on purpose (PR1, PR5): ingestion must compact them.
RECORDS = [
    _pr(1, "2025-03-01T09:00:00Z"),
    _snap(1, "Calc.minij", 3, CALC_0),
    _snap(1, "Calc.minij", 7, CALC_1),
    _comment(1, 101, "Calc.minij", 3, 3,
             "Possible null pointer if b is unset; add a guard", "alice",
             "2025-03-01T10:00:00Z"),

    _pr(2, "2025-03-02T09:00:00Z"),
    _snap(2, "Report.minij", 0, REPORT_0),
    _snap(2, "Report.minij", 1, REPORT_1),
    _snap(2, "Report.minij", 2, REPORT_2),
    _comment(2, 201, "Report.minij", 0, 3,
             "Shouldn't this be a multiply? The padding is incorrect", "bob",
             "2025-03-02T10:00:00Z", thread=201),
    _comment(2, 202, "Report.minij", 0, 3,
             "Yes, this produced a wrong result in the demo", "alice",
             "2025-03-02T10:05:00Z", thread=201),
    _comment(2, 203, "Report.minij", 1, 8,
             "What use case needs the constant 7 here?", "carol",
             "2025-03-02T10:10:00Z"),

    _pr(3, "2025-03-03T09:00:00Z"),
    _snap(3, "Queue.minij", 0, QUEUE_0),
    _snap(3, "Queue.minij", 1, QUEUE_1),
    _snap(3, "Queue.minij", 2, QUEUE_2),
    _snap(3, "Queue.minij", 3, QUEUE_3),

    _pr(4, "2025-03-04T09:00:00Z"),
    _snap(4, "Parser.minij", 0, PARSER_0),
    _snap(4, "Parser.minij", 1, PARSER_1),
    _comment(4, 401, "Parser.minij", 0, 5,
             "Please rename total for readability", "bob",
             "2025-03-04T10:00:00Z"),
    _comment(4, 402, "Parser.minij", 0, 7,
             "This will crash when items is empty", "carol",
             "2025-03-04T10:05:00Z", thread=402),
    _comment(4, 403, "Parser.minij", 0, 6,
             "Consider extracting this loop into a helper", "alice",
             "2025-03-04T10:10:00Z", end_line=8),
    _comment(4, 404, "Parser.minij", 0, 7,
             "Good catch, will push a change shortly", "bob",
             "2025-03-04T10:15:00Z", thread=402),
    _comment(4, 405, "Parser.minij", 0, 16,
             "Hmm, not sure about this one", "carol",
             "2025-03-04T10:20:00Z"),
    _comment(4, 406, "Parser.minij", 0, 13,
             "Looks like a bug when depth is negative; also rename it", "alice",
             "2025-03-04T10:25:00Z", end_line=15),

    _pr(5, "2025-03-05T09:00:00Z"),
    _snap(5, "Matrix.minij", 0, MATRIX_0),
    _snap(5, "Matrix.minij", 5, MATRIX_1),
    _comment(5, 501, "Matrix.minij", 5, 6,
             "Is raw indexing the expected behavior here?", "alice",
             "2025-03-05T11:00:00Z"),
    _comment(5, 502, "Matrix.minij", 5, 13,
             "Fix the indent on this line", "bob",
             "2025-03-05T11:05:00Z"),
]

INTENDED_TOPICS = {
    "demo/widgets#1:c101": "BUG",
    "demo/widgets#2:c201": "BUG",
    "demo/widgets#2:c202": "BUG",
    "demo/widgets#2:c203": "USECASE",
    "demo/widgets#4:c401": "STYLE",
    "demo/widgets#4:c402": "BUG",
    "demo/widgets#4:c403": "STRUCTURE",
    "demo/widgets#4:c404": "OTHER",
    "demo/widgets#4:c405": "OTHER",  # before the human override
    "demo/widgets#4:c406": "BUG",
    "demo/widgets#5:c501": "USECASE",
    "demo/widgets#5:c502": "STYLE",
}

INTENDED_QUALITY = {  # comment id -> (actionability, clarity)
    "demo/widgets#1:c101": (0, 1.0),
    "demo/widgets#2:c201": (1, 0.5),
    "demo/widgets#2:c202": (1, 1.0),
    "demo/widgets#2:c203": (0, 1.0),
    "demo/widgets#4:c401": (0, 1.0),
    "demo/widgets#4:c402": (1, 0.5),
    "demo/widgets#4:c403": (1, 1.0),
    "demo/widgets#4:c404": (1, 1.0),
    "demo/widgets#4:c405": (0, 1.0),
    "demo/widgets#4:c406": (0, 1.0),
    "demo/widgets#5:c501": (0, 1.0),
    "demo/widgets#5:c502": (0, 1.0),
}

OVERRIDE_ID = "demo/widgets#4:c405"  # human relabels this one USECASE


def build_corpus():
    corpus, skipped = normalize_export(RECORDS, salt="demo-salt")
    assert not skipped, [str(s) for s in skipped]

    prs = []
    for pr in corpus.pull_requests:
        comments = tuple(
            dataclasses.replace(c, topic_override="USECASE") if c.id == OVERRIDE_ID else c
            for c in pr.comments
        )
        prs.append(dataclasses.replace(pr, comments=comments))
    return dataclasses.replace(corpus, pull_requests=tuple(prs))


def check_intent(corpus) -> None:
    for pr in corpus.pull_requests:
        for c in pr.comments:
            got = oracle_topic(c.body)
            assert got == INTENDED_TOPICS[c.id], (c.id, got)
            act, clar = oracle_quality(pr, c)
            assert (act, clar) == INTENDED_QUALITY[c.id], (c.id, act, clar)


def freeze_traces(corpus) -> tuple[dict, dict]:
    labels: dict = {}
    quality: dict = {}
    for window in (1, 2, 3):
        per_w = labels.setdefault(str(window), {})
        for pr in corpus.pull_requests:
            per_pr = per_w.setdefault(pr.id, {})
            for path in pr.file_paths():
                per_file = per_pr.setdefault(path, {})
                for rev in revisions_of(pr, path):
                    trace = oracle_label_graph(pr, path, rev.revision_index, window)
                    per_file[str(rev.revision_index)] = {
                        str(nid): [lab, topic] for nid, (lab, topic) in sorted(trace.items())
                    }
    for pr in corpus.pull_requests:
        for c in pr.comments:
            act, clar = oracle_quality(pr, c)
            quality[c.id] = {"actionability": act, "clarity": clar}
    return labels, quality


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    with open(DATA / "mini_export.jsonl", "w") as fh:
        for rec in RECORDS:
            fh.write(json.dumps(rec) + "\n")

    corpus = build_corpus()
    check_intent(corpus)
    save_corpus(corpus, DATA / "mini_corpus.jsonl")

    labels, quality = freeze_traces(corpus)
    with open(DATA / "label_trace.json", "w") as fh:
        json.dump(labels, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(DATA / "quality_trace.json", "w") as fh:
        json.dump(quality, fh, indent=1, sort_keys=True)
        fh.write("\n")

    counts = {"POSITIVE": 0, "NEGATIVE": 0, "UNKNOWN": 0}
    for pr_trace in labels["2"].values():
        for file_trace in pr_trace.values():
            for rev_trace in file_trace.values():
                for lab, _ in rev_trace.values():
                    counts[lab] += 1
    print("frozen label counts at window 2:", counts)
    print("quality:", {k: (v["actionability"], v["clarity"]) for k, v in quality.items()})


if __name__ == "__main__":
    main()
