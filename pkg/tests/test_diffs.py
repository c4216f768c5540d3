"""Unit tests for unified-diff parsing, application, and line maps."""

import difflib

import numpy as np
import pytest

from mcrgraph.diffs import (
    ChangeHunk,
    DiffLine,
    Origin,
    apply_hunks,
    diff_contents,
    format_unified_diff,
    hunk_line_map,
    parse_unified_diff,
)
from mcrgraph.errors import HunkMismatch, MalformedDiff

from .oracles import difflib_line_map
from .synth import random_text_pair

OLD = "alpha\nbravo\ncharlie\ndelta\n"


def _difflib_text(old: str, new: str) -> str:
    return "".join(
        difflib.unified_diff(
            old.splitlines(keepends=True),
            new.splitlines(keepends=True),
            fromfile="a/f",
            tofile="b/f",
        )
    )


def test_parse_single_hunk_fields():
    text = "@@ -2,3 +2,4 @@\n bravo\n-charlie\n+charly\n+chuck\n delta\n"
    hunks = parse_unified_diff(text)
    assert len(hunks) == 1
    h = hunks[0]
    assert (h.old_start, h.old_len, h.new_start, h.new_len) == (2, 3, 2, 4)
    assert [dl.origin for dl in h.lines] == [
        Origin.CONTEXT, Origin.REMOVED, Origin.ADDED, Origin.ADDED, Origin.CONTEXT,
    ]
    assert h.lines[2].text == "charly"


def test_parse_skips_file_headers():
    text = "--- a/f\n+++ b/f\n@@ -1,1 +1,1 @@\n-alpha\n+omega\n"
    hunks = parse_unified_diff(text)
    assert len(hunks) == 1
    assert hunks[0].lines[0] == DiffLine(Origin.REMOVED, "alpha")


def test_parse_header_without_lengths_defaults_to_one():
    hunks = parse_unified_diff("@@ -3 +3 @@\n-charlie\n+sierra\n")
    assert (hunks[0].old_len, hunks[0].new_len) == (1, 1)


def test_apply_edit():
    diff = "@@ -2,1 +2,1 @@\n-bravo\n+BRAVO\n"
    assert apply_hunks(OLD, parse_unified_diff(diff)) == "alpha\nBRAVO\ncharlie\ndelta\n"


def test_apply_pure_insertion():
    diff = "@@ -2,0 +3,2 @@\n+new one\n+new two\n"
    got = apply_hunks(OLD, parse_unified_diff(diff))
    assert got == "alpha\nbravo\nnew one\nnew two\ncharlie\ndelta\n"


def test_apply_into_empty_file():
    diff = "@@ -0,0 +1,2 @@\n+first\n+second\n"
    assert apply_hunks("", parse_unified_diff(diff)) == "first\nsecond\n"


def test_apply_deletion_to_empty():
    diff = "@@ -1,4 +0,0 @@\n-alpha\n-bravo\n-charlie\n-delta\n"
    assert apply_hunks(OLD, parse_unified_diff(diff)) == ""


def test_apply_context_mismatch_raises():
    diff = "@@ -2,1 +2,1 @@\n-wrong\n+BRAVO\n"
    with pytest.raises(HunkMismatch):
        apply_hunks(OLD, parse_unified_diff(diff))


def test_apply_past_end_raises():
    diff = "@@ -9,1 +9,1 @@\n-nope\n+yep\n"
    with pytest.raises(HunkMismatch):
        apply_hunks(OLD, parse_unified_diff(diff))


@pytest.mark.parametrize("text", [
    "not a diff at all\n",
    "@@ -1,1 +1,1 @@\n?questionable\n",
    "@@ -1,3 +1,3 @@\n alpha\n",  # header overstates the body
])
def test_parse_malformed_raises(text):
    with pytest.raises(MalformedDiff):
        parse_unified_diff(text)


def test_hunk_validate_rejects_inconsistent_counts():
    h = ChangeHunk(1, 2, 1, 1, (DiffLine(Origin.CONTEXT, "x"),))
    with pytest.raises(MalformedDiff):
        h.validate()


def test_format_parse_round_trip():
    hunks = diff_contents(OLD, "alpha\ncharlie\ndelta\nend\n")
    again = parse_unified_diff(format_unified_diff(hunks))
    assert again == hunks


def test_difflib_text_round_trip_seeded():
    rng = np.random.default_rng(4217)
    for _ in range(50):
        old, new = random_text_pair(rng)
        hunks = parse_unified_diff(_difflib_text(old, new))
        assert apply_hunks(old, hunks) == new


def test_diff_contents_apply_round_trip_seeded():
    rng = np.random.default_rng(922)
    for _ in range(50):
        old, new = random_text_pair(rng)
        assert apply_hunks(old, diff_contents(old, new)) == new


def test_diff_contents_identical_is_empty():
    assert diff_contents(OLD, OLD) == []
    assert apply_hunks(OLD, []) == OLD


def test_hunk_line_map_hand_case():
    # delete line 2, insert two lines before delta
    new = "alpha\ncharlie\nx\ny\ndelta\n"
    mapping = hunk_line_map(4, diff_contents(OLD, new))
    assert mapping == {1: 1, 2: None, 3: 2, 4: 5}


def test_hunk_line_map_matches_difflib_oracle():
    rng = np.random.default_rng(31)
    for _ in range(40):
        old, new = random_text_pair(rng)
        n_old = old.count("\n")
        got = hunk_line_map(n_old, diff_contents(old, new))
        want = difflib_line_map(old, new)
        assert got == want


def test_edited_line_maps_to_none():
    new = OLD.replace("charlie", "charlie2")
    mapping = hunk_line_map(4, diff_contents(OLD, new))
    assert mapping[3] is None
