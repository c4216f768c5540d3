"""Unit tests for comment tokenization, vocabulary, tf-idf, and embeddings."""

import math

import numpy as np
import pytest

from mcrgraph.textrep import (
    PAD_ID,
    UNK_ID,
    EmbeddingTable,
    Vocabulary,
    build_vocabulary,
    embed_comment,
    tfidf,
    tokenize,
    vocab_from_json,
    vocab_to_json,
)


# --- tokenization -----------------------------------------------------------------

@pytest.mark.parametrize("text,tokens", [
    ("Rename getFoo_bar", ["rename", "get", "foo", "bar"]),
    ("NullPointerException at line 42", ["null", "pointer", "exception", "at", "line", "42"]),
    ("snake_case_name", ["snake", "case", "name"]),
    ("HTTPServer2", ["http", "server", "2"]),
    ("x+y == z!", ["x", "y", "z"]),
    ("", []),
    ("   \t\n", []),
])
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


def test_tokenize_is_lowercase_alnum_only():
    for tok in tokenize("Weird-Mix: HTML5_parser v2.0"):
        assert tok == tok.lower()
        assert tok.isalnum()


# --- vocabulary -------------------------------------------------------------------

DOCS = [
    ["null", "check", "missing"],
    ["null", "pointer"],
    ["check", "style", "style"],
    ["rare"],
]


def test_build_vocabulary_df_threshold():
    vocab = build_vocabulary(DOCS, min_df=2)
    assert set(vocab.tokens) == {"null", "check"}
    assert vocab.n_docs == 4
    assert vocab.df_of("null") == 2
    # document frequency counts documents, not occurrences
    vocab_all = build_vocabulary(DOCS, min_df=1)
    assert vocab_all.df_of("style") == 1


def test_vocabulary_reserves_pad_and_unk():
    vocab = build_vocabulary(DOCS, min_df=2)
    assert vocab.id_of("null") >= 2
    assert vocab.id_of("no-such-token") == UNK_ID
    assert PAD_ID == 0 and UNK_ID == 1
    assert len(vocab) == len(vocab.tokens) + 2


def test_vocabulary_orders_by_df_then_token():
    vocab = build_vocabulary([["b", "a"], ["b", "a"], ["b"]], min_df=1)
    assert vocab.tokens == ("b", "a")  # df 3 before df 2
    tied = build_vocabulary([["z", "y"], ["z", "y"]], min_df=1)
    assert tied.tokens == ("y", "z")  # alphabetical inside a df tie


def test_vocabulary_max_size_includes_reserved_slots():
    docs = [[f"t{i:02d}"] * 1 for i in range(30)]
    vocab = build_vocabulary(docs + docs, min_df=2, max_size=10)
    assert len(vocab) == 10
    assert len(vocab.tokens) == 8


def test_vocab_json_round_trip():
    vocab = build_vocabulary(DOCS, min_df=1)
    again = vocab_from_json(vocab_to_json(vocab))
    assert again == vocab
    assert again.id_of("null") == vocab.id_of("null")


# --- tf-idf ----------------------------------------------------------------------

def test_tfidf_hand_computed():
    vocab = build_vocabulary(DOCS, min_df=2)  # null (df 2), check (df 2), n=4
    weights = tfidf(["null", "null", "check", "unknown"], vocab)
    idf = math.log(4 / 2)
    assert weights == {
        vocab.id_of("null"): pytest.approx(2 * idf),
        vocab.id_of("check"): pytest.approx(1 * idf),
    }


def test_tfidf_skips_oov_and_handles_empty():
    vocab = build_vocabulary(DOCS, min_df=2)
    assert tfidf(["rare", "zzz"], vocab) == {}
    assert tfidf([], vocab) == {}


# --- embeddings --------------------------------------------------------------------

def test_embedding_table_pad_row_is_zero():
    vocab = build_vocabulary(DOCS, min_df=1)
    table = EmbeddingTable(vocab, dim=8, rng=np.random.default_rng(0))
    assert np.all(table.weights.values[PAD_ID] == 0.0)
    assert table.weights.values.shape == (len(vocab), 8)


def test_embedding_table_seeded_init_is_reproducible():
    vocab = build_vocabulary(DOCS, min_df=1)
    t1 = EmbeddingTable(vocab, dim=4, rng=np.random.default_rng(11))
    t2 = EmbeddingTable(vocab, dim=4, rng=np.random.default_rng(11))
    assert np.array_equal(t1.weights.values, t2.weights.values)


def test_embed_comment_averages_rows():
    vocab = build_vocabulary(DOCS, min_df=1)
    table = EmbeddingTable(vocab, dim=4, rng=np.random.default_rng(3))
    tokens = ["null", "check"]
    got = embed_comment(tokens, table)
    rows = table.weights.values[[vocab.id_of(t) for t in tokens]]
    np.testing.assert_allclose(got.values, rows.mean(axis=0))
    assert got.shape == (4,)


def test_embed_comment_empty_is_zero_vector():
    vocab = build_vocabulary(DOCS, min_df=1)
    table = EmbeddingTable(vocab, dim=4, rng=np.random.default_rng(3))
    got = embed_comment([], table)
    assert got.shape == (4,)
    assert np.all(got.values == 0.0)


def test_embedding_gradient_flows_and_pad_is_masked():
    vocab = build_vocabulary(DOCS, min_df=1)
    table = EmbeddingTable(vocab, dim=4, rng=np.random.default_rng(5))
    from mcrgraph import tensor as T

    emb = embed_comment(["null", "unknown-token"], table)  # UNK participates
    loss = T.reduce_sum(T.mul(emb, emb))
    loss.backward()
    assert table.weights.grad is not None
    assert np.any(table.weights.grad[vocab.id_of("null")] != 0.0)
    table.weights.grad[PAD_ID] = 1.0  # pretend something leaked into PAD
    table.mask_pad_gradient()
    assert np.all(table.weights.grad[PAD_ID] == 0.0)
