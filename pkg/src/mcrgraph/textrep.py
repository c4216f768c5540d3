"""Comment-text representations: tokenization, vocabulary, TF-IDF, and a
trainable word-embedding table with mean pooling.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor, reduce_mean, take_rows

PAD_ID = 0
UNK_ID = 1

# Within an alphanumeric chunk: acronym runs, capitalized words, lowercase
# runs, and digit runs become separate sub-tokens.
_CHUNK = re.compile(r"[A-Za-z0-9]+")
_SUBTOKEN = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercased sub-tokens: splits on non-alphanumerics, camelCase,
    snake_case, and letter/digit boundaries; order preserved."""
    tokens: list[str] = []
    for chunk in _CHUNK.findall(text):
        tokens.extend(part.lower() for part in _SUBTOKEN.findall(chunk))
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    """Token ids are dense: 0 = PAD, 1 = UNK, stored tokens start at 2."""

    tokens: tuple[str, ...]
    df: tuple[int, ...]  # document frequency, aligned with tokens
    n_docs: int
    index: dict[str, int] = field(init=False, compare=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.index.update({t: i + 2 for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens) + 2

    def id_of(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def ids_of(self, tokens: list[str]) -> list[int]:
        return [self.id_of(t) for t in tokens]

    def df_of(self, token: str) -> int:
        i = self.index.get(token)
        return 0 if i is None else self.df[i - 2]


def build_vocabulary(docs: list[list[str]], min_df: int = 2, max_size: int = 5000) -> Vocabulary:
    """Keep tokens with df >= min_df, ordered by (df desc, token asc), the
    whole vocabulary (PAD/UNK included) capped at max_size."""
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    if max_size < 2:
        raise ValueError("max_size must leave room for PAD and UNK")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(set(doc))
    kept = sorted(
        (t for t, c in counts.items() if c >= min_df),
        key=lambda t: (-counts[t], t),
    )[: max_size - 2]
    return Vocabulary(
        tokens=tuple(kept),
        df=tuple(counts[t] for t in kept),
        n_docs=len(docs),
    )


def tfidf(doc: list[str], vocab: Vocabulary) -> dict[int, float]:
    """Sparse token-id -> tf * ln(n_docs / df) map; unknown tokens skipped."""
    tf = Counter(t for t in doc if t in vocab.index)
    return {
        vocab.index[t]: count * float(np.log(vocab.n_docs / vocab.df_of(t)))
        for t, count in sorted(tf.items())
    }


def vocab_to_json(vocab: Vocabulary) -> dict:
    return {"tokens": list(vocab.tokens), "df": list(vocab.df), "n_docs": vocab.n_docs}


def vocab_from_json(obj: dict) -> Vocabulary:
    return Vocabulary(
        tokens=tuple(obj["tokens"]),
        df=tuple(int(x) for x in obj["df"]),
        n_docs=int(obj["n_docs"]),
    )


class EmbeddingTable:
    """|V| x d trainable embedding matrix; row 0 (PAD) stays zero and takes
    no gradient updates."""

    def __init__(self, vocab: Vocabulary, dim: int, rng: np.random.Generator | None = None,
                 weights: np.ndarray | None = None):
        self.vocab = vocab
        self.dim = dim
        if weights is not None:
            matrix = np.asarray(weights, dtype=np.float64)
            if matrix.shape != (len(vocab), dim):
                raise ValueError(f"weights shape {matrix.shape} != ({len(vocab)}, {dim})")
        else:
            if rng is None:
                rng = np.random.default_rng(0)
            matrix = rng.normal(0.0, 0.1, size=(len(vocab), dim))
            matrix[PAD_ID] = 0.0
        self.weights = Tensor(matrix, requires_grad=True)

    def lookup(self, ids: list[int]) -> Tensor:
        return take_rows(self.weights, np.asarray(ids, dtype=np.int64))

    def mask_pad_gradient(self) -> None:
        """Call after backward(): PAD never moves."""
        if self.weights.grad is not None:
            self.weights.grad[PAD_ID, :] = 0.0


def embed_comment(tokens: list[str], table: EmbeddingTable) -> Tensor:
    """Mean of the tokens' embedding rows (UNK for out-of-vocabulary);
    a zero vector for an empty token list."""
    if not tokens:
        return Tensor(np.zeros(table.dim))
    return reduce_mean(table.lookup(table.vocab.ids_of(tokens)), axis=0)
