"""Tokenization and smoothed TF-IDF vectorization.

The weight of term t in document d is ``f(t,d) * (ln((1+N)/(1+n_t)) + 1)``
with raw counts for the term frequency and natural log in the smoothed
inverse document frequency. Reviewer documents and proposal abstracts are
vectorized in one shared vocabulary so their vectors are directly comparable.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_MIN_TOKEN_LEN = 2


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopword set from a one-word-per-line UTF-8 file; ships a default list."""
    if path is None:
        text = resources.files("expertmatch").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(word.strip() for word in text.splitlines() if word.strip())


def tokenize(text: str, ngram_max: int = 1, stopwords: frozenset[str] = frozenset()) -> list[str]:
    """Lowercase terms split on non-alphanumerics, optionally with bigrams.

    Stopwords and tokens shorter than two characters are dropped before
    n-gram formation, so bigrams bridge removed words ("the white dwarf"
    yields the bigram "white dwarf").
    """
    if ngram_max not in (1, 2):
        raise ValueError(f"ngram_max must be 1 or 2, got {ngram_max}")
    tokens = [
        tok
        for tok in _TOKEN_RE.findall(text.lower())
        if len(tok) >= _MIN_TOKEN_LEN and tok not in stopwords
    ]
    if ngram_max == 1:
        return tokens
    bigrams = [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    return tokens + bigrams


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    document_frequency: dict[str, int]
    n_docs: int

    def __len__(self) -> int:
        return len(self.index)


@dataclass(frozen=True)
class SparseVector:
    """Strictly increasing indices paired with finite nonzero values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values must have equal length")

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseVector)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


def idf(term: str, vocabulary: Vocabulary) -> float:
    """Smoothed inverse document frequency, always >= 1 for known terms."""
    if term not in vocabulary.document_frequency:
        raise KeyError(f"term {term!r} not in vocabulary")
    n_t = vocabulary.document_frequency[term]
    return math.log((1 + vocabulary.n_docs) / (1 + n_t)) + 1.0


def fit_vocabulary(
    tokenized_docs: list[list[str]], min_document_frequency: int = 1
) -> Vocabulary:
    df: Counter[str] = Counter()
    for terms in tokenized_docs:
        df.update(set(terms))
    kept = sorted(t for t, n in df.items() if n >= min_document_frequency)
    if not kept:
        raise ValueError("no terms survive preprocessing; all documents empty?")
    return Vocabulary(
        index={t: i for i, t in enumerate(kept)},
        document_frequency={t: df[t] for t in kept},
        n_docs=len(tokenized_docs),
    )


def transform(terms: list[str], vocabulary: Vocabulary) -> SparseVector:
    """TF-IDF vector for one tokenized document; unknown terms are ignored."""
    counts = Counter(t for t in terms if t in vocabulary.index)
    if not counts:
        return SparseVector(indices=np.empty(0, dtype=np.int64), values=np.empty(0))
    pairs = sorted((vocabulary.index[t], n * idf(t, vocabulary)) for t, n in counts.items())
    indices, values = zip(*pairs)
    return SparseVector(
        indices=np.asarray(indices, dtype=np.int64),
        values=np.asarray(values, dtype=np.float64),
    )


def tfidf_vectorize(
    documents: list[str],
    ngram_max: int = 1,
    stopwords: frozenset[str] = frozenset(),
    min_document_frequency: int = 1,
) -> tuple[Vocabulary, list[SparseVector]]:
    """Fit a vocabulary on all documents and vectorize each one."""
    tokenized = [tokenize(doc, ngram_max, stopwords) for doc in documents]
    vocabulary = fit_vocabulary(tokenized, min_document_frequency)
    return vocabulary, [transform(terms, vocabulary) for terms in tokenized]


def build_tfidf_vectors(
    proposal_texts: dict[str, str],
    reviewer_documents: dict[str, str],
    ngram_max: int = 2,
    stopwords: frozenset[str] = frozenset(),
    min_document_frequency: int = 1,
) -> tuple[Vocabulary, dict[str, SparseVector], dict[str, SparseVector]]:
    """Joint-fit TF-IDF vectors for proposals and reviewers in one space."""
    proposal_ids = list(proposal_texts)
    reviewer_ids = list(reviewer_documents)
    docs = [proposal_texts[i] for i in proposal_ids] + [
        reviewer_documents[i] for i in reviewer_ids
    ]
    vocabulary, vectors = tfidf_vectorize(docs, ngram_max, stopwords, min_document_frequency)
    proposal_vecs = dict(zip(proposal_ids, vectors[: len(proposal_ids)]))
    reviewer_vecs = dict(zip(reviewer_ids, vectors[len(proposal_ids) :]))
    return vocabulary, proposal_vecs, reviewer_vecs
