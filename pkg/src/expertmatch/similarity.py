"""Cosine machinery, per-method representations, expertise matrices, stats.

An expertise matrix holds one similarity score per (proposal, reviewer) pair,
proposals on rows. Methods that represent entities as vectors first build a
Representation (saveable, so scoring can restart from disk); the generative
scorer goes straight to a matrix through its own cache.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, QueryConfig, build_reviewer_documents, corpus_reference_year, select_publications
from .embeddings import EmbeddingFile, build_pooled_vectors
from .keywords import KeywordVector, keyword_similarity, keyword_vector
from .lda import LdaConfig, build_lda_vectors, truncate_theta
from .llm import LlmConfig, Transport, score_pairs
from .tfidf import SparseVector, build_tfidf_vectors, load_stopwords

log = logging.getLogger(__name__)

METHODS = ("keyword", "tfidf", "lda", "embedding", "llm")
VECTOR_KINDS = ("sparse", "dense", "keyword")


@dataclass(frozen=True)
class ExpertiseMatrix:
    method: str
    proposal_ids: tuple[str, ...]
    reviewer_ids: tuple[str, ...]
    scores: np.ndarray = field(repr=False)  # P x R, float64

    def __post_init__(self):
        shape = (len(self.proposal_ids), len(self.reviewer_ids))
        if self.scores.shape != shape:
            raise ValueError(f"scores shape {self.scores.shape} != id lists {shape}")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("matrix contains non-finite scores")
        if len(set(self.proposal_ids)) != len(self.proposal_ids):
            raise ValueError("duplicate proposal ids")
        if len(set(self.reviewer_ids)) != len(self.reviewer_ids):
            raise ValueError("duplicate reviewer ids")

    @cached_property
    def proposal_index(self) -> dict[str, int]:
        return {pid: i for i, pid in enumerate(self.proposal_ids)}

    @cached_property
    def reviewer_index(self) -> dict[str, int]:
        return {rid: j for j, rid in enumerate(self.reviewer_ids)}

    def score(self, proposal_id: str, reviewer_id: str) -> float:
        return float(
            self.scores[self.proposal_index[proposal_id], self.reviewer_index[reviewer_id]]
        )

    def proposal_scores(self, proposal_id: str) -> np.ndarray:
        return self.scores[self.proposal_index[proposal_id]]


@dataclass(frozen=True)
class MatrixStats:
    pct_zeros: float  # percentage in [0, 100]
    min: float
    q25: float
    median: float
    q75: float
    max: float


@dataclass(frozen=True)
class Representation:
    """Per-entity vectors for one scoring method, ready for the cosine grid.

    vector_kind selects the payload type: "sparse" maps ids to SparseVector
    over vocab, "dense" to float arrays of length dim, "keyword" to
    KeywordVector. Reviewers that the method could not represent (no usable
    publications, no keywords) are simply absent and score zero later.
    """

    method: str
    vector_kind: str
    dim: int
    proposal_vecs: dict[str, object] = field(repr=False)
    reviewer_vecs: dict[str, object] = field(repr=False)
    vocab: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.vector_kind not in VECTOR_KINDS:
            raise ValueError(f"unknown vector kind {self.vector_kind!r}")


def l2_normalize(v: np.ndarray) -> tuple[np.ndarray, bool]:
    """Unit-norm copy of v plus a flag marking the zero-vector case.

    The zero vector comes back unchanged with the flag set; callers decide
    whether that is worth reporting. Non-finite input is always an error.
    """
    arr = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite components")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        return arr.copy(), True
    return arr / norm, False


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a,b) / (|a||b|), defined as 0.0 when either norm vanishes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0  # zero rows stay zero, giving cosine 0
    return mat / norms


def _sparse_rows(vectors: list[SparseVector], n_cols: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, vec in enumerate(vectors):
        indptr[i + 1] = indptr[i] + vec.indices.shape[0]
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.empty(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.empty(0, np.float64)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), n_cols))


def _cosine_grid_sparse(
    rows: list[SparseVector], cols: list[SparseVector], n_features: int
) -> np.ndarray:
    a = _sparse_rows(rows, n_features)
    b = _sparse_rows(cols, n_features)
    a_norm = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
    b_norm = np.sqrt(np.asarray(b.multiply(b).sum(axis=1)).ravel())
    a_norm[a_norm == 0.0] = 1.0
    b_norm[b_norm == 0.0] = 1.0
    a = sp.diags(1.0 / a_norm) @ a
    b = sp.diags(1.0 / b_norm) @ b
    return np.asarray((a @ b.T).todense(), dtype=np.float64)


def build_representation(
    method: str,
    corpus: Corpus,
    *,
    query: QueryConfig = QueryConfig(),
    stopwords: frozenset[str] | None = None,
    ngram_max: int = 2,
    lda_config: LdaConfig | None = None,
    embedding_file: EmbeddingFile | None = None,
    pooling: str = "mean",
    reference_year: int | None = None,
    tag: str | None = None,
) -> Representation:
    """Vectors for every proposal and (representable) reviewer under a method.

    Text methods (tfidf, lda) share the reviewer documents built from the
    query filter; the embedding method pools per-publication records from an
    interchange file. The generative method has no representation stage.
    """
    if method == "llm":
        raise ValueError("the llm method scores pairs directly; nothing to represent")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; want one of {METHODS}")
    if not corpus.proposals or not corpus.reviewers:
        raise ValueError("corpus has no proposals or no reviewers")
    if reference_year is None:
        reference_year = corpus_reference_year(corpus)

    if method == "keyword":
        proposal_kvs = {
            p.id: keyword_vector(p.keywords, corpus.category_map) for p in corpus.proposals
        }
        reviewer_kvs = {
            r.id: keyword_vector(r.keywords, corpus.category_map)
            for r in corpus.reviewers
            if r.keywords
        }
        return Representation(
            method=tag or "keyword", vector_kind="keyword", dim=0,
            proposal_vecs=proposal_kvs, reviewer_vecs=reviewer_kvs,
        )

    if stopwords is None:
        stopwords = load_stopwords()
    proposal_texts = {p.id: p.abstract for p in corpus.proposals}

    if method == "tfidf":
        documents = build_reviewer_documents(corpus, query, reference_year)
        vocab, pvecs, rvecs = build_tfidf_vectors(
            proposal_texts, documents, ngram_max=ngram_max, stopwords=stopwords
        )
        terms = tuple(sorted(vocab.index, key=vocab.index.get))
        return Representation(
            method=tag or "tfidf", vector_kind="sparse", dim=len(vocab),
            proposal_vecs=pvecs, reviewer_vecs=rvecs, vocab=terms,
        )

    if method == "lda":
        if lda_config is None:
            raise ValueError("lda method needs an LdaConfig")
        documents = build_reviewer_documents(corpus, query, reference_year)
        _model, pvecs, rvecs = build_lda_vectors(
            proposal_texts, documents, lda_config, stopwords=stopwords
        )
        threshold = lda_config.truncation_threshold
        return Representation(
            method=tag or "lda", vector_kind="dense", dim=lda_config.topics,
            proposal_vecs={k: truncate_theta(v, threshold) for k, v in pvecs.items()},
            reviewer_vecs={k: truncate_theta(v, threshold) for k, v in rvecs.items()},
        )

    # method == "embedding"
    if embedding_file is None:
        raise ValueError("embedding method needs an EmbeddingFile")
    pvecs, rvecs = build_pooled_vectors(
        corpus, embedding_file, query=query, pooling=pooling,
        reference_year=reference_year,
    )
    return Representation(
        method=tag or f"{embedding_file.model}[{pooling}]",
        vector_kind="dense", dim=embedding_file.dim,
        proposal_vecs=pvecs, reviewer_vecs=rvecs,
    )


def matrix_from_representation(
    rep: Representation,
    proposal_ids: tuple[str, ...] | None = None,
    reviewer_ids: tuple[str, ...] | None = None,
) -> ExpertiseMatrix:
    """Cosine (or keyword score) grid over a representation's entities.

    Explicit id tuples fix row/column order; reviewers missing from the
    representation contribute zero columns rather than aborting the run.
    """
    if proposal_ids is None:
        proposal_ids = tuple(rep.proposal_vecs)
    if reviewer_ids is None:
        reviewer_ids = tuple(rep.reviewer_vecs)
    missing_p = [pid for pid in proposal_ids if pid not in rep.proposal_vecs]
    if missing_p:
        raise ValueError(f"representation lacks proposals: {missing_p[:10]}")
    absent = [rid for rid in reviewer_ids if rid not in rep.reviewer_vecs]
    if absent:
        log.warning("%d reviewer(s) without vectors score 0: %s",
                    len(absent), ", ".join(absent[:10]))

    if rep.vector_kind == "keyword":
        scores = np.zeros((len(proposal_ids), len(reviewer_ids)))
        for i, pid in enumerate(proposal_ids):
            pvec = rep.proposal_vecs[pid]
            for j, rid in enumerate(reviewer_ids):
                rvec = rep.reviewer_vecs.get(rid)
                if rvec is None:
                    continue
                scores[i, j] = keyword_similarity(pvec, rvec).total
        return ExpertiseMatrix(rep.method, proposal_ids, reviewer_ids, scores)

    if rep.vector_kind == "sparse":
        empty = SparseVector(np.empty(0, np.int64), np.empty(0, np.float64))
        scores = _cosine_grid_sparse(
            [rep.proposal_vecs[pid] for pid in proposal_ids],
            [rep.reviewer_vecs.get(rid, empty) for rid in reviewer_ids],
            rep.dim,
        )
        return ExpertiseMatrix(rep.method, proposal_ids, reviewer_ids, scores)

    # dense
    p = np.zeros((len(proposal_ids), rep.dim))
    for i, pid in enumerate(proposal_ids):
        p[i] = rep.proposal_vecs[pid]
    r = np.zeros((len(reviewer_ids), rep.dim))
    for j, rid in enumerate(reviewer_ids):
        vec = rep.reviewer_vecs.get(rid)
        if vec is not None:
            r[j] = vec
    scores = _normalize_rows(p) @ _normalize_rows(r).T
    return ExpertiseMatrix(rep.method, proposal_ids, reviewer_ids, scores)


def expertise_matrix(
    method: str,
    corpus: Corpus,
    *,
    query: QueryConfig = QueryConfig(),
    stopwords: frozenset[str] | None = None,
    ngram_max: int = 2,
    lda_config: LdaConfig | None = None,
    embedding_file: EmbeddingFile | None = None,
    pooling: str = "mean",
    llm_config: LlmConfig | None = None,
    llm_transport: Transport | None = None,
    reference_year: int | None = None,
    tag: str | None = None,
) -> ExpertiseMatrix:
    """Build the full matrix for one scoring method, end to end."""
    proposal_ids = tuple(p.id for p in corpus.proposals)
    reviewer_ids = tuple(r.id for r in corpus.reviewers)
    if method == "llm":
        if llm_config is None:
            raise ValueError("llm method needs an LlmConfig")
        if not proposal_ids or not reviewer_ids:
            raise ValueError("corpus has no proposals or no reviewers")
        if reference_year is None:
            reference_year = corpus_reference_year(corpus)
        papers_by_reviewer = {}
        for reviewer in corpus.reviewers:
            indices = select_publications(reviewer, query, reference_year)
            papers_by_reviewer[reviewer.id] = [
                (reviewer.publications[i].title, reviewer.publications[i].abstract)
                for i in indices
            ]
        proposal_texts = {p.id: p.abstract for p in corpus.proposals}
        pair_scores = score_pairs(
            papers_by_reviewer, proposal_texts, llm_config, transport=llm_transport
        )
        scores = np.zeros((len(proposal_ids), len(reviewer_ids)))
        for i, pid in enumerate(proposal_ids):
            for j, rid in enumerate(reviewer_ids):
                scores[i, j] = pair_scores[(pid, rid)].scaled
        return ExpertiseMatrix(tag or llm_config.model, proposal_ids, reviewer_ids, scores)

    rep = build_representation(
        method, corpus, query=query, stopwords=stopwords, ngram_max=ngram_max,
        lda_config=lda_config, embedding_file=embedding_file, pooling=pooling,
        reference_year=reference_year, tag=tag,
    )
    return matrix_from_representation(rep, proposal_ids, reviewer_ids)


def matrix_stats(matrix: ExpertiseMatrix, zero_threshold: float = 0.0) -> MatrixStats:
    """Sparsity and quartiles of the score distribution.

    An entry counts as zero when it is <= zero_threshold; the topic method
    conventionally uses 0.01 here, everything else 0. Quantiles use linear
    interpolation.
    """
    values = np.asarray(matrix.scores, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("empty matrix")
    q = np.quantile(values, [0.25, 0.5, 0.75])
    return MatrixStats(
        pct_zeros=100.0 * float(np.count_nonzero(values <= zero_threshold)) / values.size,
        min=float(values.min()),
        q25=float(q[0]),
        median=float(q[1]),
        q75=float(q[2]),
        max=float(values.max()),
    )


def save_matrix(
    matrix: ExpertiseMatrix, path: str | Path, provenance: dict | None = None
) -> None:
    """One JSON header line, then scores row-major as little-endian float64."""
    header = {
        "kind": "expertise_matrix",
        "method": matrix.method,
        "proposal_ids": list(matrix.proposal_ids),
        "reviewer_ids": list(matrix.reviewer_ids),
        "shape": list(matrix.scores.shape),
    }
    if provenance:
        header["provenance"] = provenance
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(matrix.scores, dtype="<f8").tobytes())


def load_matrix(path: str | Path) -> ExpertiseMatrix:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("kind") != "expertise_matrix":
            raise ValueError(f"{path}: not an expertise matrix file")
        scores = np.frombuffer(fh.read(), dtype="<f8").reshape(header["shape"])
    return ExpertiseMatrix(
        method=header["method"],
        proposal_ids=tuple(header["proposal_ids"]),
        reviewer_ids=tuple(header["reviewer_ids"]),
        scores=scores.astype(np.float64),
    )


def export_csv(matrix: ExpertiseMatrix, path: str | Path) -> None:
    """Plain CSV with reviewer columns, for plotting outside this package."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["proposal_id", *matrix.reviewer_ids])
        for i, pid in enumerate(matrix.proposal_ids):
            writer.writerow([pid, *(repr(float(x)) for x in matrix.scores[i])])


def save_representation(
    rep: Representation, path: str | Path, provenance: dict | None = None
) -> None:
    """JSON-lines artifact: header, then one record per entity vector."""
    header = {
        "kind": "representation",
        "method": rep.method,
        "vector_kind": rep.vector_kind,
        "dim": rep.dim,
        "counts": {"proposal": len(rep.proposal_vecs), "reviewer": len(rep.reviewer_vecs)},
    }
    if rep.vocab is not None:
        header["vocab"] = list(rep.vocab)
    if provenance:
        header["provenance"] = provenance
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for role, vecs in (("proposal", rep.proposal_vecs), ("reviewer", rep.reviewer_vecs)):
            for eid, vec in vecs.items():
                record: dict = {"id": eid, "role": role}
                if rep.vector_kind == "sparse":
                    record["i"] = vec.indices.tolist()
                    record["x"] = vec.values.tolist()
                elif rep.vector_kind == "dense":
                    record["v"] = np.asarray(vec, dtype=np.float64).tolist()
                else:
                    record["kw"] = vec.weights
                    record["cat"] = vec.category_weights
                fh.write(json.dumps(record) + "\n")


def load_representation(path: str | Path) -> Representation:
    with Path(path).open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "representation":
            raise ValueError(f"{path}: not a representation file")
        vector_kind = header["vector_kind"]
        dim = int(header["dim"])
        proposal_vecs: dict[str, object] = {}
        reviewer_vecs: dict[str, object] = {}
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if vector_kind == "sparse":
                vec: object = SparseVector(
                    np.asarray(record["i"], dtype=np.int64),
                    np.asarray(record["x"], dtype=np.float64),
                )
            elif vector_kind == "dense":
                vec = np.asarray(record["v"], dtype=np.float64)
            else:
                vec = KeywordVector(
                    weights={k: int(w) for k, w in record["kw"].items()},
                    category_weights={k: int(w) for k, w in record["cat"].items()},
                )
            target = proposal_vecs if record["role"] == "proposal" else reviewer_vecs
            target[record["id"]] = vec
    return Representation(
        method=header["method"],
        vector_kind=vector_kind,
        dim=dim,
        proposal_vecs=proposal_vecs,
        reviewer_vecs=reviewer_vecs,
        vocab=tuple(header["vocab"]) if "vocab" in header else None,
    )
