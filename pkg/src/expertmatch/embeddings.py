"""Dense vector interchange file and per-entity vector assembly.

The on-disk format is deliberately minimal so external encoders can produce
it without importing this package: a one-line JSON header holding model name,
dimensionality, and record count, then one JSON record per line with an id
and the vector values. UTF-8, LF line endings, float64 semantics.

Proposals carry their own id; a reviewer's publications are keyed
"<reviewer_id>#<position>" where position indexes the reviewer's publication
list as stored in the corpus. Reviewer vectors are pooled from the records of
whichever publications the active query selects.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, QueryConfig, corpus_reference_year, select_publications
from .errors import EmbeddingFormatError

log = logging.getLogger(__name__)

POOLING_MODES = ("mean", "max")


@dataclass(frozen=True)
class EmbeddingFile:
    model: str
    dim: int
    vectors: dict[str, np.ndarray] = field(repr=False)

    def __len__(self) -> int:
        return len(self.vectors)


def publication_record_id(reviewer_id: str, position: int) -> str:
    return f"{reviewer_id}#{position}"


def _parse_header(line: bytes, path: Path) -> tuple[str, int, int]:
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EmbeddingFormatError(f"{path}:1: bad header: {exc}") from exc
    if not isinstance(header, dict):
        raise EmbeddingFormatError(f"{path}:1: header must be a JSON object")
    model = header.get("model")
    dim = header.get("dim")
    count = header.get("count")
    if not isinstance(model, str) or not model:
        raise EmbeddingFormatError(f"{path}:1: header needs a non-empty 'model'")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise EmbeddingFormatError(f"{path}:1: header 'dim' must be a positive integer")
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise EmbeddingFormatError(f"{path}:1: header 'count' must be a non-negative integer")
    return model, dim, count


def read_embedding_file(path: str | Path) -> EmbeddingFile:
    """Parse and validate an interchange file, keeping record order."""
    path = Path(path)
    raw = path.read_bytes()
    if not raw:
        raise EmbeddingFormatError(f"{path}: empty file")
    if b"\r" in raw:
        raise EmbeddingFormatError(f"{path}: CR byte found; lines must end in LF only")

    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    model, dim, count = _parse_header(lines[0], path)

    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise EmbeddingFormatError(f"{path}:{lineno}: blank line inside record block")
        try:
            record = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise EmbeddingFormatError(f"{path}:{lineno}: bad record: {exc}") from exc
        if not isinstance(record, dict):
            raise EmbeddingFormatError(f"{path}:{lineno}: record must be a JSON object")
        rid = record.get("id")
        values = record.get("v")
        if not isinstance(rid, str) or not rid:
            raise EmbeddingFormatError(f"{path}:{lineno}: record needs a non-empty 'id'")
        if rid in vectors:
            raise EmbeddingFormatError(f"{path}:{lineno}: duplicate id {rid!r}")
        if not isinstance(values, list) or len(values) != dim:
            raise EmbeddingFormatError(
                f"{path}:{lineno}: 'v' must be a list of {dim} numbers"
            )
        vec = np.empty(dim, dtype=np.float64)
        for j, x in enumerate(values):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: component {j} is not a finite number"
                )
            vec[j] = float(x)
        vectors[rid] = vec

    if len(vectors) != count:
        raise EmbeddingFormatError(
            f"{path}: header says count={count} but file holds {len(vectors)} records"
        )
    log.debug("read %d vectors (dim %d, model %s) from %s", count, dim, model, path)
    return EmbeddingFile(model=model, dim=dim, vectors=vectors)


def write_embedding_file(
    path: str | Path,
    model: str,
    vectors: dict[str, np.ndarray],
    dim: int | None = None,
) -> None:
    """Write vectors in the interchange layout read by read_embedding_file."""
    if dim is None:
        if not vectors:
            raise ValueError("dim is required when writing an empty file")
        dim = len(next(iter(vectors.values())))
    header = {"model": model, "dim": int(dim), "count": len(vectors)}
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for rid, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise ValueError(f"record {rid!r} has shape {arr.shape}, want ({dim},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"record {rid!r} has non-finite components")
            fh.write(json.dumps({"id": rid, "v": arr.tolist()}) + "\n")


def pool_vectors(vectors: list[np.ndarray], mode: str = "mean") -> np.ndarray:
    """Componentwise mean or max over a non-empty stack of same-length vectors."""
    if mode not in POOLING_MODES:
        raise ValueError(f"unknown pooling mode {mode!r}; want one of {POOLING_MODES}")
    if not vectors:
        raise ValueError("cannot pool an empty vector list")
    stack = np.stack([np.asarray(v, dtype=np.float64) for v in vectors])
    return stack.mean(axis=0) if mode == "mean" else stack.max(axis=0)


def build_pooled_vectors(
    corpus: Corpus,
    embeddings: EmbeddingFile,
    query: QueryConfig = QueryConfig(),
    pooling: str = "mean",
    reference_year: int | None = None,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Assemble proposal and reviewer vectors for one query configuration.

    Every proposal id must have a record. Every publication the query selects
    must have a record keyed by its position in the stored publication list;
    a reviewer whose selection is empty gets no vector and is reported via
    the logger, mirroring how empty text documents are handled.
    """
    query.validate()
    if reference_year is None:
        reference_year = corpus_reference_year(corpus)

    missing = [p.id for p in corpus.proposals if p.id not in embeddings.vectors]
    if missing:
        raise EmbeddingFormatError(
            f"missing proposal records: {', '.join(sorted(missing)[:10])}"
        )
    proposal_vecs = {p.id: embeddings.vectors[p.id] for p in corpus.proposals}

    reviewer_vecs: dict[str, np.ndarray] = {}
    skipped = []
    for reviewer in corpus.reviewers:
        indices = select_publications(reviewer, query, reference_year)
        if not indices:
            skipped.append(reviewer.id)
            continue
        keys = [publication_record_id(reviewer.id, i) for i in indices]
        absent = [k for k in keys if k not in embeddings.vectors]
        if absent:
            raise EmbeddingFormatError(
                f"missing publication records: {', '.join(absent[:10])}"
            )
        reviewer_vecs[reviewer.id] = pool_vectors(
            [embeddings.vectors[k] for k in keys], mode=pooling
        )
    if skipped:
        log.warning(
            "%d reviewer(s) had no publications under %s: %s",
            len(skipped), query, ", ".join(skipped[:10]),
        )
    return proposal_vecs, reviewer_vecs
