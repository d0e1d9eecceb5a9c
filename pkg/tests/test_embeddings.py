import json

import numpy as np
import pytest

from expertmatch.corpus import (
    Corpus,
    PublicationRecord,
    Proposal,
    QueryConfig,
    ReviewerProfile,
)
from expertmatch.embeddings import (
    build_pooled_vectors,
    pool_vectors,
    publication_record_id,
    read_embedding_file,
    write_embedding_file,
)
from expertmatch.errors import EmbeddingFormatError


def write_lines(path, lines):
    path.write_bytes(b"\n".join(line.encode() for line in lines) + b"\n")


def header(count, dim=2, model="enc"):
    return json.dumps({"model": model, "dim": dim, "count": count})


def record(rid, values):
    return json.dumps({"id": rid, "v": values})


def test_round_trip(tmp_path):
    path = tmp_path / "vec.jsonl"
    vectors = {"P1": np.array([1.0, 2.0]), "R1#0": np.array([-0.5, 0.25])}
    write_embedding_file(path, "enc", vectors)
    loaded = read_embedding_file(path)
    assert loaded.model == "enc"
    assert loaded.dim == 2
    assert len(loaded) == 2
    np.testing.assert_array_equal(loaded.vectors["P1"], [1.0, 2.0])
    np.testing.assert_array_equal(loaded.vectors["R1#0"], [-0.5, 0.25])


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "vec.jsonl"
    path.write_bytes(b"")
    with pytest.raises(EmbeddingFormatError, match="empty file"):
        read_embedding_file(path)


def test_carriage_returns_rejected(tmp_path):
    path = tmp_path / "vec.jsonl"
    path.write_bytes(header(0).encode() + b"\r\n")
    with pytest.raises(EmbeddingFormatError, match="CR byte"):
        read_embedding_file(path)


def test_header_must_be_json_object(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_lines(path, ["[1, 2, 3]"])
    with pytest.raises(EmbeddingFormatError, match="JSON object"):
        read_embedding_file(path)


def test_header_field_validation(tmp_path):
    path = tmp_path / "vec.jsonl"
    cases = [
        (json.dumps({"dim": 2, "count": 0}), "model"),
        (json.dumps({"model": "enc", "dim": 0, "count": 0}), "dim"),
        (json.dumps({"model": "enc", "dim": True, "count": 0}), "dim"),
        (json.dumps({"model": "enc", "dim": 2, "count": -1}), "count"),
    ]
    for line, needle in cases:
        write_lines(path, [line])
        with pytest.raises(EmbeddingFormatError, match=needle):
            read_embedding_file(path)


def test_record_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_lines(path, [header(2), record("a", [1.0, 2.0]), "{broken"])
    with pytest.raises(EmbeddingFormatError, match=r":3:"):
        read_embedding_file(path)


def test_duplicate_ids_rejected(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_lines(path, [header(2), record("a", [1.0, 2.0]), record("a", [3.0, 4.0])])
    with pytest.raises(EmbeddingFormatError, match="duplicate id"):
        read_embedding_file(path)


def test_dimension_mismatch_rejected(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_lines(path, [header(1), record("a", [1.0, 2.0, 3.0])])
    with pytest.raises(EmbeddingFormatError, match="list of 2 numbers"):
        read_embedding_file(path)


def test_non_finite_component_rejected(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_lines(path, [header(1), '{"id": "a", "v": [1.0, NaN]}'])
    with pytest.raises(EmbeddingFormatError, match="finite"):
        read_embedding_file(path)
    write_lines(path, [header(1), '{"id": "a", "v": [1.0, true]}'])
    with pytest.raises(EmbeddingFormatError, match="finite"):
        read_embedding_file(path)


def test_count_mismatch_rejected(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_lines(path, [header(3), record("a", [1.0, 2.0])])
    with pytest.raises(EmbeddingFormatError, match="count=3"):
        read_embedding_file(path)


def test_blank_interior_line_rejected(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_lines(path, [header(2), record("a", [1.0, 2.0]), "", record("b", [0.0, 0.0])])
    with pytest.raises(EmbeddingFormatError, match="blank line"):
        read_embedding_file(path)


def test_write_rejects_bad_vectors(tmp_path):
    path = tmp_path / "vec.jsonl"
    with pytest.raises(ValueError, match="shape"):
        write_embedding_file(path, "enc", {"a": np.array([1.0])}, dim=2)
    with pytest.raises(ValueError, match="non-finite"):
        write_embedding_file(path, "enc", {"a": np.array([1.0, np.inf])})
    with pytest.raises(ValueError, match="dim is required"):
        write_embedding_file(path, "enc", {})


def test_write_empty_file_with_explicit_dim(tmp_path):
    path = tmp_path / "vec.jsonl"
    write_embedding_file(path, "enc", {}, dim=4)
    loaded = read_embedding_file(path)
    assert loaded.dim == 4 and len(loaded) == 0


def test_publication_record_id_layout():
    assert publication_record_id("RV-smith", 0) == "RV-smith#0"
    assert publication_record_id("RV-smith", 12) == "RV-smith#12"


def test_mean_pooling():
    out = pool_vectors([np.array([1.0, -2.0]), np.array([0.0, 3.0])], mode="mean")
    np.testing.assert_array_equal(out, [0.5, 0.5])


def test_max_pooling_is_componentwise():
    out = pool_vectors([np.array([1.0, -2.0]), np.array([0.0, 3.0])], mode="max")
    np.testing.assert_array_equal(out, [1.0, 3.0])


def test_pooling_argument_validation():
    with pytest.raises(ValueError, match="pooling mode"):
        pool_vectors([np.ones(2)], mode="median")
    with pytest.raises(ValueError, match="empty"):
        pool_vectors([], mode="mean")


def _mini_corpus():
    proposals = (
        Proposal(id="P1", abstract="x", keywords=(("k1", 1), ("k2", 2))),
    )
    pubs = (
        PublicationRecord(title="old", abstract="x", year=2018, first_author=True),
        PublicationRecord(title="new", abstract="x", year=2024, first_author=True),
    )
    reviewers = (
        ReviewerProfile(id="R1", publications=pubs, keywords=(), designated_proposal_ids=("P1",)),
        ReviewerProfile(id="R2", publications=(), keywords=(("k1", 1), ("k2", 2)),
                        designated_proposal_ids=("P1",)),
    )
    return Corpus(
        proposals=proposals,
        reviewers=reviewers,
        labels=(),
        keyword_vocabulary=("k1", "k2"),
        category_map={"k1": "c", "k2": "c"},
    )


def _embeddings(tmp_path, records):
    path = tmp_path / "emb.jsonl"
    write_embedding_file(path, "enc", records)
    return read_embedding_file(path)


def test_pooled_vectors_follow_publication_selection(tmp_path):
    corpus = _mini_corpus()
    emb = _embeddings(
        tmp_path,
        {
            "P1": np.array([1.0, 0.0]),
            "R1#0": np.array([10.0, 10.0]),
            "R1#1": np.array([2.0, 4.0]),
        },
    )
    # five-year window anchored at 2024 keeps only the 2024 paper (position 1)
    props, revs = build_pooled_vectors(corpus, emb, QueryConfig(window_years=5))
    np.testing.assert_array_equal(props["P1"], [1.0, 0.0])
    np.testing.assert_array_equal(revs["R1"], [2.0, 4.0])
    assert "R2" not in revs  # no publications, skipped not fatal

    # widen the window: both papers pool
    props, revs = build_pooled_vectors(corpus, emb, QueryConfig(window_years=10))
    np.testing.assert_array_equal(revs["R1"], [6.0, 7.0])


def test_missing_proposal_record_is_fatal(tmp_path):
    corpus = _mini_corpus()
    emb = _embeddings(tmp_path, {"R1#1": np.array([2.0, 4.0])})
    with pytest.raises(EmbeddingFormatError, match="missing proposal records: P1"):
        build_pooled_vectors(corpus, emb)


def test_missing_selected_publication_is_fatal(tmp_path):
    corpus = _mini_corpus()
    emb = _embeddings(tmp_path, {"P1": np.array([1.0, 0.0])})
    with pytest.raises(EmbeddingFormatError, match="missing publication records: R1#1"):
        build_pooled_vectors(corpus, emb, QueryConfig(window_years=5))


def test_fixture_embedding_file_is_valid(synth_embeddings, synth_corpus):
    assert synth_embeddings.dim == 32
    for proposal in synth_corpus.proposals:
        assert proposal.id in synth_embeddings.vectors
