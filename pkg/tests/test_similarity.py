import json

import numpy as np
import pytest

from expertmatch.keywords import keyword_similarity
from expertmatch.lda import LdaConfig
from expertmatch.llm import LlmConfig
from expertmatch.similarity import (
    METHODS,
    ExpertiseMatrix,
    Representation,
    build_representation,
    cosine,
    expertise_matrix,
    export_csv,
    l2_normalize,
    load_matrix,
    load_representation,
    matrix_from_representation,
    matrix_stats,
    save_matrix,
    save_representation,
)
from expertmatch.tfidf import SparseVector

FAST_LDA = LdaConfig(topics=4, iterations=40, burn_in=20, sample_stride=5, seed=3)


def dense(vec: SparseVector, dim: int) -> np.ndarray:
    out = np.zeros(dim)
    out[vec.indices] = vec.values
    return out


def test_l2_normalize_unit_norm():
    out, flag = l2_normalize(np.array([3.0, 4.0]))
    np.testing.assert_allclose(out, [0.6, 0.8])
    assert flag is False


def test_l2_normalize_zero_vector_flagged_not_raised():
    out, flag = l2_normalize(np.zeros(3))
    np.testing.assert_array_equal(out, np.zeros(3))
    assert flag is True


def test_l2_normalize_rejects_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        l2_normalize(np.array([1.0, np.nan]))


def test_cosine_reference_points():
    assert cosine(np.array([1.0, 1.0, 0.0, 0.0]), np.array([1.0, 0.0, 1.0, 0.0])) == (
        pytest.approx(0.5, rel=1e-12)
    )
    assert cosine(np.array([2.0, 0.0]), np.array([5.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert cosine(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(-1.0)


def test_cosine_zero_vector_scores_zero():
    assert cosine(np.zeros(2), np.array([1.0, 1.0])) == 0.0


def test_cosine_dimension_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        cosine(np.ones(2), np.ones(3))


def test_matrix_invariants():
    good = ExpertiseMatrix("m", ("P1",), ("R1", "R2"), np.array([[0.1, 0.2]]))
    assert good.score("P1", "R2") == 0.2
    np.testing.assert_array_equal(good.proposal_scores("P1"), [0.1, 0.2])

    with pytest.raises(ValueError, match="shape"):
        ExpertiseMatrix("m", ("P1",), ("R1",), np.zeros((2, 1)))
    with pytest.raises(ValueError, match="non-finite"):
        ExpertiseMatrix("m", ("P1",), ("R1",), np.array([[np.nan]]))
    with pytest.raises(ValueError, match="duplicate proposal"):
        ExpertiseMatrix("m", ("P1", "P1"), ("R1",), np.zeros((2, 1)))
    with pytest.raises(ValueError, match="duplicate reviewer"):
        ExpertiseMatrix("m", ("P1",), ("R1", "R1"), np.zeros((1, 2)))


def test_unknown_ids_raise():
    matrix = ExpertiseMatrix("m", ("P1",), ("R1",), np.array([[0.5]]))
    with pytest.raises(KeyError):
        matrix.score("P9", "R1")
    with pytest.raises(KeyError):
        matrix.score("P1", "R9")


def test_sparse_grid_matches_pairwise_cosine(synth_corpus):
    rep = build_representation("tfidf", synth_corpus, ngram_max=2)
    matrix = matrix_from_representation(rep)
    for i, pid in enumerate(matrix.proposal_ids):
        for j, rid in enumerate(matrix.reviewer_ids):
            expected = cosine(
                dense(rep.proposal_vecs[pid], rep.dim),
                dense(rep.reviewer_vecs[rid], rep.dim),
            )
            assert matrix.scores[i, j] == pytest.approx(expected, abs=1e-12), (pid, rid)


def test_dense_grid_matches_pairwise_cosine():
    rng = np.random.default_rng(0)
    rep = Representation(
        method="m", vector_kind="dense", dim=5,
        proposal_vecs={f"P{i}": rng.normal(size=5) for i in range(4)},
        reviewer_vecs={f"R{j}": rng.normal(size=5) for j in range(6)},
    )
    matrix = matrix_from_representation(rep)
    for i, pid in enumerate(matrix.proposal_ids):
        for j, rid in enumerate(matrix.reviewer_ids):
            expected = cosine(rep.proposal_vecs[pid], rep.reviewer_vecs[rid])
            assert matrix.scores[i, j] == pytest.approx(expected, abs=1e-12)


def test_keyword_grid_matches_pairwise_scores(synth_corpus):
    rep = build_representation("keyword", synth_corpus)
    matrix = matrix_from_representation(rep)
    for pid in matrix.proposal_ids:
        for rid in matrix.reviewer_ids:
            expected = keyword_similarity(
                rep.proposal_vecs[pid], rep.reviewer_vecs[rid]
            ).total
            assert matrix.score(pid, rid) == pytest.approx(expected, abs=1e-12)
            assert 0.0 <= matrix.score(pid, rid) <= 2.0


def test_missing_reviewer_scores_zero_with_warning(caplog):
    rep = Representation(
        method="m", vector_kind="dense", dim=2,
        proposal_vecs={"P1": np.array([1.0, 0.0])},
        reviewer_vecs={"R1": np.array([1.0, 1.0])},
    )
    with caplog.at_level("WARNING"):
        matrix = matrix_from_representation(rep, ("P1",), ("R1", "R_gone"))
    assert matrix.score("P1", "R_gone") == 0.0
    assert "without vectors" in caplog.text


def test_missing_proposal_is_fatal():
    rep = Representation(
        method="m", vector_kind="dense", dim=2,
        proposal_vecs={"P1": np.ones(2)}, reviewer_vecs={"R1": np.ones(2)},
    )
    with pytest.raises(ValueError, match="lacks proposals"):
        matrix_from_representation(rep, ("P1", "P_gone"), ("R1",))


def test_representation_rejects_llm_and_unknown_methods(synth_corpus):
    with pytest.raises(ValueError, match="scores pairs directly"):
        build_representation("llm", synth_corpus)
    with pytest.raises(ValueError, match="unknown method"):
        build_representation("doc2vec", synth_corpus)


def test_method_list_is_closed():
    assert METHODS == ("keyword", "tfidf", "lda", "embedding", "llm")


def test_lda_method_requires_config(synth_corpus):
    with pytest.raises(ValueError, match="LdaConfig"):
        build_representation("lda", synth_corpus)


def test_embedding_method_requires_file(synth_corpus):
    with pytest.raises(ValueError, match="EmbeddingFile"):
        build_representation("embedding", synth_corpus)


def test_lda_representation_is_truncated(synth_corpus):
    rep = build_representation("lda", synth_corpus, lda_config=FAST_LDA)
    for vec in list(rep.proposal_vecs.values()) + list(rep.reviewer_vecs.values()):
        below = vec[(vec > 0) & (vec < FAST_LDA.truncation_threshold)]
        assert below.size == 0


def test_embedding_tag_names_model_and_pooling(synth_corpus, synth_embeddings):
    rep = build_representation(
        "embedding", synth_corpus, embedding_file=synth_embeddings, pooling="max"
    )
    assert rep.method == f"{synth_embeddings.model}[max]"


def test_llm_matrix_uses_scaled_scores(tmp_path, synth_corpus):
    config = LlmConfig(
        endpoint="http://localhost:9/x", model="fake", cache_dir=tmp_path / "cache"
    )
    matrix = expertise_matrix(
        "llm", synth_corpus, llm_config=config, llm_transport=lambda payload: "80"
    )
    assert matrix.method == "fake"
    assert np.all(matrix.scores == 0.8)
    assert matrix.scores.shape == (
        len(synth_corpus.proposals), len(synth_corpus.reviewers),
    )


def test_llm_method_requires_config(synth_corpus):
    with pytest.raises(ValueError, match="LlmConfig"):
        expertise_matrix("llm", synth_corpus)


def test_stats_quartiles_interpolate():
    matrix = ExpertiseMatrix("m", ("P1", "P2"), ("R1", "R2"),
                             np.array([[0.0, 1.0], [2.0, 3.0]]))
    stats = matrix_stats(matrix)
    assert stats.median == pytest.approx(1.5)
    assert stats.q25 == pytest.approx(0.75)
    assert stats.q75 == pytest.approx(2.25)
    assert stats.min == 0.0 and stats.max == 3.0
    assert stats.pct_zeros == pytest.approx(25.0)


def test_stats_zero_threshold_counts_at_or_below():
    matrix = ExpertiseMatrix("m", ("P1",), ("R1", "R2", "R3", "R4"),
                             np.array([[0.0, 0.01, 0.02, 0.5]]))
    assert matrix_stats(matrix, zero_threshold=0.01).pct_zeros == pytest.approx(50.0)
    assert matrix_stats(matrix).pct_zeros == pytest.approx(25.0)


def test_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    matrix = ExpertiseMatrix(
        "tfidf", ("P1", "P2", "P3"), ("R1", "R2"), rng.random((3, 2))
    )
    path = tmp_path / "m.bin"
    save_matrix(matrix, path, provenance={"seed": 7})
    loaded = load_matrix(path)
    assert loaded.method == matrix.method
    assert loaded.proposal_ids == matrix.proposal_ids
    assert loaded.reviewer_ids == matrix.reviewer_ids
    np.testing.assert_array_equal(loaded.scores, matrix.scores)
    with path.open("rb") as fh:
        header = json.loads(fh.readline())
    assert header["provenance"] == {"seed": 7}


def test_load_matrix_rejects_foreign_kind(tmp_path):
    path = tmp_path / "m.bin"
    path.write_bytes(b'{"kind": "lda_model"}\n')
    with pytest.raises(ValueError, match="not an expertise matrix"):
        load_matrix(path)


def test_csv_export_is_lossless(tmp_path):
    rng = np.random.default_rng(2)
    matrix = ExpertiseMatrix("m", ("P1", "P2"), ("R1",), rng.random((2, 1)))
    path = tmp_path / "m.csv"
    export_csv(matrix, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "proposal_id,R1"
    for line, pid in zip(lines[1:], matrix.proposal_ids):
        name, value = line.split(",")
        assert name == pid
        assert float(value) == matrix.score(pid, "R1")  # repr round-trips exactly


@pytest.mark.parametrize("method", ["keyword", "tfidf", "lda", "embedding"])
def test_representation_round_trip(method, tmp_path, synth_corpus, synth_embeddings):
    rep = build_representation(
        method, synth_corpus, lda_config=FAST_LDA, embedding_file=synth_embeddings
    )
    path = tmp_path / "rep.jsonl"
    save_representation(rep, path, provenance={"method": method})
    loaded = load_representation(path)
    assert loaded.method == rep.method
    assert loaded.vector_kind == rep.vector_kind
    assert loaded.dim == rep.dim
    assert loaded.vocab == rep.vocab
    assert set(loaded.proposal_vecs) == set(rep.proposal_vecs)
    assert set(loaded.reviewer_vecs) == set(rep.reviewer_vecs)

    original = matrix_from_representation(
        rep,
        tuple(p.id for p in synth_corpus.proposals),
        tuple(r.id for r in synth_corpus.reviewers),
    )
    replayed = matrix_from_representation(
        loaded,
        tuple(p.id for p in synth_corpus.proposals),
        tuple(r.id for r in synth_corpus.reviewers),
    )
    np.testing.assert_array_equal(original.scores, replayed.scores)


def test_load_representation_rejects_foreign_kind(tmp_path):
    path = tmp_path / "rep.jsonl"
    path.write_text('{"kind": "expertise_matrix"}\n')
    with pytest.raises(ValueError, match="not a representation"):
        load_representation(path)


def test_self_similarity_reaches_ceiling(synth_corpus):
    # a document compared with itself through the sparse route scores 1
    rep = build_representation("tfidf", synth_corpus)
    some_pid = next(iter(rep.proposal_vecs))
    vec = rep.proposal_vecs[some_pid]
    assert cosine(dense(vec, rep.dim), dense(vec, rep.dim)) == pytest.approx(1.0)
