import math

import numpy as np
import pytest

from expertmatch.tfidf import (
    SparseVector,
    build_tfidf_vectors,
    fit_vocabulary,
    idf,
    load_stopwords,
    tfidf_vectorize,
    tokenize,
    transform,
)


def test_tokenize_lowercases_and_splits():
    assert tokenize("X-ray Binaries, NGC-1275!") == ["ray", "binaries", "ngc", "1275"]


def test_tokenize_drops_single_character_tokens():
    assert tokenize("a m dwarf of type M") == ["dwarf", "of", "type"]


def test_underscore_is_a_separator():
    assert tokenize("dark_matter halo") == ["dark", "matter", "halo"]


def test_stopwords_removed_before_bigrams():
    # bigrams bridge removed words, so "white dwarf" survives as a pair
    got = tokenize("the white dwarf", ngram_max=2, stopwords=frozenset({"the"}))
    assert got == ["white", "dwarf", "white dwarf"]


def test_bigrams_appended_after_unigrams():
    got = tokenize("hot jupiter atmospheres", ngram_max=2)
    assert got == [
        "hot",
        "jupiter",
        "atmospheres",
        "hot jupiter",
        "jupiter atmospheres",
    ]


def test_ngram_max_bounds():
    with pytest.raises(ValueError, match="ngram_max"):
        tokenize("text", ngram_max=3)


def test_default_stopword_list_loads():
    words = load_stopwords()
    assert "the" in words and "and" in words
    assert "galaxy" not in words


def test_stopwords_from_file(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("alpha\n\nbeta\n")
    assert load_stopwords(path) == frozenset({"alpha", "beta"})


def test_idf_of_ubiquitous_term_is_exactly_one():
    vocab = fit_vocabulary([["star"], ["star"], ["star"]])
    assert idf("star", vocab) == 1.0


def test_idf_smoothed_value():
    # term in 1 of 3 documents: ln((1+3)/(1+1)) + 1 = ln 2 + 1
    vocab = fit_vocabulary([["nova", "star"], ["star"], ["star"]])
    assert idf("nova", vocab) == pytest.approx(1.0 + math.log(2.0), rel=1e-15)
    assert idf("nova", vocab) == pytest.approx(1.6931471805599454, rel=1e-15)


def test_idf_unknown_term_raises():
    vocab = fit_vocabulary([["star"]])
    with pytest.raises(KeyError):
        idf("quasar", vocab)


def test_vocabulary_is_sorted_and_counts_documents_once():
    vocab = fit_vocabulary([["b", "aa", "aa"], ["cc", "aa"]])
    # "b" is kept here: length filtering happens in tokenize, not fitting
    assert list(vocab.index) == sorted(vocab.index)
    assert vocab.document_frequency["aa"] == 2  # repeats within a doc count once
    assert vocab.n_docs == 2


def test_min_document_frequency_prunes():
    vocab = fit_vocabulary([["aa", "bb"], ["aa"]], min_document_frequency=2)
    assert list(vocab.index) == ["aa"]


def test_empty_vocabulary_rejected():
    with pytest.raises(ValueError, match="no terms"):
        fit_vocabulary([[], []])


def test_transform_multiplies_count_by_idf():
    vocab = fit_vocabulary([["nova", "nova", "star"], ["star"], ["star"]])
    vec = transform(["nova", "nova", "star"], vocab)
    lookup = dict(zip(vec.indices.tolist(), vec.values.tolist()))
    assert lookup[vocab.index["nova"]] == pytest.approx(2 * (1 + math.log(2)))
    assert lookup[vocab.index["star"]] == pytest.approx(1.0)


def test_transform_ignores_unknown_terms():
    vocab = fit_vocabulary([["star"]])
    vec = transform(["quasar", "star"], vocab)
    assert vec.nnz == 1
    empty = transform(["quasar"], vocab)
    assert empty.nnz == 0 and empty.norm() == 0.0


def test_transform_indices_strictly_increasing():
    docs = [["cc", "aa", "bb", "aa"], ["aa"]]
    vocab = fit_vocabulary(docs)
    vec = transform(docs[0], vocab)
    assert np.all(np.diff(vec.indices) > 0)


def test_sparse_vector_shape_mismatch():
    with pytest.raises(ValueError):
        SparseVector(indices=np.array([0, 1]), values=np.array([1.0]))


def test_vectorize_returns_one_vector_per_document():
    vocab, vectors = tfidf_vectorize(["red stars", "blue stars"], ngram_max=1)
    assert len(vectors) == 2
    assert vocab.n_docs == 2


def test_joint_fit_shares_one_vocabulary():
    vocab, prop, revs = build_tfidf_vectors(
        {"P1": "pulsar timing"},
        {"R1": "pulsar searches", "R2": "galaxy surveys"},
        ngram_max=1,
    )
    # same term, same coordinate on both sides of the fit
    idx = vocab.index["pulsar"]
    assert idx in prop["P1"].indices.tolist()
    assert idx in revs["R1"].indices.tolist()
    assert set(prop) == {"P1"} and set(revs) == {"R1", "R2"}
    assert vocab.n_docs == 3
