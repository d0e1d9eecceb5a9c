"""Topic model fitted by collapsed Gibbs sampling on the joint corpus.

Reviewer documents and proposal abstracts train one shared model so both
entity kinds live in the same topic space. Document vectors are posterior
topic proportions averaged over post-burn-in samples, which keeps runs
reproducible for a fixed seed and reduces single-sample variance.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


def _gibbs_sweep_py(token_word, token_doc, assignments, doc_topic, topic_word,
                    topic_totals, alpha, beta, uniforms):
    n_topics, n_vocab = topic_word.shape
    probs = np.empty(n_topics)
    for i in range(token_word.shape[0]):
        w = token_word[i]
        d = token_doc[i]
        k = assignments[i]
        doc_topic[d, k] -= 1
        topic_word[k, w] -= 1
        topic_totals[k] -= 1

        total = 0.0
        for t in range(n_topics):
            p = (topic_word[t, w] + beta) / (topic_totals[t] + n_vocab * beta) \
                * (doc_topic[d, t] + alpha)
            probs[t] = p
            total += p

        r = uniforms[i] * total
        acc = 0.0
        new_k = n_topics - 1
        for t in range(n_topics):
            acc += probs[t]
            if r < acc:
                new_k = t
                break

        assignments[i] = new_k
        doc_topic[d, new_k] += 1
        topic_word[new_k, w] += 1
        topic_totals[new_k] += 1


try:
    from numba import njit

    _gibbs_sweep = njit(_gibbs_sweep_py)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _gibbs_sweep = _gibbs_sweep_py


@dataclass(frozen=True)
class LdaConfig:
    topics: int = 50
    alpha: float | None = None  # None resolves to 1/topics
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 500
    sample_stride: int = 10
    seed: int = 0
    truncation_threshold: float = 0.01

    def resolved_alpha(self) -> float:
        return 1.0 / self.topics if self.alpha is None else self.alpha

    def validate(self) -> None:
        if self.topics < 2:
            raise ValueError(f"need at least 2 topics, got {self.topics}")
        if self.resolved_alpha() <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be positive")


@dataclass(frozen=True)
class LdaModel:
    config: LdaConfig
    vocab: tuple[str, ...]
    topic_word_counts: np.ndarray = field(repr=False)  # averaged post-burn-in, K x V


def fit_lda(documents: list[list[str]], config: LdaConfig) -> tuple[LdaModel, np.ndarray]:
    """Fit the sampler and return the model with one theta row per document.

    Theta rows are averages of (count + alpha) / (len + K*alpha) over every
    sample_stride-th sweep after burn_in, so each row sums to one before any
    truncation. Empty documents receive the uniform prior.
    """
    config.validate()
    if not documents:
        raise ValueError("empty corpus")

    vocab = sorted({t for doc in documents for t in doc})
    if not vocab:
        raise ValueError("no terms in any document")
    term_index = {t: i for i, t in enumerate(vocab)}

    token_word = np.array(
        [term_index[t] for doc in documents for t in doc], dtype=np.int64
    )
    token_doc = np.array(
        [d for d, doc in enumerate(documents) for _ in doc], dtype=np.int64
    )
    n_tokens = token_word.shape[0]
    n_docs = len(documents)
    n_topics = config.topics
    alpha = config.resolved_alpha()

    rng = np.random.default_rng(config.seed)
    assignments = rng.integers(0, n_topics, size=n_tokens, dtype=np.int64)

    doc_topic = np.zeros((n_docs, n_topics), dtype=np.int64)
    topic_word = np.zeros((n_topics, len(vocab)), dtype=np.int64)
    topic_totals = np.zeros(n_topics, dtype=np.int64)
    np.add.at(doc_topic, (token_doc, assignments), 1)
    np.add.at(topic_word, (assignments, token_word), 1)
    np.add.at(topic_totals, assignments, 1)

    doc_lengths = doc_topic.sum(axis=1).astype(np.float64)
    theta_sum = np.zeros((n_docs, n_topics))
    word_sum = np.zeros((n_topics, len(vocab)))
    n_samples = 0

    for sweep in range(1, config.iterations + 1):
        uniforms = rng.random(n_tokens)
        _gibbs_sweep(
            token_word, token_doc, assignments, doc_topic, topic_word,
            topic_totals, alpha, config.beta, uniforms,
        )
        if sweep > config.burn_in and (sweep - config.burn_in) % config.sample_stride == 0:
            theta_sum += (doc_topic + alpha) / (
                doc_lengths[:, None] + n_topics * alpha
            )
            word_sum += topic_word
            n_samples += 1

    if n_samples == 0:
        raise ValueError(
            "no post-burn-in samples taken; increase iterations or lower sample_stride"
        )
    theta = theta_sum / n_samples
    model = LdaModel(
        config=config, vocab=tuple(vocab), topic_word_counts=word_sum / n_samples
    )
    log.debug("fit %d topics on %d documents (%d tokens)", n_topics, n_docs, n_tokens)
    return model, theta


def truncate_theta(theta: np.ndarray, threshold: float) -> np.ndarray:
    """Zero components below threshold, componentwise, without renormalizing."""
    out = np.array(theta, dtype=np.float64, copy=True)
    out[out < threshold] = 0.0
    return out


def save_model(model: LdaModel, path: str | Path) -> None:
    """One JSON header line, then topic-word counts as little-endian float64."""
    header = {
        "kind": "lda_model",
        "config": asdict(model.config),
        "vocab": list(model.vocab),
        "shape": list(model.topic_word_counts.shape),
    }
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(model.topic_word_counts, dtype="<f8").tobytes())


def load_model(path: str | Path) -> LdaModel:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("kind") != "lda_model":
            raise ValueError(f"{path}: not a topic model file")
        counts = np.frombuffer(fh.read(), dtype="<f8").reshape(header["shape"])
    return LdaModel(
        config=LdaConfig(**header["config"]),
        vocab=tuple(header["vocab"]),
        topic_word_counts=counts.astype(np.float64),
    )


def build_lda_vectors(
    proposal_texts: dict[str, str],
    reviewer_documents: dict[str, str],
    config: LdaConfig,
    stopwords: frozenset[str] = frozenset(),
) -> tuple[LdaModel, dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Jointly train on reviewers plus proposals; map ids to raw theta rows."""
    from .tfidf import tokenize

    proposal_ids = list(proposal_texts)
    reviewer_ids = list(reviewer_documents)
    docs = [
        tokenize(proposal_texts[i], ngram_max=1, stopwords=stopwords)
        for i in proposal_ids
    ] + [
        tokenize(reviewer_documents[i], ngram_max=1, stopwords=stopwords)
        for i in reviewer_ids
    ]
    model, theta = fit_lda(docs, config)
    proposal_vecs = {pid: theta[i] for i, pid in enumerate(proposal_ids)}
    reviewer_vecs = {
        rid: theta[len(proposal_ids) + i] for i, rid in enumerate(reviewer_ids)
    }
    return model, proposal_vecs, reviewer_vecs
