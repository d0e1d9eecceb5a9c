"""Encode every corpus abstract and write the embedding interchange file.

One record per abstract. Proposals appear under their own id, reviewer
publications under ``<reviewer_id>#<position>`` where the position indexes
the reviewer's stored publication list, matching what the consumer's
pooling step looks up. Record order is fixed by the corpus (proposals
first, then each reviewer's publications) regardless of batch size.
"""
import logging
from pathlib import Path

import numpy as np

from expertmatch.corpus import Corpus, load_corpus
from expertmatch.embeddings import (
    EmbeddingFile,
    publication_record_id,
    read_embedding_file,
    write_embedding_file,
)

log = logging.getLogger(__name__)

MODEL_ALIASES = {
    # scientific-document encoder, citation-contrastive fine-tune
    "specter2": "allenai/specter2_base",
    # general-purpose sentence encoder
    "sentence": "sentence-transformers/all-distilroberta-v1",
}


def resolve_model(name: str) -> str:
    """Map a short alias to its full model id; pass anything else through."""
    return MODEL_ALIASES.get(name, name)


class SentenceEncoder:
    """sentence-transformers model pinned to CPU for reproducible output.

    Over-length abstracts are truncated by the model's own tokenizer at
    ``max_tokens``; the limit is recorded in the output header so files
    produced under different policies are distinguishable.
    """

    def __init__(self, model_id: str, batch_size: int = 32):
        from sentence_transformers import SentenceTransformer  # heavy, load late

        self.name = model_id
        self.batch_size = batch_size
        self._model = SentenceTransformer(model_id, device="cpu")
        self._model.eval()
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.max_tokens = int(self._model.max_seq_length)

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = self._model.encode(
            list(texts),
            batch_size=self.batch_size,
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float64)


def load_encoder(model: str, batch_size: int = 32) -> SentenceEncoder:
    model_id = resolve_model(model)
    try:
        return SentenceEncoder(model_id, batch_size=batch_size)
    except Exception as exc:  # hub lookup, missing weights, bad id
        raise RuntimeError(f"could not load encoder {model_id!r}: {exc}") from exc


def collect_abstracts(corpus: Corpus) -> list[tuple[str, str]]:
    """(record id, abstract text) pairs in the fixed corpus order."""
    pairs = [(p.id, p.abstract) for p in corpus.proposals]
    for reviewer in corpus.reviewers:
        for pos, pub in enumerate(reviewer.publications):
            pairs.append((publication_record_id(reviewer.id, pos), pub.abstract))
    return pairs


def export_embeddings(
    corpus_dir: str | Path,
    model: str,
    out_path: str | Path,
    encoder=None,
    batch_size: int = 32,
) -> EmbeddingFile:
    """Encode all abstracts under ``corpus_dir`` into one interchange file.

    ``encoder`` overrides the model lookup; anything exposing name, dim,
    max_tokens and encode() fits. The return value is re-read from disk,
    so callers see exactly what a consumer will parse.
    """
    corpus = load_corpus(corpus_dir)
    if encoder is None:
        encoder = load_encoder(model, batch_size=batch_size)
    pairs = collect_abstracts(corpus)
    ids = [rid for rid, _ in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("proposal ids collide with publication record keys")

    header_model = f"{encoder.name}@maxlen{encoder.max_tokens}"
    if not pairs:
        write_embedding_file(out_path, header_model, {}, dim=encoder.dim)
        return read_embedding_file(out_path)

    vectors = encoder.encode([text for _, text in pairs])
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.shape != (len(pairs), encoder.dim):
        raise RuntimeError(
            f"encoder returned shape {vectors.shape}, "
            f"want {(len(pairs), encoder.dim)}"
        )
    write_embedding_file(
        out_path, header_model, {rid: vectors[i] for i, rid in enumerate(ids)}
    )
    log.info("encoded %d abstracts with %s", len(pairs), encoder.name)
    return read_embedding_file(out_path)
