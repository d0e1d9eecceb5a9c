"""Batch abstract encoder feeding the expertise-matrix pipeline."""
from .exporter import (
    MODEL_ALIASES,
    SentenceEncoder,
    collect_abstracts,
    export_embeddings,
    load_encoder,
    resolve_model,
)

__all__ = [
    "MODEL_ALIASES",
    "SentenceEncoder",
    "collect_abstracts",
    "export_embeddings",
    "load_encoder",
    "resolve_model",
]
