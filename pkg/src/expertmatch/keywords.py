"""Weighted keyword vectors and the two-level keyword matching score.

Entities carry 2..5 ranked keywords. Rank r maps to weight 5 - r + 1, so the
first keyword weighs 5, the second 4, and so on. Categories inherit the same
weighting scheme by order of first appearance among the ranked keywords. The
total score is the sum of the keyword-level and category-level cosines and
therefore lives in [0, 2].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

from .errors import CorpusValidationError

MAX_WEIGHT = 5


def default_keywords() -> tuple[tuple[str, ...], dict[str, str]]:
    """The shipped selection vocabulary: (ordered keywords, keyword -> category)."""
    raw = json.loads(
        resources.files("expertmatch").joinpath("data/keywords.json").read_text("utf-8")
    )
    return tuple(raw["vocabulary"]), dict(raw["categories"])


@dataclass(frozen=True)
class KeywordVector:
    weights: dict[str, int]
    category_weights: dict[str, int]


@dataclass(frozen=True)
class KeywordScore:
    keyword_score: float
    category_score: float
    total: float


def keyword_vector(
    entity_keywords: list[tuple[str, int]] | tuple[tuple[str, int], ...],
    category_map: dict[str, str],
) -> KeywordVector:
    """Build the sparse weight vectors for one entity's ranked keyword list."""
    if not 2 <= len(entity_keywords) <= MAX_WEIGHT:
        raise ValueError(f"expected 2..{MAX_WEIGHT} keywords, got {len(entity_keywords)}")
    ranks = [rank for _kw, rank in entity_keywords]
    if ranks != list(range(1, len(ranks) + 1)):
        raise ValueError(f"keyword ranks must be 1..{len(ranks)}, got {ranks}")

    weights = {}
    category_order: list[str] = []
    for kw, rank in entity_keywords:
        if kw not in category_map:
            raise CorpusValidationError(f"keyword {kw!r} not in vocabulary")
        weights[kw] = MAX_WEIGHT - rank + 1
        cat = category_map[kw]
        if cat not in category_order:
            category_order.append(cat)
    category_weights = {
        cat: MAX_WEIGHT - order + 1 for order, cat in enumerate(category_order, start=1)
    }
    return KeywordVector(weights=weights, category_weights=category_weights)


def _sparse_cosine(a: dict[str, int], b: dict[str, int]) -> float:
    dot = sum(w * b[key] for key, w in a.items() if key in b)
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def keyword_similarity(a: KeywordVector, b: KeywordVector) -> KeywordScore:
    """Keyword-level and category-level cosines plus their sum.

    The category term is always added, not only on keyword misses: a perfect
    match in both levels is what makes the maximum of 2 reachable.
    """
    s_keyword = _sparse_cosine(a.weights, b.weights)
    s_category = _sparse_cosine(a.category_weights, b.category_weights)
    return KeywordScore(
        keyword_score=s_keyword,
        category_score=s_category,
        total=s_keyword + s_category,
    )
