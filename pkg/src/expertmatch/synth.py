"""Synthetic review-corpus generation from public proposal metadata.

The generator samples proposal records from a source directory, designates
one author per proposal as its reviewer, pulls that author's publication
history from a literature-search API (or from cached responses), and
fabricates keyword selections and self-reported expertise labels. Everything
random flows from one seeded generator, so fixture-mode output is a pure
function of (source directory, size, seed).

Fixture layout inside the source directory:
    proposals.json            list of {title, abstract, authors}
    queries/<sha256>.json     one cached API response per query hash

Live mode fills queries/ on demand and never re-fetches an existing hash,
which means any live run can later be replayed fully offline.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    Corpus, Grade, MAX_KEYWORDS, MIN_KEYWORDS, MIN_PUBLICATION_YEAR,
    Proposal, PublicationRecord, ReviewerProfile, SelfReportedLabel,
)
from .errors import CorpusValidationError
from .tfidf import load_stopwords, tokenize

log = logging.getLogger(__name__)

TOKEN_ENV = "EXPERTMATCH_ADS_KEY"
MIN_REQUEST_INTERVAL_S = 0.2
LABELS_PER_PROPOSAL = 10

_FIELDS = ("title", "abstract", "year", "authors")


@dataclass(frozen=True)
class AdsQuery:
    author: str
    max_rows: int = 200
    year_start: int | None = None
    year_end: int | None = None
    first_author_only: bool = False
    fields: tuple[str, ...] = _FIELDS

    def validate(self) -> None:
        if self.max_rows < 1:
            raise ValueError("max_rows must be at least 1")


def query_hash(query: AdsQuery) -> str:
    query.validate()
    canonical = json.dumps(
        {
            "author": query.author,
            "max_rows": query.max_rows,
            "year_start": query.year_start,
            "year_end": query.year_end,
            "first_author_only": query.first_author_only,
            "fields": list(query.fields),
        },
        sort_keys=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class FixtureStore:
    """Query-hash keyed response cache shared by fixture and live modes."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory) / "queries"

    def path(self, query: AdsQuery) -> Path:
        return self.directory / f"{query_hash(query)}.json"

    def get(self, query: AdsQuery) -> dict | None:
        path = self.path(query)
        if not path.exists():
            return None
        try:
            response = json.loads(path.read_text(encoding="utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorpusValidationError(f"{path}: malformed fixture ({exc})") from exc
        if not isinstance(response, dict) or "docs" not in response:
            raise CorpusValidationError(f"{path}: malformed fixture (no 'docs')")
        return response

    def put(self, query: AdsQuery, response: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path(query).write_text(
            json.dumps(response, sort_keys=True), encoding="utf-8"
        )


class _RateGate:
    """Spaces calls at least MIN_REQUEST_INTERVAL_S apart."""

    def __init__(self, interval_s: float = MIN_REQUEST_INTERVAL_S):
        self.interval_s = interval_s
        self._last = 0.0

    def wait(self) -> None:
        now = time.monotonic()
        delta = now - self._last
        if delta < self.interval_s:
            time.sleep(self.interval_s - delta)
        self._last = time.monotonic()


def fetch_publications(
    query: AdsQuery,
    endpoint: str,
    store: FixtureStore,
    gate: _RateGate | None = None,
) -> dict:
    """Live HTTP fetch with bearer auth, writing through to the store."""
    import requests

    cached = store.get(query)
    if cached is not None:
        return cached
    token = os.environ.get(TOKEN_ENV, "")
    if not token:
        raise RuntimeError(f"live mode needs an API token in ${TOKEN_ENV}")
    if gate is not None:
        gate.wait()
    params = {
        "author": query.author,
        "rows": query.max_rows,
        "fields": ",".join(query.fields),
    }
    if query.year_start is not None:
        params["year_start"] = query.year_start
    if query.year_end is not None:
        params["year_end"] = query.year_end
    if query.first_author_only:
        params["first_author"] = "true"
    resp = requests.get(
        endpoint, params=params,
        headers={"Authorization": f"Bearer {token}"}, timeout=60,
    )
    resp.raise_for_status()
    response = resp.json()
    if not isinstance(response, dict) or "docs" not in response:
        raise RuntimeError(f"unexpected response shape from {endpoint}")
    store.put(query, response)
    return response


def _slug(name: str) -> str:
    cleaned = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return cleaned or "anon"


def _parse_docs(response: dict, author: str, source: str) -> list[PublicationRecord]:
    """Response docs to publication records; unusable docs are dropped."""
    current_year = datetime.date.today().year
    records = []
    dropped = 0
    for doc in response["docs"]:
        title = doc.get("title") or ""
        abstract = doc.get("abstract") or ""
        year = doc.get("year")
        authors = doc.get("authors") or []
        if not title or not abstract or not isinstance(year, int):
            dropped += 1
            continue
        if not MIN_PUBLICATION_YEAR <= year <= current_year:
            dropped += 1
            continue
        records.append(
            PublicationRecord(
                title=title,
                abstract=abstract,
                year=year,
                first_author=bool(authors) and authors[0] == author,
            )
        )
    if dropped:
        log.debug("%s: dropped %d unusable doc(s) for %s", source, dropped, author)
    return records


def _fabricate_keywords(
    text: str,
    vocabulary: tuple[str, ...],
    rng: np.random.Generator,
    stopwords: frozenset[str],
) -> tuple[tuple[str, int], ...]:
    """Sample 2-5 ranked keywords, weighted by token overlap with the text.

    Purely synthetic: real selections come from humans picking from the
    observatory's list, so overlap weighting only has to produce plausible,
    schema-valid choices that correlate with the text.
    """
    tokens = set(tokenize(text, ngram_max=1, stopwords=stopwords))
    weights = np.empty(len(vocabulary))
    for i, kw in enumerate(vocabulary):
        kw_tokens = tokenize(kw, ngram_max=1, stopwords=stopwords)
        overlap = sum(1 for t in kw_tokens if t in tokens)
        weights[i] = 1.0 + 3.0 * overlap
    count = int(rng.integers(MIN_KEYWORDS, MAX_KEYWORDS + 1))
    count = min(count, len(vocabulary))
    chosen = rng.choice(len(vocabulary), size=count, replace=False,
                        p=weights / weights.sum())
    return tuple((vocabulary[int(i)], rank) for rank, i in enumerate(chosen, start=1))


def _fabricate_labels(
    proposal: Proposal,
    designated_id: str,
    reviewers: list[ReviewerProfile],
    category_of: dict[str, str],
    rng: np.random.Generator,
    count: int,
) -> list[SelfReportedLabel]:
    """Grade `count` reviewers per proposal, the designated one always included.

    Grades lean on shared keyword categories so better methods can actually
    score higher, with noise so the ideal ordering is not baked in.
    """
    grade_ladder = (Grade.EXPERT, Grade.INTERMEDIATE, Grade.NON_EXPERT)
    proposal_cats = {category_of[kw] for kw, _rank in proposal.keywords}
    others = [r.id for r in reviewers if r.id != designated_id]
    extra = min(count - 1, len(others))
    picked = [designated_id]
    if extra > 0:
        picked += [
            others[int(i)]
            for i in rng.choice(len(others), size=extra, replace=False)
        ]
    by_id = {r.id: r for r in reviewers}
    labels = []
    for rid in picked:
        if rid == designated_id:
            grade = Grade.EXPERT if rng.random() < 0.7 else Grade.INTERMEDIATE
        else:
            cats = {category_of[kw] for kw, _rank in by_id[rid].keywords}
            odds = [0.35, 0.45, 0.2] if cats & proposal_cats else [0.05, 0.25, 0.7]
            grade = grade_ladder[int(rng.choice(3, p=odds))]
        labels.append(SelfReportedLabel(proposal.id, rid, grade))
    return labels


def _load_source_proposals(root: Path) -> list[dict]:
    path = root / "proposals.json"
    if not path.exists():
        raise CorpusValidationError(f"{path}: missing proposal source file")
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorpusValidationError(f"{path}: malformed fixture ({exc})") from exc
    usable = [
        rec for rec in records
        if isinstance(rec, dict) and rec.get("abstract") and rec.get("authors")
    ]
    if len(usable) < len(records):
        log.debug("%s: %d unusable source record(s) skipped",
                  path, len(records) - len(usable))
    return usable


def generate_synthetic_corpus(
    source: str | Path,
    size: int,
    seed: int,
    vocabulary: tuple[str, ...] | None = None,
    category_map: dict[str, str] | None = None,
    live_endpoint: str | None = None,
    max_rows: int = 200,
    labels_per_proposal: int = LABELS_PER_PROPOSAL,
) -> Corpus:
    """Build a schema-valid corpus of `size` proposals from a source directory.

    With live_endpoint set, publication queries missing from the store are
    fetched over HTTP (rate limited) and cached; otherwise a missing query
    file is an error. The shipped keyword vocabulary is used unless an
    explicit one is given.
    """
    if size < 1:
        raise ValueError("size must be at least 1")
    root = Path(source)
    if vocabulary is None or category_map is None:
        from .keywords import default_keywords

        vocabulary, category_map = default_keywords()
    stopwords = load_stopwords()

    records = _load_source_proposals(root)
    if len(records) < size:
        raise ValueError(
            f"insufficient source records: have {len(records)}, need {size}"
        )

    rng = np.random.default_rng(seed)
    picked = rng.choice(len(records), size=size, replace=False)
    store = FixtureStore(root)
    gate = _RateGate()

    proposals = []
    abstract_of: dict[str, str] = {}
    designation: dict[str, list[str]] = {}  # reviewer id -> proposal ids
    reviewer_names: dict[str, str] = {}     # reviewer id -> author name
    for pos, rec_idx in enumerate(picked, start=1):
        rec = records[int(rec_idx)]
        pid = f"SP-{pos:03d}"
        authors = list(rec["authors"])
        author = authors[int(rng.integers(0, len(authors)))]
        rid = f"RV-{_slug(author)}"
        proposals.append((pid, rec["abstract"]))
        abstract_of[pid] = rec["abstract"]
        designation.setdefault(rid, []).append(pid)
        reviewer_names[rid] = author

    reviewers = []
    for rid in sorted(designation):
        author = reviewer_names[rid]
        query = AdsQuery(author=author, max_rows=max_rows)
        if live_endpoint is not None:
            response = fetch_publications(query, live_endpoint, store, gate)
        else:
            response = store.get(query)
            if response is None:
                raise CorpusValidationError(
                    f"{store.path(query)}: no cached response for author "
                    f"{author!r}; run live mode first"
                )
        publications = _parse_docs(response, author, str(root))
        doc_text = " ".join(p.abstract for p in publications)
        if not doc_text:
            # no usable history: fall back on the designated proposals' text
            # so the keyword sampler still sees something on-topic
            doc_text = " ".join(abstract_of[pid] for pid in designation[rid])
        keywords = _fabricate_keywords(doc_text, vocabulary, rng, stopwords)
        reviewers.append(
            ReviewerProfile(
                id=rid,
                publications=tuple(publications),
                keywords=keywords,
                designated_proposal_ids=tuple(designation[rid]),
            )
        )

    proposal_objs = []
    designated_of = {
        pid: r.id for r in reviewers for pid in r.designated_proposal_ids
    }
    from .corpus import _derive_categories  # shared keyword-to-category logic

    for pid, abstract in proposals:
        keywords = _fabricate_keywords(abstract, vocabulary, rng, stopwords)
        proposal_objs.append(
            Proposal(
                id=pid,
                abstract=abstract,
                keywords=keywords,
                categories=_derive_categories(keywords, category_map),
            )
        )

    label_count = min(labels_per_proposal, len(reviewers))
    labels = []
    for proposal in proposal_objs:
        labels.extend(
            _fabricate_labels(
                proposal, designated_of[proposal.id], reviewers,
                category_map, rng, label_count,
            )
        )

    corpus = Corpus(
        proposals=tuple(proposal_objs),
        reviewers=tuple(reviewers),
        labels=tuple(labels),
        keyword_vocabulary=vocabulary,
        category_map=dict(category_map),
    )
    log.info("generated %d proposals, %d reviewers, %d labels",
             len(proposal_objs), len(reviewers), len(labels))
    return corpus
