"""Corpus loading, validation, and reviewer document construction.

A corpus directory contains four files:

* ``proposals.jsonl``   one JSON object per line: id, abstract, keywords
* ``reviewers.jsonl``   id, designated_proposals, keywords, publications
* ``labels.csv``        proposal_id,reviewer_id,grade
* ``keywords.json``     keyword vocabulary plus keyword -> category map
"""

from __future__ import annotations

import csv
import datetime
import enum
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .errors import CorpusValidationError

log = logging.getLogger(__name__)

MIN_KEYWORDS = 2
MAX_KEYWORDS = 5
MIN_PUBLICATION_YEAR = 1900


class Grade(enum.Enum):
    EXPERT = "Expert"
    INTERMEDIATE = "Intermediate"
    NON_EXPERT = "NonExpert"

    @classmethod
    def parse(cls, text: str) -> "Grade":
        for grade in cls:
            if grade.value == text:
                return grade
        raise CorpusValidationError(f"unknown grade {text!r}")


@dataclass(frozen=True)
class PublicationRecord:
    title: str
    abstract: str
    year: int
    first_author: bool


@dataclass(frozen=True)
class Proposal:
    id: str
    abstract: str
    keywords: tuple[tuple[str, int], ...]
    categories: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class ReviewerProfile:
    id: str
    publications: tuple[PublicationRecord, ...]
    keywords: tuple[tuple[str, int], ...]
    designated_proposal_ids: tuple[str, ...]


@dataclass(frozen=True)
class SelfReportedLabel:
    proposal_id: str
    reviewer_id: str
    grade: Grade


@dataclass(frozen=True)
class QueryConfig:
    """Publication selection filter for reviewer documents."""

    max_papers: int = 25
    window_years: int = 5
    first_author_only: bool = False

    def validate(self) -> None:
        if self.max_papers < 1 or self.window_years < 1:
            raise ValueError("max_papers and window_years must be positive")


@dataclass(frozen=True, eq=True)
class Corpus:
    proposals: tuple[Proposal, ...]
    reviewers: tuple[ReviewerProfile, ...]
    labels: tuple[SelfReportedLabel, ...]
    keyword_vocabulary: tuple[str, ...]
    category_map: dict[str, str]

    @cached_property
    def proposals_by_id(self) -> dict[str, Proposal]:
        return {p.id: p for p in self.proposals}

    @cached_property
    def reviewers_by_id(self) -> dict[str, ReviewerProfile]:
        return {r.id: r for r in self.reviewers}

    @cached_property
    def designated_pairs(self) -> tuple[tuple[str, str], ...]:
        """All (proposal_id, reviewer_id) pairs a reviewer was designated for."""
        pairs = [
            (pid, reviewer.id)
            for reviewer in self.reviewers
            for pid in reviewer.designated_proposal_ids
        ]
        return tuple(sorted(pairs))

    @cached_property
    def labels_by_proposal(self) -> dict[str, tuple[SelfReportedLabel, ...]]:
        grouped: dict[str, list[SelfReportedLabel]] = {}
        for label in self.labels:
            grouped.setdefault(label.proposal_id, []).append(label)
        return {pid: tuple(ls) for pid, ls in grouped.items()}


def _derive_categories(
    keywords: tuple[tuple[str, int], ...], category_map: dict[str, str]
) -> tuple[str, ...]:
    seen: list[str] = []
    for kw, _rank in keywords:
        cat = category_map[kw]
        if cat not in seen:
            seen.append(cat)
    return tuple(seen)


def _check_keywords(
    keywords: list[tuple[str, int]],
    owner: str,
    category_map: dict[str, str],
    allow_empty: bool,
) -> tuple[tuple[str, int], ...]:
    if not keywords and allow_empty:
        return ()
    if not MIN_KEYWORDS <= len(keywords) <= MAX_KEYWORDS:
        raise CorpusValidationError(
            f"{owner}: keyword count out of [{MIN_KEYWORDS},{MAX_KEYWORDS}] "
            f"(got {len(keywords)})"
        )
    ranks = [rank for _kw, rank in keywords]
    if ranks != list(range(1, len(ranks) + 1)):
        raise CorpusValidationError(
            f"{owner}: keyword ranks must be 1..{len(ranks)} without gaps, got {ranks}"
        )
    for kw, _rank in keywords:
        if kw not in category_map:
            raise CorpusValidationError(f"{owner}: keyword {kw!r} not in vocabulary")
    return tuple(keywords)


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusValidationError(
                    f"{path.name}: line {lineno}: invalid JSON ({exc})"
                ) from exc
    return records


def _parse_keyword_list(raw, owner: str) -> list[tuple[str, int]]:
    try:
        return [(entry["kw"], int(entry["rank"])) for entry in raw]
    except (KeyError, TypeError) as exc:
        raise CorpusValidationError(f"{owner}: malformed keyword entry") from exc


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a corpus directory, resolving all cross references."""
    root = Path(path)
    for name in ("proposals.jsonl", "reviewers.jsonl", "labels.csv", "keywords.json"):
        if not (root / name).exists():
            raise CorpusValidationError(f"{name}: missing from corpus directory {root}")

    with (root / "keywords.json").open(encoding="utf-8") as fh:
        kw_data = json.load(fh)
    vocabulary = tuple(kw_data["vocabulary"])
    category_map = dict(kw_data["categories"])
    missing = [kw for kw in vocabulary if kw not in category_map]
    if missing:
        raise CorpusValidationError(
            f"keywords.json: vocabulary entries without category: {missing[:5]}"
        )

    current_year = datetime.date.today().year
    proposals = []
    for rec in _read_jsonl(root / "proposals.jsonl"):
        owner = f"proposals.jsonl: proposal {rec.get('id', '?')!r}"
        if not rec.get("abstract"):
            raise CorpusValidationError(f"{owner}: empty abstract")
        keywords = _check_keywords(
            _parse_keyword_list(rec.get("keywords", []), owner),
            owner,
            category_map,
            allow_empty=False,
        )
        proposals.append(
            Proposal(
                id=rec["id"],
                abstract=rec["abstract"],
                keywords=keywords,
                categories=_derive_categories(keywords, category_map),
            )
        )

    reviewers = []
    for rec in _read_jsonl(root / "reviewers.jsonl"):
        owner = f"reviewers.jsonl: reviewer {rec.get('id', '?')!r}"
        publications = []
        for pub in rec.get("publications", []):
            if not pub.get("abstract"):
                raise CorpusValidationError(
                    f"{owner}: publication {pub.get('title', '?')!r} has empty abstract"
                )
            year = int(pub["year"])
            if not MIN_PUBLICATION_YEAR <= year <= current_year:
                raise CorpusValidationError(
                    f"{owner}: publication year {year} out of "
                    f"[{MIN_PUBLICATION_YEAR},{current_year}]"
                )
            publications.append(
                PublicationRecord(
                    title=pub["title"],
                    abstract=pub["abstract"],
                    year=year,
                    first_author=bool(pub["first_author"]),
                )
            )
        keywords = _check_keywords(
            _parse_keyword_list(rec.get("keywords", []), owner),
            owner,
            category_map,
            allow_empty=bool(publications),
        )
        designated = tuple(rec.get("designated_proposals", []))
        if not designated:
            raise CorpusValidationError(f"{owner}: no designated proposals")
        reviewers.append(
            ReviewerProfile(
                id=rec["id"],
                publications=tuple(publications),
                keywords=keywords,
                designated_proposal_ids=designated,
            )
        )

    labels = []
    with (root / "labels.csv").open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            labels.append(
                SelfReportedLabel(
                    proposal_id=row["proposal_id"],
                    reviewer_id=row["reviewer_id"],
                    grade=Grade.parse(row["grade"]),
                )
            )

    corpus = Corpus(
        proposals=tuple(proposals),
        reviewers=tuple(reviewers),
        labels=tuple(labels),
        keyword_vocabulary=vocabulary,
        category_map=category_map,
    )
    _validate_cross_references(corpus)
    return corpus


def _validate_cross_references(corpus: Corpus) -> None:
    proposal_ids = {p.id for p in corpus.proposals}
    reviewer_ids = {r.id for r in corpus.reviewers}
    if len(proposal_ids) != len(corpus.proposals):
        raise CorpusValidationError("proposals.jsonl: duplicate proposal ids")
    if len(reviewer_ids) != len(corpus.reviewers):
        raise CorpusValidationError("reviewers.jsonl: duplicate reviewer ids")

    for reviewer in corpus.reviewers:
        for pid in reviewer.designated_proposal_ids:
            if pid not in proposal_ids:
                raise CorpusValidationError(
                    f"reviewers.jsonl: reviewer {reviewer.id!r} designates "
                    f"unknown proposal {pid!r}"
                )

    seen_pairs = set()
    per_proposal: dict[str, int] = {}
    for label in corpus.labels:
        if label.proposal_id not in proposal_ids:
            raise CorpusValidationError(
                f"labels.csv: unknown proposal {label.proposal_id!r}"
            )
        if label.reviewer_id not in reviewer_ids:
            raise CorpusValidationError(
                f"labels.csv: unknown reviewer {label.reviewer_id!r}"
            )
        pair = (label.proposal_id, label.reviewer_id)
        if pair in seen_pairs:
            raise CorpusValidationError(f"labels.csv: duplicate label for pair {pair}")
        seen_pairs.add(pair)
        per_proposal[label.proposal_id] = per_proposal.get(label.proposal_id, 0) + 1

    if per_proposal:
        counts = {per_proposal.get(pid, 0) for pid in proposal_ids}
        if len(counts) > 1:
            raise CorpusValidationError(
                f"labels.csv: unequal label counts per proposal: {sorted(counts)}"
            )


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to the on-disk layout read by :func:`load_corpus`."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    with (root / "proposals.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for p in corpus.proposals:
            fh.write(
                json.dumps(
                    {
                        "id": p.id,
                        "abstract": p.abstract,
                        "keywords": [{"kw": kw, "rank": rank} for kw, rank in p.keywords],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    with (root / "reviewers.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for r in corpus.reviewers:
            fh.write(
                json.dumps(
                    {
                        "id": r.id,
                        "designated_proposals": list(r.designated_proposal_ids),
                        "keywords": [{"kw": kw, "rank": rank} for kw, rank in r.keywords],
                        "publications": [
                            {
                                "title": pub.title,
                                "abstract": pub.abstract,
                                "year": pub.year,
                                "first_author": pub.first_author,
                            }
                            for pub in r.publications
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    with (root / "labels.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["proposal_id", "reviewer_id", "grade"])
        for label in corpus.labels:
            writer.writerow([label.proposal_id, label.reviewer_id, label.grade.value])

    with (root / "keywords.json").open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {"vocabulary": list(corpus.keyword_vocabulary), "categories": corpus.category_map},
            fh,
            indent=2,
            ensure_ascii=False,
            sort_keys=True,
        )
        fh.write("\n")


def select_publications(
    reviewer: ReviewerProfile,
    query: QueryConfig,
    reference_year: int,
) -> tuple[int, ...]:
    """Indices of the publications surviving the query filter, most recent first.

    Ties in year break on lexicographic title so document construction is
    order-stable under permutation of the input publication list.
    """
    candidates = [
        (idx, pub)
        for idx, pub in enumerate(reviewer.publications)
        if pub.year > reference_year - query.window_years
        and (pub.first_author or not query.first_author_only)
    ]
    candidates.sort(key=lambda item: (-item[1].year, item[1].title))
    return tuple(idx for idx, _pub in candidates[: query.max_papers])


def corpus_reference_year(corpus: Corpus) -> int:
    """Most recent publication year in the corpus; anchors recency windows."""
    years = [pub.year for r in corpus.reviewers for pub in r.publications]
    return max(years) if years else datetime.date.today().year


def build_reviewer_documents(
    corpus: Corpus,
    query: QueryConfig,
    reference_year: int | None = None,
) -> dict[str, str]:
    """Concatenate each reviewer's filtered publication abstracts into one document.

    Reviewers whose publications all fall outside the filter map to the empty
    string; they are reported via the module logger rather than treated as fatal.
    """
    query.validate()
    if reference_year is None:
        reference_year = corpus_reference_year(corpus)
    documents = {}
    empty = []
    for reviewer in corpus.reviewers:
        indices = select_publications(reviewer, query, reference_year)
        documents[reviewer.id] = " ".join(
            reviewer.publications[i].abstract for i in indices
        )
        if not documents[reviewer.id]:
            empty.append(reviewer.id)
    if empty:
        log.warning(
            "%d reviewer(s) with empty documents under %s: %s",
            len(empty),
            query,
            ", ".join(empty[:10]),
        )
    return documents
