"""Generative scoring of reviewer-proposal pairs over a chat-completions API.

Scores are requested with temperature 0 and a fixed sampling seed, and every
completed request is cached on disk keyed by a hash of the exact prompt, so a
finished run replays offline byte-for-byte. The reviewer block leads the user
message: the per-reviewer prefix stays constant across that reviewer's
proposals, which is what makes server-side prompt caching effective.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .errors import ScoreParseError, ScoreRangeError

log = logging.getLogger(__name__)

API_KEY_ENV = "EXPERTMATCH_LLM_KEY"

SYSTEM_PROMPT = """You are an expert in assigning reviewers to proposals at astronomical observatories.
You want to make sure that the reviewers can give high quality and relevant reviews to the proposal they are assigned.

You are given the following input:
- "REVIEWER PAPERS", which is a selection of the most recent papers by the reviewer, containing the title and abstract of each paper.
- "NEW PROPOSAL", which contains the proposal abstract that is under consideration for assignment.

Your task is to assign a score (0-100) evaluating how well the NEW PROPOSAL matches the REVIEWER'S PAPERS.

Consider the following criteria:
1. The score should be based on the similarity between the proposal and the reviewer papers.
2. The score should be higher if the reviewer has more background knowledge and expertise in the proposal.
3. The score should be lower if the reviewer has less background knowledge and expertise in the proposal.

Scoring Scale: Assign any integer score from 0 to 100.
NOTE: Output ONLY the score. Use integer or float. Do not hallucinate."""

# One bare numeric token, nothing else. Anything looser (units, prose,
# multiple numbers) must fail so the retry path kicks in.
_SCORE_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)$")

# transport: request payload -> completion text. Injectable for tests and
# for counting network calls; the default speaks HTTP via requests.
Transport = Callable[[dict], str]


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str
    model: str
    cache_dir: str | Path
    temperature: float = 0.0
    seed: int = 42
    max_in_flight: int = 4
    retries: int = 3

    def validate(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")


@dataclass(frozen=True)
class PairScore:
    proposal_id: str
    reviewer_id: str
    raw_score: float  # in [0, 100]
    scaled: float     # raw_score / 100

    def __post_init__(self):
        if abs(self.scaled - self.raw_score / 100.0) > 1e-12:
            raise ValueError("scaled must equal raw_score / 100")


def build_prompt(
    reviewer_papers: list[tuple[str, str]], proposal_abstract: str
) -> tuple[str, str]:
    """Render the (system, user) message pair for one reviewer-proposal pair.

    Papers arrive most recent first and are emitted in that order. The
    REVIEWER PAPERS block comes before NEW PROPOSAL and is present even when
    the paper list is empty.
    """
    if not proposal_abstract.strip():
        raise ValueError("proposal abstract is empty")
    parts = ["REVIEWER PAPERS:"]
    for title, abstract in reviewer_papers:
        parts.append(f"Title: {title}\nAbstract: {abstract}")
    parts.append(f"NEW PROPOSAL:\n{proposal_abstract}")
    return SYSTEM_PROMPT, "\n\n".join(parts)


def parse_score(completion_text: str) -> float:
    """Extract the numeric score, enforcing the single-token output contract."""
    token = completion_text.strip()
    if not _SCORE_RE.match(token):
        raise ScoreParseError(f"not a bare numeric score: {completion_text!r}")
    value = float(token)
    if not 0.0 <= value <= 100.0:
        raise ScoreRangeError(f"score {value} outside [0, 100]")
    return value


def cache_key(model: str, system_text: str, user_text: str) -> str:
    digest = hashlib.sha256()
    for part in (model, system_text, user_text):
        encoded = part.encode("utf-8")
        digest.update(len(encoded).to_bytes(8, "little"))
        digest.update(encoded)
    return digest.hexdigest()


def http_transport(config: LlmConfig) -> Transport:
    """Default transport: POST to a chat-completions style JSON endpoint."""
    import requests

    api_key = os.environ.get(API_KEY_ENV, "")

    def send(payload: dict) -> str:
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        resp = requests.post(config.endpoint, json=payload, headers=headers, timeout=120)
        resp.raise_for_status()
        body = resp.json()
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ScoreParseError(f"malformed completion body: {body!r}") from exc

    return send


class ScoreCache:
    """One JSON file per prompt hash; writes are atomic and serialized."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> float | None:
        path = self._path(key)
        if not path.exists():
            return None
        entry = json.loads(path.read_text(encoding="utf-8"))
        return float(entry["raw_score"])

    def put(self, key: str, raw_score: float, completion: str, model: str) -> None:
        entry = {"raw_score": raw_score, "completion": completion, "model": model}
        with self._write_lock:
            tmp = self._path(key).with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, sort_keys=True), encoding="utf-8")
            tmp.replace(self._path(key))


def score_pair(
    reviewer_papers: list[tuple[str, str]],
    proposal_abstract: str,
    proposal_id: str,
    reviewer_id: str,
    config: LlmConfig,
    transport: Transport | None = None,
    cache: ScoreCache | None = None,
) -> PairScore:
    """Score one pair, hitting the cache before any network traffic.

    Parse and transport failures are retried up to config.retries times with
    the identical request; an out-of-range value is a hard error since the
    endpoint answered decisively but off-scale.
    """
    config.validate()
    system_text, user_text = build_prompt(reviewer_papers, proposal_abstract)
    key = cache_key(config.model, system_text, user_text)
    if cache is None:
        cache = ScoreCache(config.cache_dir)

    raw = cache.get(key)
    if raw is None:
        if transport is None:
            transport = http_transport(config)
        payload = {
            "model": config.model,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
            "temperature": config.temperature,
            "seed": config.seed,
        }
        last_error: Exception | None = None
        completion = ""
        for attempt in range(1 + config.retries):
            try:
                completion = transport(payload)
                raw = parse_score(completion)
                break
            except ScoreRangeError:
                raise
            except (ScoreParseError, ConnectionError, TimeoutError, OSError) as exc:
                last_error = exc
                log.warning(
                    "attempt %d/%d for %s/%s failed: %s",
                    attempt + 1, 1 + config.retries, proposal_id, reviewer_id, exc,
                )
        if raw is None:
            raise ScoreParseError(
                f"no usable score for {proposal_id}/{reviewer_id} after "
                f"{1 + config.retries} attempts; last completion {completion!r}"
            ) from last_error
        cache.put(key, raw, completion, config.model)

    return PairScore(
        proposal_id=proposal_id, reviewer_id=reviewer_id,
        raw_score=raw, scaled=raw / 100.0,
    )


def score_pairs(
    reviewer_papers_by_id: dict[str, list[tuple[str, str]]],
    proposal_abstracts: dict[str, str],
    config: LlmConfig,
    transport: Transport | None = None,
) -> dict[tuple[str, str], PairScore]:
    """Score every (proposal, reviewer) combination with bounded concurrency."""
    config.validate()
    cache = ScoreCache(config.cache_dir)
    if transport is None:
        transport = http_transport(config)
    pairs = [
        (pid, rid)
        for pid in proposal_abstracts
        for rid in reviewer_papers_by_id
    ]

    def work(pair: tuple[str, str]) -> tuple[tuple[str, str], PairScore]:
        pid, rid = pair
        score = score_pair(
            reviewer_papers_by_id[rid], proposal_abstracts[pid],
            pid, rid, config, transport=transport, cache=cache,
        )
        return pair, score

    results: dict[tuple[str, str], PairScore] = {}
    with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
        for pair, score in pool.map(work, pairs):
            results[pair] = score
    return results
