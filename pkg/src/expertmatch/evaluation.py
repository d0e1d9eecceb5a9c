"""Retrieval metrics, bootstrap intervals, and paired significance tests.

Two ground truths drive the metrics. The designated reviewer of each proposal
acts as a proxy gold expert for rank-based metrics (rank, MRR, Hit@k,
z-score), and self-reported expertise grades drive a graded-relevance NDCG.
Aggregates carry percentile-bootstrap confidence intervals; method pairs are
compared with a Wilcoxon signed-rank test over per-proposal units.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .corpus import Corpus, Grade
from .errors import InsufficientPairsError
from .similarity import ExpertiseMatrix

log = logging.getLogger(__name__)

DEFAULT_GAINS = {Grade.EXPERT: 10.0, Grade.INTERMEDIATE: 2.0, Grade.NON_EXPERT: 0.0}

# Effective sample sizes up to this use the exact sign-assignment null;
# larger ones use the normal approximation with continuity correction.
EXACT_WILCOXON_LIMIT = 25

STATISTICS = {"mean": np.mean, "median": np.median}


@dataclass(frozen=True)
class RankResult:
    proposal_id: str
    designated_reviewer_id: str
    rank: int  # 1-based position after descending-score sort
    similarity: float
    tie_count: int  # reviewers sharing the designated reviewer's score


@dataclass(frozen=True)
class MetricSummary:
    metric: str
    point: float
    ci_low: float
    ci_high: float
    n_resamples: int


@dataclass(frozen=True)
class EvalConfig:
    hit_k: int = 25
    gains: dict[Grade, float] = field(default_factory=lambda: dict(DEFAULT_GAINS))
    bootstrap_n: int = 10000
    seed: int = 0

    def validate(self) -> None:
        if self.hit_k < 1:
            raise ValueError("hit_k must be at least 1")
        if self.bootstrap_n < 1:
            raise ValueError("bootstrap_n must be at least 1")
        ordered = [Grade.EXPERT, Grade.INTERMEDIATE, Grade.NON_EXPERT]
        values = [self.gains[g] for g in ordered]
        if any(a < b for a, b in zip(values, values[1:])):
            raise ValueError(f"gains must be non-increasing over {ordered}")


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min of the signed rank sums
    p_value: float    # two-sided
    n_effective: int  # pairs left after dropping zero differences
    method: str       # "exact" or "normal"


def _score_order(matrix: ExpertiseMatrix, proposal_id: str) -> list[int]:
    """Column indices sorted by descending score, ties by ascending reviewer id."""
    scores = matrix.proposal_scores(proposal_id)
    return sorted(
        range(len(matrix.reviewer_ids)),
        key=lambda j: (-scores[j], matrix.reviewer_ids[j]),
    )


def designated_rank(
    matrix: ExpertiseMatrix, proposal_id: str, designated_reviewer_id: str
) -> RankResult:
    """1-based rank of the designated reviewer in the proposal's score column."""
    if proposal_id not in matrix.proposal_index:
        raise KeyError(f"unknown proposal id {proposal_id!r}")
    if designated_reviewer_id not in matrix.reviewer_index:
        raise KeyError(f"unknown reviewer id {designated_reviewer_id!r}")
    scores = matrix.proposal_scores(proposal_id)
    target = matrix.reviewer_index[designated_reviewer_id]
    order = _score_order(matrix, proposal_id)
    rank = order.index(target) + 1
    similarity = float(scores[target])
    tie_count = int(np.count_nonzero(scores == similarity))
    return RankResult(proposal_id, designated_reviewer_id, rank, similarity, tie_count)


def mrr(ranks: list[int]) -> float:
    """Mean reciprocal rank."""
    if not ranks:
        raise ValueError("no ranks given")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks must be >= 1")
    return float(np.mean([1.0 / r for r in ranks]))


def hit_at_k(ranks: list[int], k: int) -> float:
    """Fraction of ranks within the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not ranks:
        raise ValueError("no ranks given")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def zscore(
    matrix: ExpertiseMatrix, proposal_id: str, designated_reviewer_id: str
) -> float:
    """Standardized designated score against the proposal's full score column.

    Mean and population standard deviation run over every reviewer including
    the designated one. A constant column has no z-score; NaN is returned and
    aggregation counts the exclusion.
    """
    scores = matrix.proposal_scores(proposal_id)
    if scores.shape[0] < 2:
        raise ValueError("z-score needs at least 2 reviewers")
    target = matrix.reviewer_index[designated_reviewer_id]
    sigma = float(np.std(scores))  # population form, ddof=0
    if sigma == 0.0:
        return math.nan
    return (float(scores[target]) - float(np.mean(scores))) / sigma


def ndcg_at_k(ordered_grades: list[Grade], config: EvalConfig) -> tuple[float, bool]:
    """Graded-relevance NDCG of grades listed in the method's score order.

    Returns (value, degenerate) where degenerate marks an all-zero-gain list,
    scored 0.0 so uninformative orderings earn nothing.
    """
    if not ordered_grades:
        raise ValueError("no grades given")
    gains = [config.gains[g] for g in ordered_grades]
    dcg = sum(g / math.log2(j + 1) for j, g in enumerate(gains, start=1))
    ideal = sorted(gains, reverse=True)
    idcg = sum(g / math.log2(j + 1) for j, g in enumerate(ideal, start=1))
    if idcg == 0.0:
        return 0.0, True
    return dcg / idcg, False


def bootstrap_ci(
    values: list[float],
    statistic: str = "mean",
    n_resamples: int = 10000,
    seed: int = 0,
    name: str | None = None,
) -> MetricSummary:
    """Percentile bootstrap of a named statistic; deterministic per seed."""
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; want one of {sorted(STATISTICS)}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no values given")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    agg = STATISTICS[statistic]
    rng = np.random.default_rng(seed)
    resampled = np.empty(n_resamples)
    # Chunked to bound the index buffer on large inputs; the draw sequence,
    # hence the result, is identical to a single full-size call.
    chunk = max(1, min(n_resamples, 4_000_000 // max(1, arr.size)))
    done = 0
    while done < n_resamples:
        take = min(chunk, n_resamples - done)
        idx = rng.integers(0, arr.size, size=(take, arr.size))
        resampled[done:done + take] = agg(arr[idx], axis=1)
        done += take
    low, high = np.percentile(resampled, [2.5, 97.5])
    return MetricSummary(
        metric=name or statistic,
        point=float(agg(arr)),
        ci_low=float(low),
        ci_high=float(high),
        n_resamples=n_resamples,
    )


def _exact_signed_rank_p(doubled_ranks: list[int], doubled_t: int, n: int) -> float:
    """Two-sided tail mass of the sign-assignment null, via subset-sum counts.

    Ranks arrive doubled so tie-averaged half-ranks become integers. The null
    sum distribution is symmetric, so double the lower tail at min(W+, W-).
    """
    total = sum(doubled_ranks)
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for dr in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[dr:] = counts[:total + 1 - dr]
        counts = counts + shifted
    tail = float(counts[: doubled_t + 1].sum()) / (2.0 ** n)
    return min(1.0, 2.0 * tail)


def wilcoxon_signed_rank(paired_a: list[float], paired_b: list[float]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired observations.

    Zero differences are dropped; tied absolute differences get average
    ranks. Small samples use the exact null by enumeration of sign
    assignments, larger ones a normal approximation with tie-corrected
    variance and continuity correction.
    """
    if len(paired_a) != len(paired_b):
        raise ValueError(f"length mismatch: {len(paired_a)} vs {len(paired_b)}")
    diffs = np.asarray(paired_a, dtype=np.float64) - np.asarray(paired_b, dtype=np.float64)
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n < 5:
        raise InsufficientPairsError(
            f"insufficient pairs: {n} nonzero difference(s), need at least 5"
        )
    ranks = rankdata(np.abs(diffs))  # average ranks for ties
    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())
    t = min(w_plus, w_minus)

    if n <= EXACT_WILCOXON_LIMIT:
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_signed_rank_p(doubled, int(math.floor(2 * t + 1e-9)), n)
        return WilcoxonResult(statistic=t, p_value=p, n_effective=n, method="exact")

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var -= float(((tie_sizes ** 3 - tie_sizes) / 48.0).sum())
    if var <= 0:
        raise InsufficientPairsError("insufficient pairs: all differences tied away")
    z = (t - mean + 0.5) / math.sqrt(var)
    p = min(1.0, math.erfc(-z / math.sqrt(2.0)))  # 2 * Phi(z)
    return WilcoxonResult(statistic=t, p_value=p, n_effective=n, method="normal")


def significance_marker(p_value: float) -> str:
    if p_value < 0.01:
        return "†"  # dagger
    if p_value < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class MethodEvaluation:
    method: str
    rank_results: tuple[RankResult, ...]
    reciprocal_ranks: tuple[float, ...]
    hits: tuple[float, ...]              # 0/1 per designated pair
    z_values: tuple[float, ...]          # NaN-free, aligned with z_pair_keys
    z_excluded: int                      # pairs dropped for zero spread
    z_pair_keys: tuple[tuple[str, str], ...]
    ndcg_values: tuple[float, ...]       # one per labeled proposal
    ndcg_proposal_ids: tuple[str, ...]
    ndcg_flagged: int                    # proposals with an all-zero ideal
    summaries: dict[str, MetricSummary]

    @property
    def pair_keys(self) -> tuple[tuple[str, str], ...]:
        return tuple((r.proposal_id, r.designated_reviewer_id) for r in self.rank_results)


def evaluate_matrix(
    matrix: ExpertiseMatrix, corpus: Corpus, config: EvalConfig = EvalConfig()
) -> MethodEvaluation:
    """All metrics for one matrix against the corpus's gold structures."""
    config.validate()
    if not corpus.designated_pairs:
        raise ValueError("corpus has no designated reviewer pairs")

    rank_results = []
    z_values = []
    z_pair_keys = []
    z_excluded = 0
    for pid, rid in corpus.designated_pairs:
        rank_results.append(designated_rank(matrix, pid, rid))
        z = zscore(matrix, pid, rid)
        if math.isnan(z):
            z_excluded += 1
        else:
            z_values.append(z)
            z_pair_keys.append((pid, rid))
    ranks = [r.rank for r in rank_results]
    reciprocal = [1.0 / r for r in ranks]
    hits = [1.0 if r <= config.hit_k else 0.0 for r in ranks]

    ndcg_values = []
    ndcg_ids = []
    ndcg_flagged = 0
    for pid in sorted(corpus.labels_by_proposal):
        labels = corpus.labels_by_proposal[pid]
        grade_of = {lab.reviewer_id: lab.grade for lab in labels}
        ordered = [
            grade_of[matrix.reviewer_ids[j]]
            for j in _score_order(matrix, pid)
            if matrix.reviewer_ids[j] in grade_of
        ]
        value, degenerate = ndcg_at_k(ordered, config)
        ndcg_values.append(value)
        ndcg_ids.append(pid)
        if degenerate:
            ndcg_flagged += 1

    n, seed = config.bootstrap_n, config.seed
    summaries = {
        "median_rank": bootstrap_ci([float(r) for r in ranks], "median", n, seed, "median_rank"),
        "mrr": bootstrap_ci(reciprocal, "mean", n, seed, "mrr"),
        f"hit@{config.hit_k}": bootstrap_ci(hits, "mean", n, seed, f"hit@{config.hit_k}"),
    }
    if z_values:
        summaries["zscore"] = bootstrap_ci(z_values, "mean", n, seed, "zscore")
    if ndcg_values:
        summaries["ndcg"] = bootstrap_ci(ndcg_values, "mean", n, seed, "ndcg")
    if z_excluded:
        log.info("%s: %d designated pair(s) without z-score (zero spread)",
                 matrix.method, z_excluded)

    return MethodEvaluation(
        method=matrix.method,
        rank_results=tuple(rank_results),
        reciprocal_ranks=tuple(reciprocal),
        hits=tuple(hits),
        z_values=tuple(z_values),
        z_excluded=z_excluded,
        z_pair_keys=tuple(z_pair_keys),
        ndcg_values=tuple(ndcg_values),
        ndcg_proposal_ids=tuple(ndcg_ids),
        ndcg_flagged=ndcg_flagged,
        summaries=summaries,
    )


def compare_methods(
    a: MethodEvaluation, b: MethodEvaluation
) -> dict[str, WilcoxonResult | None]:
    """Paired Wilcoxon tests between two evaluated methods, per metric.

    Rank metrics pair per designated (proposal, reviewer); NDCG pairs per
    labeled proposal; z-scores pair on designated pairs scored by both.
    A metric whose pairing collapses (too few nonzero differences) maps to
    None rather than aborting the report.
    """
    out: dict[str, WilcoxonResult | None] = {}

    def paired(xa, keys_a, xb, keys_b):
        index_b = {k: v for k, v in zip(keys_b, xb)}
        pairs = [(va, index_b[ka]) for ka, va in zip(keys_a, xa) if ka in index_b]
        return [p[0] for p in pairs], [p[1] for p in pairs]

    jobs = {
        "reciprocal_rank": paired(a.reciprocal_ranks, a.pair_keys,
                                  b.reciprocal_ranks, b.pair_keys),
        "hit": paired(a.hits, a.pair_keys, b.hits, b.pair_keys),
        "zscore": paired(a.z_values, a.z_pair_keys, b.z_values, b.z_pair_keys),
        "ndcg": paired(a.ndcg_values, a.ndcg_proposal_ids,
                       b.ndcg_values, b.ndcg_proposal_ids),
    }
    for name, (xa, xb) in jobs.items():
        try:
            out[name] = wilcoxon_signed_rank(xa, xb)
        except InsufficientPairsError as exc:
            log.info("%s vs %s on %s: %s", a.method, b.method, name, exc)
            out[name] = None
    return out


_COLUMNS = ("median_rank", "mrr", "hit", "zscore", "ndcg")


def _format_cell(ev: MethodEvaluation, key: str, hit_key: str) -> str:
    summary = ev.summaries.get(hit_key if key == "hit" else key)
    if summary is None:
        return "n/a"
    half = (summary.ci_high - summary.ci_low) / 2.0
    return f"{summary.point:.3f} ±{half:.3f}"


def render_report(
    evaluations: list[MethodEvaluation],
    comparisons: dict[str, dict[str, WilcoxonResult | None]] | None = None,
    baseline: str | None = None,
    hit_k: int = 25,
) -> str:
    """Aligned text table: one row per method, CI half-widths, markers.

    comparisons maps method name to its per-metric test against the baseline
    method; significant cells get * (p<0.05) or a dagger (p<0.01).
    """
    hit_key = f"hit@{hit_k}"
    headers = ["method", "median_rank", "mrr", hit_key, "zscore", "ndcg"]
    rows = []
    for ev in evaluations:
        row = [ev.method]
        for key in _COLUMNS:
            cell = _format_cell(ev, key, hit_key)
            tests = (comparisons or {}).get(ev.method)
            if tests and ev.method != baseline:
                test_key = {"median_rank": "reciprocal_rank", "mrr": "reciprocal_rank",
                            "hit": "hit", "zscore": "zscore", "ndcg": "ndcg"}[key]
                result = tests.get(test_key)
                if result is not None:
                    cell += significance_marker(result.p_value)
            row.append(cell)
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    if baseline is not None:
        lines.append("")
        lines.append(f"markers: * p<0.05, † p<0.01 vs {baseline}")
    return "\n".join(lines) + "\n"


def write_report_csv(
    evaluations: list[MethodEvaluation],
    path: str | Path,
    hit_k: int = 25,
) -> None:
    """Machine-readable counterpart of the text report."""
    hit_key = f"hit@{hit_k}"
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "method", "metric", "point", "ci_low", "ci_high",
            "n_resamples", "z_excluded", "ndcg_flagged",
        ])
        for ev in evaluations:
            for key in ("median_rank", "mrr", hit_key, "zscore", "ndcg"):
                summary = ev.summaries.get(key)
                if summary is None:
                    continue
                writer.writerow([
                    ev.method, summary.metric, repr(summary.point),
                    repr(summary.ci_low), repr(summary.ci_high),
                    summary.n_resamples, ev.z_excluded, ev.ndcg_flagged,
                ])
