"""Configuration sweeps: query-window variants, topic-count sweep, pooling.

A grid is a list of named cells, each naming a method plus the knobs that
differ from the defaults. Every cell derives its own seed from the global
seed and the cell name, so cells are independent of grid order and each one
reproduces exactly when run standalone with that derived seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, QueryConfig
from .embeddings import EmbeddingFile, read_embedding_file
from .evaluation import EvalConfig, MethodEvaluation, evaluate_matrix
from .lda import LdaConfig
from .llm import LlmConfig, Transport
from .similarity import METHODS, expertise_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridCell:
    name: str
    method: str
    query: QueryConfig = QueryConfig()
    method_params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.name:
            raise ValueError("grid cell needs a name")
        if self.method not in METHODS:
            raise ValueError(f"{self.name}: unknown method {self.method!r}")
        self.query.validate()


@dataclass(frozen=True)
class CellResult:
    cell: GridCell
    seed: int
    evaluation: MethodEvaluation | None = None
    error: str | None = None


def cell_seed(global_seed: int, cell_name: str) -> int:
    """Stable per-cell seed: hash of the global seed and the cell name."""
    digest = hashlib.sha256(f"{global_seed}:{cell_name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def load_grid(path: str | Path) -> list[GridCell]:
    """Grid file: JSON list of {name, method, query_config?, method_params?}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError(f"{path}: grid file must hold a JSON list")
    cells = []
    names = set()
    for entry in raw:
        query = QueryConfig(**entry.get("query_config", {}))
        cell = GridCell(
            name=entry["name"],
            method=entry["method"],
            query=query,
            method_params=dict(entry.get("method_params", {})),
        )
        cell.validate()
        if cell.name in names:
            raise ValueError(f"{path}: duplicate cell name {cell.name!r}")
        names.add(cell.name)
        cells.append(cell)
    return cells


def run_cell(
    corpus: Corpus,
    cell: GridCell,
    global_seed: int = 0,
    eval_config: EvalConfig | None = None,
    embedding_cache: dict[str, EmbeddingFile] | None = None,
    llm_config: LlmConfig | None = None,
    llm_transport: Transport | None = None,
    base_dir: str | Path | None = None,
) -> CellResult:
    """Build, score, and evaluate one cell; failures land in the result row."""
    cell.validate()
    seed = cell_seed(global_seed, cell.name)
    params = dict(cell.method_params)
    try:
        kwargs: dict = {"query": cell.query, "tag": cell.name}
        if cell.method == "tfidf":
            kwargs["ngram_max"] = int(params.pop("ngram_max", 2))
        elif cell.method == "lda":
            kwargs["lda_config"] = LdaConfig(
                topics=int(params.pop("topics", 50)),
                alpha=params.pop("alpha", None),
                beta=float(params.pop("beta", 0.01)),
                iterations=int(params.pop("iterations", 1000)),
                burn_in=int(params.pop("burn_in", 500)),
                sample_stride=int(params.pop("sample_stride", 10)),
                truncation_threshold=float(params.pop("truncation_threshold", 0.01)),
                seed=seed,
            )
        elif cell.method == "embedding":
            file_key = params.pop("file")
            if embedding_cache is not None and file_key in embedding_cache:
                kwargs["embedding_file"] = embedding_cache[file_key]
            else:
                path = Path(file_key)
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                loaded = read_embedding_file(path)
                if embedding_cache is not None:
                    embedding_cache[file_key] = loaded
                kwargs["embedding_file"] = loaded
            kwargs["pooling"] = params.pop("pooling", "mean")
        elif cell.method == "llm":
            if llm_config is None:
                raise ValueError("llm cell needs an LlmConfig")
            kwargs["llm_config"] = llm_config
            kwargs["llm_transport"] = llm_transport
        if params:
            raise ValueError(f"unused method_params: {sorted(params)}")

        matrix = expertise_matrix(cell.method, corpus, **kwargs)
        config = eval_config or EvalConfig()
        # the cell seed also drives the bootstrap so reruns match bit for bit
        config = EvalConfig(
            hit_k=config.hit_k, gains=config.gains,
            bootstrap_n=config.bootstrap_n, seed=seed,
        )
        evaluation = evaluate_matrix(matrix, corpus, config)
        return CellResult(cell=cell, seed=seed, evaluation=evaluation)
    except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
        log.error("cell %s failed: %s", cell.name, exc)
        return CellResult(cell=cell, seed=seed, error=f"{type(exc).__name__}: {exc}")


def run_ablation(
    corpus: Corpus,
    grid: list[GridCell],
    global_seed: int = 0,
    eval_config: EvalConfig | None = None,
    llm_config: LlmConfig | None = None,
    llm_transport: Transport | None = None,
    base_dir: str | Path | None = None,
) -> list[CellResult]:
    """Run every cell, never aborting the sweep on individual failures."""
    embedding_cache: dict[str, EmbeddingFile] = {}
    results = []
    for cell in grid:
        results.append(
            run_cell(
                corpus, cell, global_seed, eval_config,
                embedding_cache=embedding_cache,
                llm_config=llm_config, llm_transport=llm_transport,
                base_dir=base_dir,
            )
        )
    return results


_METRIC_KEYS = ("median_rank", "mrr", "zscore", "ndcg")


def write_ablation_csv(results: list[CellResult], path: str | Path, hit_k: int = 25) -> None:
    """One row per (cell, metric), carrying full config provenance."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "cell", "method", "query_config", "method_params", "seed",
            "metric", "point", "ci_low", "ci_high", "error",
        ])
        for res in results:
            provenance = [
                res.cell.name, res.cell.method,
                json.dumps(vars(res.cell.query), sort_keys=True),
                json.dumps(res.cell.method_params, sort_keys=True),
                res.seed,
            ]
            if res.evaluation is None:
                writer.writerow(provenance + ["", "", "", "", res.error])
                continue
            for key in _METRIC_KEYS + (f"hit@{hit_k}",):
                summary = res.evaluation.summaries.get(key)
                if summary is None:
                    continue
                writer.writerow(provenance + [
                    summary.metric, repr(summary.point),
                    repr(summary.ci_low), repr(summary.ci_high), "",
                ])


def render_ablation_table(results: list[CellResult], hit_k: int = 25) -> str:
    """Aligned text table over the sweep, one row per cell."""
    headers = ["cell", "method", "median_rank", "mrr", f"hit@{hit_k}", "zscore", "ndcg"]
    rows = []
    for res in results:
        if res.evaluation is None:
            rows.append([res.cell.name, res.cell.method,
                         f"FAILED: {res.error}", "", "", "", ""])
            continue
        row = [res.cell.name, res.cell.method]
        for key in ("median_rank", "mrr", f"hit@{hit_k}", "zscore", "ndcg"):
            summary = res.evaluation.summaries.get(key)
            if summary is None:
                row.append("n/a")
            else:
                half = (summary.ci_high - summary.ci_low) / 2.0
                row.append(f"{summary.point:.3f} ±{half:.3f}")
        rows.append(row)
    widths = [
        max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
        for i, h in enumerate(headers)
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
