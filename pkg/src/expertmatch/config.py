"""Run configuration: TOML file defaults, overridden by CLI flags.

The file is optional; everything has a working default so the toolkit runs
bare. Section names group knobs by pipeline stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ImportError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .corpus import QueryConfig
from .evaluation import EvalConfig
from .lda import LdaConfig

log = logging.getLogger(__name__)

CONFIG_FILENAME = "expertmatch.toml"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    query: QueryConfig = QueryConfig()
    ngram_max: int = 2
    lda: LdaConfig = LdaConfig()
    pooling: str = "mean"
    hit_k: int = 25
    bootstrap_n: int = 10000
    llm_endpoint: str = ""
    llm_model: str = ""
    llm_cache_dir: str = "llm_cache"
    llm_max_in_flight: int = 4
    llm_retries: int = 3
    synth_endpoint: str = ""
    labels_per_proposal: int = 10

    def eval_config(self) -> EvalConfig:
        return EvalConfig(hit_k=self.hit_k, bootstrap_n=self.bootstrap_n, seed=self.seed)


_QUERY_KEYS = {"max_papers", "window_years", "first_author_only"}
_LDA_KEYS = {
    "topics", "alpha", "beta", "iterations", "burn_in",
    "sample_stride", "truncation_threshold",
}


def _take(section: dict, allowed: set[str], where: str) -> dict:
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
    return section


def load_config(path: str | Path | None = None, cwd: str | Path = ".") -> RunConfig:
    """Parse a TOML config; a missing default file just yields the defaults."""
    if path is None:
        candidate = Path(cwd) / CONFIG_FILENAME
        if not candidate.exists():
            return RunConfig()
        path = candidate
    with Path(path).open("rb") as fh:
        data = tomllib.load(fh)

    config = RunConfig()
    top = {k: v for k, v in data.items() if not isinstance(v, dict)}
    _take(top, {"seed"}, str(path))
    if "seed" in top:
        config = replace(config, seed=int(top["seed"]))

    if "query" in data:
        section = _take(data["query"], _QUERY_KEYS, f"{path} [query]")
        config = replace(config, query=QueryConfig(**section))
    if "tfidf" in data:
        section = _take(data["tfidf"], {"ngram_max"}, f"{path} [tfidf]")
        if "ngram_max" in section:
            config = replace(config, ngram_max=int(section["ngram_max"]))
    if "lda" in data:
        section = _take(data["lda"], _LDA_KEYS, f"{path} [lda]")
        config = replace(config, lda=LdaConfig(seed=config.seed, **section))
    if "embedding" in data:
        section = _take(data["embedding"], {"pooling"}, f"{path} [embedding]")
        if "pooling" in section:
            config = replace(config, pooling=section["pooling"])
    if "llm" in data:
        section = _take(
            data["llm"],
            {"endpoint", "model", "cache_dir", "max_in_flight", "retries"},
            f"{path} [llm]",
        )
        config = replace(
            config,
            llm_endpoint=section.get("endpoint", config.llm_endpoint),
            llm_model=section.get("model", config.llm_model),
            llm_cache_dir=section.get("cache_dir", config.llm_cache_dir),
            llm_max_in_flight=int(section.get("max_in_flight", config.llm_max_in_flight)),
            llm_retries=int(section.get("retries", config.llm_retries)),
        )
    if "evaluation" in data:
        section = _take(data["evaluation"], {"hit_k", "bootstrap_n"}, f"{path} [evaluation]")
        config = replace(
            config,
            hit_k=int(section.get("hit_k", config.hit_k)),
            bootstrap_n=int(section.get("bootstrap_n", config.bootstrap_n)),
        )
    if "synth" in data:
        section = _take(
            data["synth"], {"endpoint", "labels_per_proposal"}, f"{path} [synth]"
        )
        config = replace(
            config,
            synth_endpoint=section.get("endpoint", config.synth_endpoint),
            labels_per_proposal=int(
                section.get("labels_per_proposal", config.labels_per_proposal)
            ),
        )
    log.debug("loaded config from %s", path)
    return config


def resolved_dict(config: RunConfig) -> dict:
    """Flat literal dump of the configuration, for output-file provenance."""
    return {
        "seed": config.seed,
        "query": vars(config.query),
        "ngram_max": config.ngram_max,
        "lda": vars(config.lda),
        "pooling": config.pooling,
        "hit_k": config.hit_k,
        "bootstrap_n": config.bootstrap_n,
        "llm": {
            "endpoint": config.llm_endpoint,
            "model": config.llm_model,
            "cache_dir": config.llm_cache_dir,
            "max_in_flight": config.llm_max_in_flight,
            "retries": config.llm_retries,
        },
        "synth": {
            "endpoint": config.synth_endpoint,
            "labels_per_proposal": config.labels_per_proposal,
        },
    }
