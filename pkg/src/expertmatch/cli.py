"""Command-line workflow: ingest, synth, represent, score, evaluate, report.

Each stage writes an artifact the next stage can restart from, so long
pipelines never need to rerun finished work. Usage errors exit 2 (argparse),
runtime failures exit 1 with a one-line diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import ablation as ablation_mod
from . import config as config_mod
from .corpus import Corpus, Grade, QueryConfig, SelfReportedLabel, load_corpus, save_corpus
from .embeddings import read_embedding_file
from .errors import ExpertMatchError
from .evaluation import (
    EvalConfig, compare_methods, evaluate_matrix, render_report, write_report_csv,
)
from .lda import LdaConfig
from .llm import LlmConfig
from .similarity import (
    build_representation, expertise_matrix, export_csv, load_matrix,
    load_representation, matrix_from_representation, matrix_stats,
    save_matrix, save_representation,
)
from .synth import generate_synthetic_corpus

log = logging.getLogger(__name__)


def _add_query_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-papers", type=int, default=None,
                        help="publication cap per reviewer")
    parser.add_argument("--window-years", type=int, default=None,
                        help="recency window for publications")
    parser.add_argument("--first-author-only", action="store_true", default=None,
                        help="keep only first-author publications")


def _query_from_args(args, base: QueryConfig) -> QueryConfig:
    updates = {}
    if args.max_papers is not None:
        updates["max_papers"] = args.max_papers
    if args.window_years is not None:
        updates["window_years"] = args.window_years
    if args.first_author_only:
        updates["first_author_only"] = True
    return dataclasses.replace(base, **updates) if updates else base


def _llm_config(args, run: config_mod.RunConfig) -> LlmConfig:
    endpoint = getattr(args, "llm_endpoint", None) or run.llm_endpoint
    model = getattr(args, "llm_model", None) or run.llm_model
    cache_dir = getattr(args, "llm_cache_dir", None) or run.llm_cache_dir
    if not endpoint or not model:
        raise ValueError(
            "llm scoring needs an endpoint and model "
            "(flags --llm-endpoint/--llm-model or the [llm] config section)"
        )
    return LlmConfig(
        endpoint=endpoint, model=model, cache_dir=cache_dir,
        max_in_flight=run.llm_max_in_flight, retries=run.llm_retries,
    )


def _matrix_kwargs(args, run: config_mod.RunConfig) -> dict:
    """Shared method-parameter plumbing for represent and score."""
    kwargs: dict = {"query": _query_from_args(args, run.query)}
    method = args.method
    if method == "tfidf":
        kwargs["ngram_max"] = args.ngram_max if args.ngram_max else run.ngram_max
    elif method == "lda":
        lda = run.lda
        if args.topics:
            lda = dataclasses.replace(lda, topics=args.topics)
        kwargs["lda_config"] = dataclasses.replace(lda, seed=run.seed)
    elif method == "embedding":
        if not args.embeddings:
            raise ValueError("--embeddings FILE is required for the embedding method")
        kwargs["embedding_file"] = read_embedding_file(args.embeddings)
        kwargs["pooling"] = args.pooling or run.pooling
    return kwargs


def _load_labels_csv(path: Path, corpus: Corpus) -> Corpus:
    labels = []
    with path.open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            labels.append(SelfReportedLabel(
                proposal_id=row["proposal_id"],
                reviewer_id=row["reviewer_id"],
                grade=Grade.parse(row["grade"]),
            ))
    known_p = {p.id for p in corpus.proposals}
    known_r = {r.id for r in corpus.reviewers}
    for lab in labels:
        if lab.proposal_id not in known_p or lab.reviewer_id not in known_r:
            raise ValueError(
                f"{path}: label ({lab.proposal_id}, {lab.reviewer_id}) "
                "references an unknown id"
            )
    return dataclasses.replace(corpus, labels=tuple(labels))


def cmd_ingest(args, run: config_mod.RunConfig) -> int:
    corpus = load_corpus(args.directory)
    print(
        f"ok: {len(corpus.proposals)} proposals, {len(corpus.reviewers)} reviewers, "
        f"{len(corpus.labels)} labels, {len(corpus.keyword_vocabulary)} keywords"
    )
    return 0


def cmd_synth(args, run: config_mod.RunConfig) -> int:
    seed = args.seed if args.seed is not None else run.seed
    corpus = generate_synthetic_corpus(
        source=args.fixture,
        size=args.size,
        seed=seed,
        live_endpoint=args.live_endpoint or (run.synth_endpoint or None),
        labels_per_proposal=run.labels_per_proposal,
    )
    save_corpus(corpus, args.out)
    load_corpus(args.out)  # fail loudly if the generator emitted anything invalid
    print(f"wrote corpus with {len(corpus.proposals)} proposals to {args.out}")
    return 0


def cmd_embed_import(args, run: config_mod.RunConfig) -> int:
    emb = read_embedding_file(args.file)
    print(f"ok: model {emb.model!r}, dim {emb.dim}, {len(emb)} records")
    return 0


def cmd_represent(args, run: config_mod.RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    kwargs = _matrix_kwargs(args, run)
    rep = build_representation(args.method, corpus, **kwargs)
    provenance = config_mod.resolved_dict(run)
    provenance["command"] = {"method": args.method, "corpus": str(args.corpus)}
    save_representation(rep, args.out, provenance=provenance)
    print(f"wrote {rep.vector_kind} representation ({rep.method}) to {args.out}")
    return 0


def cmd_score(args, run: config_mod.RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    proposal_ids = tuple(p.id for p in corpus.proposals)
    reviewer_ids = tuple(r.id for r in corpus.reviewers)
    if args.rep:
        rep = load_representation(args.rep)
        matrix = matrix_from_representation(rep, proposal_ids, reviewer_ids)
    else:
        if not args.method:
            raise ValueError("score needs either --rep FILE or --method NAME")
        kwargs = _matrix_kwargs(args, run)
        if args.method == "llm":
            kwargs["llm_config"] = _llm_config(args, run)
        matrix = expertise_matrix(args.method, corpus, **kwargs)
    provenance = config_mod.resolved_dict(run)
    provenance["command"] = {
        "method": args.method, "rep": args.rep, "corpus": str(args.corpus),
    }
    save_matrix(matrix, args.out, provenance=provenance)
    method_name = args.method or matrix.method
    stats = matrix_stats(matrix, zero_threshold=0.01 if method_name == "lda" else 0.0)
    print(
        f"wrote {len(matrix.proposal_ids)}x{len(matrix.reviewer_ids)} matrix "
        f"({matrix.method}) to {args.out}; zeros {stats.pct_zeros:.2f}%, "
        f"median {stats.median:.4f}, max {stats.max:.4f}"
    )
    return 0


def cmd_evaluate(args, run: config_mod.RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    if args.labels:
        corpus = _load_labels_csv(Path(args.labels), corpus)
    matrix = load_matrix(args.matrix)
    eval_config = EvalConfig(hit_k=run.hit_k, bootstrap_n=run.bootstrap_n, seed=run.seed)
    evaluation = evaluate_matrix(matrix, corpus, eval_config)

    prefix = Path(args.out)
    text = render_report([evaluation], hit_k=run.hit_k)
    text += f"\nconfig: {json.dumps(config_mod.resolved_dict(run), sort_keys=True)}\n"
    prefix.with_suffix(".txt").write_text(text, encoding="utf-8")
    write_report_csv([evaluation], prefix.with_suffix(".csv"), hit_k=run.hit_k)
    payload = {
        "config": config_mod.resolved_dict(run),
        "method": evaluation.method,
        "summaries": {
            key: dataclasses.asdict(s) for key, s in evaluation.summaries.items()
        },
        "z_excluded": evaluation.z_excluded,
        "ndcg_flagged": evaluation.ndcg_flagged,
    }
    prefix.with_suffix(".json").write_text(
        json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
    )
    sys.stdout.write(render_report([evaluation], hit_k=run.hit_k))
    print(f"wrote {prefix.with_suffix('.txt')}, .csv, .json")
    return 0


def cmd_ablate(args, run: config_mod.RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    grid = ablation_mod.load_grid(args.grid)
    eval_config = EvalConfig(hit_k=run.hit_k, bootstrap_n=run.bootstrap_n, seed=run.seed)
    results = ablation_mod.run_ablation(
        corpus, grid, global_seed=run.seed, eval_config=eval_config,
        base_dir=Path(args.grid).parent,
    )
    if args.out:
        ablation_mod.write_ablation_csv(results, args.out, hit_k=run.hit_k)
        print(f"wrote {args.out}")
    sys.stdout.write(ablation_mod.render_ablation_table(results, hit_k=run.hit_k))
    failures = [r for r in results if r.error]
    return 1 if failures else 0


def cmd_report(args, run: config_mod.RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    eval_config = EvalConfig(hit_k=run.hit_k, bootstrap_n=run.bootstrap_n, seed=run.seed)
    matrices = [load_matrix(p) for p in args.matrix]
    evaluations = [evaluate_matrix(m, corpus, eval_config) for m in matrices]

    comparisons = None
    if args.baseline:
        by_method = {e.method: e for e in evaluations}
        if args.baseline not in by_method:
            raise ValueError(
                f"baseline {args.baseline!r} not among methods {sorted(by_method)}"
            )
        base = by_method[args.baseline]
        comparisons = {
            e.method: compare_methods(e, base)
            for e in evaluations if e.method != args.baseline
        }

    if args.format == "text":
        out = render_report(
            evaluations, comparisons=comparisons, baseline=args.baseline,
            hit_k=run.hit_k,
        )
        if args.out:
            Path(args.out).write_text(
                out + f"\nconfig: {json.dumps(config_mod.resolved_dict(run), sort_keys=True)}\n",
                encoding="utf-8",
            )
            print(f"wrote {args.out}")
        else:
            sys.stdout.write(out)
    else:
        if not args.out:
            raise ValueError("--format csv needs -o/--out")
        write_report_csv(evaluations, args.out, hit_k=run.hit_k)
        print(f"wrote {args.out}")

    if args.heatmap:
        targets = (
            [(args.heatmap, matrices[0])]
            if len(matrices) == 1
            else [
                (str(Path(args.heatmap).with_suffix("")) + f"-{m.method}.csv", m)
                for m in matrices
            ]
        )
        for path, m in targets:
            export_csv(m, path)
            print(f"wrote heatmap data {path}")

    if args.rank_dist:
        with Path(args.rank_dist).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "proposal_id", "reviewer_id", "rank", "tie_count"])
            for ev in evaluations:
                for rr in ev.rank_results:
                    writer.writerow([
                        ev.method, rr.proposal_id, rr.designated_reviewer_id,
                        rr.rank, rr.tie_count,
                    ])
        print(f"wrote rank distribution {args.rank_dist}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expertmatch",
        description="Expertise retrieval benchmark for distributed peer review",
    )
    parser.add_argument("--config", default=None, help="TOML config path")
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, dest="seed")
    p.add_argument("--fixture", default=".",
                   help="source directory with proposals.json and queries/")
    p.add_argument("--out", default="synth_corpus")
    p.add_argument("--live-endpoint", default=None,
                   help="literature API base URL; fills missing query caches")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed-import", help="validate an embedding interchange file")
    p.add_argument("file")
    p.set_defaults(func=cmd_embed_import)

    for name, helptext in (
        ("represent", "build and save a method representation"),
        ("score", "compute and save an expertise matrix"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--corpus", required=True)
        p.add_argument("--method",
                       choices=["keyword", "tfidf", "lda", "embedding"]
                       + (["llm"] if name == "score" else []),
                       required=(name == "represent"), default=None)
        p.add_argument("-o", "--out", required=True)
        p.add_argument("--ngram-max", type=int, default=None, choices=[1, 2])
        p.add_argument("--topics", type=int, default=None)
        p.add_argument("--embeddings", default=None,
                       help="interchange file for the embedding method")
        p.add_argument("--pooling", choices=["mean", "max"], default=None)
        _add_query_flags(p)
        if name == "score":
            p.add_argument("--rep", default=None,
                           help="representation file from the represent stage")
            p.add_argument("--llm-endpoint", default=None)
            p.add_argument("--llm-model", default=None)
            p.add_argument("--llm-cache-dir", default=None)
            p.set_defaults(func=cmd_score)
        else:
            p.set_defaults(func=cmd_represent)

    p = sub.add_parser("evaluate", help="evaluate a matrix against gold structures")
    p.add_argument("--matrix", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", default=None,
                   help="CSV overriding the corpus self-reported labels")
    p.add_argument("-o", "--out", required=True,
                   help="output path prefix (.txt/.csv/.json are written)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run a configuration sweep from a grid file")
    p.add_argument("--grid", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("-o", "--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="tabulate one or more scored matrices")
    p.add_argument("--format", choices=["csv", "text"], required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--matrix", action="append", required=True,
                   help="matrix file; repeat for several methods")
    p.add_argument("--baseline", default=None,
                   help="method tag to test the others against")
    p.add_argument("-o", "--out", default=None)
    p.add_argument("--heatmap", default=None, help="write score grid CSV here")
    p.add_argument("--rank-dist", default=None,
                   help="write per-pair designated ranks CSV here")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    run = config_mod.load_config(args.config)
    if args.seed is not None:
        run = dataclasses.replace(
            run, seed=args.seed,
            lda=dataclasses.replace(run.lda, seed=args.seed),
        )
    try:
        return args.func(args, run)
    except (ExpertMatchError, ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
