"""Command line front end: one corpus directory in, one embedding file out."""
import argparse
import logging
import sys

from expertmatch.errors import ExpertMatchError

from .exporter import MODEL_ALIASES, export_embeddings


def cmd_export(args) -> int:
    emb = export_embeddings(
        args.corpus, args.model, args.out, batch_size=args.batch_size
    )
    print(
        f"wrote {len(emb)} records (model {emb.model!r}, dim {emb.dim}) "
        f"to {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-exporter",
        description="Encode proposal and publication abstracts into the "
                    "embedding interchange format.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="encode one corpus directory")
    p.add_argument("--model", required=True,
                   help=f"model id, or an alias: {', '.join(sorted(MODEL_ALIASES))}")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ExpertMatchError, ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
