"""CLI: turn a prepared sentence manifest into embedding files."""

from __future__ import annotations

import argparse
import logging
import sys

from nncomp.corpus import read_manifest
from nncomp.errors import MissingInputError, NncompError

from .extract import DEFAULT_MAX_TOKENS, Extractor


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nncomp-extract", description=__doc__)
    parser.add_argument("--manifest", required=True, help="JSON-lines manifest from the prepare stage")
    parser.add_argument("--model-id", required=True, help="model name or local model directory")
    parser.add_argument("--variant", required=True, choices=["cased", "uncased"])
    parser.add_argument("--out", required=True, help="output directory for .cemb files")
    parser.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        manifest = read_manifest(args.manifest)
        extractor = Extractor(args.model_id, args.variant, max_tokens=args.max_tokens)
        report = extractor.extract_manifest(manifest, args.out)
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NncompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {len(report.files)} files ({report.n_sentences} sentences, "
        f"{len(report.dropped)} dropped) as {report.variant}, "
        f"{report.n_layers} layers x dim {report.dim}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
