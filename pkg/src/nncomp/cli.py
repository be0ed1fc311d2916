"""Command-line client for the pipeline service.

Subcommands mirror the service endpoints. By default requests are handled
in-process; with --server they are sent to a running instance over HTTP.
Exit codes: 0 success, 1 validation error, 2 missing inputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import httpx

from .config import DEFAULT_CAP, DEFAULT_TOP_K, parse_config_file
from .errors import MissingInputError, NncompError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_MISSING = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nncomp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--server", help="base URL of a running service (default: in-process)")

    p = sub.add_parser("prepare", help="scan corpus, split compounds, sample and write the manifest")
    common(p)
    p.add_argument("--gold", help="gold-standard TSV file")
    p.add_argument("--corpus", action="append", help="corpus file or glob (repeatable)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--cap", type=int, help=f"max sentences per compound (default {DEFAULT_CAP})")
    p.add_argument("--workers", type=int, help="parallel shard scanners (default 1)")

    p = sub.add_parser("sweep", help="run the full configuration sweep over stored embeddings")
    common(p)
    p.add_argument("--gold", help="gold-standard TSV file")
    p.add_argument("--embeddings", help="directory of .cemb embedding files")
    p.add_argument("--out", help="output directory")
    p.add_argument("--variants", help="comma-separated model variants (default cased,uncased)")
    p.add_argument("--top-k", type=int, dest="top_k", help=f"rows per best-config table (default {DEFAULT_TOP_K})")
    p.add_argument("--workers", type=int, help="parallel compound workers (default 1)")
    p.add_argument("--seed", type=int, help="seed recorded in output headers")

    p = sub.add_parser("report", help="regenerate analyses from persisted sweep artifacts")
    common(p)
    p.add_argument("--out", help="directory holding sweep.tsv and predictions.tsv")
    p.add_argument("--gold", help="gold-standard TSV file (optional)")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


_REQUEST_KEYS = {
    "prepare": ("gold", "corpus", "out", "seed", "cap", "workers"),
    "sweep": ("gold", "embeddings", "out", "variants", "top_k", "workers", "seed"),
    "report": ("out", "gold", "top_k", "seed"),
}

_ENDPOINTS = {"prepare": "/prepare", "sweep": "/sweep", "report": "/report"}


def _merge_payload(args: argparse.Namespace) -> dict:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for key in _REQUEST_KEYS[args.command]:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "variants" in values and isinstance(values["variants"], str):
        values["variants"] = [v.strip() for v in values["variants"].split(",") if v.strip()]
    return {k: v for k, v in values.items() if k in _REQUEST_KEYS[args.command]}


def _dispatch(args: argparse.Namespace, payload: dict) -> tuple[int, dict]:
    """Run the request over HTTP or in-process; returns (exit code, response body)."""
    if args.server:
        url = args.server.rstrip("/") + _ENDPOINTS[args.command]
        response = httpx.post(url, json=payload, timeout=None)
        body = response.json()
        if response.status_code == 200:
            return EXIT_OK, body
        code = EXIT_MISSING if body.get("kind") == "missing_input" else EXIT_VALIDATION
        return code, body

    from pydantic import ValidationError

    from .service.app import prepare_endpoint, report_endpoint, sweep_endpoint
    from .service.schemas import PrepareRequest, ReportRequest, SweepRequest

    request_types = {"prepare": PrepareRequest, "sweep": SweepRequest, "report": ReportRequest}
    handlers = {"prepare": prepare_endpoint, "sweep": sweep_endpoint, "report": report_endpoint}
    try:
        request = request_types[args.command](**payload)
        response_model = handlers[args.command](request)
        return EXIT_OK, response_model.model_dump()
    except MissingInputError as exc:
        return EXIT_MISSING, {"detail": str(exc), "kind": "missing_input"}
    except (NncompError, ValidationError) as exc:
        return EXIT_VALIDATION, {"detail": str(exc), "kind": "validation"}


def _print_response(command: str, body: dict) -> None:
    if command == "prepare":
        print(f"manifest: {body['manifest_path']}")
        print(f"coverage: {body['coverage_path']}")
        print(
            f"compounds: {body['n_compounds']} total, {body['n_with_occurrences']} with occurrences, "
            f"{body['n_zero_occurrence']} without"
        )
        print(f"records: {body['n_records']} (config {body['config_hash']})")
    elif command == "sweep":
        print(f"sweep table: {body['sweep_path']} ({body['n_rows']} rows)")
        print(f"predictions: {body['predictions_path']}")
        for column in ("modifier", "head"):
            rows = body[f"best_{column}"]
            if rows:
                top = rows[0]
                print(
                    f"best {column}: {top['variant']} {top['span']} {top['estimate']} "
                    f"rho={top['rho']:.4f} (n={top['n_compounds']})"
                )
        print(f"analyses: {len(body['analysis_paths'])} files (config {body['config_hash']})")
    elif command == "report":
        print(f"rebuilt {len(body['analysis_paths'])} analysis files from {body['n_rows']} sweep rows")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    try:
        payload = _merge_payload(args)
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except NncompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    code, body = _dispatch(args, payload)
    if code == EXIT_OK:
        _print_response(args.command, body)
    else:
        print(f"error: {body.get('detail', json.dumps(body))}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
