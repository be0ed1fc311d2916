"""FastAPI service wrapping the pipeline.

All paths in requests are server-local: the service is meant to run next
to the corpus, gold data, and embedding files it operates on.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import build_config
from ..errors import MissingInputError, NncompError
from ..estimates import ESTIMATES
from ..gold import family_stats, load_gold
from ..pipeline import prepare, report, sweep
from ..targets import enumerate_spans
from .schemas import (
    ConfigResult,
    EstimatesResponse,
    GoldStatsRequest,
    GoldStatsResponse,
    HealthResponse,
    PrepareRequest,
    PrepareResponse,
    ReportRequest,
    ReportResponse,
    SpanModel,
    SpansResponse,
    SweepRequest,
    SweepResponse,
)

app = FastAPI(title="nncomp", version=__version__)


@app.exception_handler(MissingInputError)
async def missing_input_handler(request: Request, exc: MissingInputError) -> JSONResponse:
    return JSONResponse(status_code=404, content={"detail": str(exc), "kind": "missing_input"})


@app.exception_handler(NncompError)
async def validation_handler(request: Request, exc: NncompError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc), "kind": "validation"})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(version=__version__)


@app.get("/spans", response_model=SpansResponse)
def spans(n_layers: int = 13) -> SpansResponse:
    if n_layers < 1:
        raise NncompError(f"n_layers must be >= 1, got {n_layers}")
    all_spans = enumerate_spans(n_layers)
    return SpansResponse(
        n_layers=n_layers,
        count=len(all_spans),
        spans=[SpanModel(start=s.start, end=s.end) for s in all_spans],
    )


@app.get("/estimates", response_model=EstimatesResponse)
def estimates() -> EstimatesResponse:
    return EstimatesResponse(
        count=len(ESTIMATES),
        direct=[str(e) for e in ESTIMATES if e.kind == "direct"],
        composite=[str(e) for e in ESTIMATES if e.kind == "composite"],
    )


@app.post("/gold/stats", response_model=GoldStatsResponse)
def gold_stats(request: GoldStatsRequest) -> GoldStatsResponse:
    dataset = load_gold(request.gold)
    stats = family_stats(dataset)
    return GoldStatsResponse(n_entries=len(dataset), **stats._asdict())


@app.post("/prepare", response_model=PrepareResponse)
def prepare_endpoint(request: PrepareRequest) -> PrepareResponse:
    config = build_config(overrides=request.model_dump())
    summary = prepare(config)
    return PrepareResponse(**summary.__dict__)


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(request: SweepRequest) -> SweepResponse:
    config = build_config(overrides=request.model_dump())
    summary = sweep(config)
    return SweepResponse(
        sweep_path=summary.sweep_path,
        predictions_path=summary.predictions_path,
        analysis_paths=summary.analysis_paths,
        n_rows=summary.n_rows,
        best_modifier=[_config_result(r, "modifier") for r in summary.best_modifier],
        best_head=[_config_result(r, "head") for r in summary.best_head],
        config_hash=summary.config_hash,
    )


@app.post("/report", response_model=ReportResponse)
def report_endpoint(request: ReportRequest) -> ReportResponse:
    config = build_config(overrides=request.model_dump())
    summary = report(config)
    return ReportResponse(**summary.__dict__)


def _config_result(row, column: str) -> ConfigResult:
    return ConfigResult(
        variant=row.variant,
        span=str(row.span),
        estimate=str(row.estimate),
        rho=row.rho(column),
        n_compounds=row.n_compounds,
    )
