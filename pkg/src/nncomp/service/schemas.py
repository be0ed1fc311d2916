"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import DEFAULT_CAP, DEFAULT_MAX_TOKENS, DEFAULT_TOP_K


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class SpanModel(BaseModel):
    start: int
    end: int


class SpansResponse(BaseModel):
    n_layers: int
    count: int
    spans: list[SpanModel]


class EstimatesResponse(BaseModel):
    count: int
    direct: list[str]
    composite: list[str]


class GoldStatsRequest(BaseModel):
    gold: str = Field(description="Server-local path to the gold TSV file")


class GoldStatsResponse(BaseModel):
    n_entries: int
    unique_modifiers: int
    repeated_modifiers: int
    unique_heads: int
    repeated_heads: int


class PrepareRequest(BaseModel):
    gold: str
    corpus: list[str] = Field(description="Sentence-per-line files or glob patterns")
    out: str
    seed: int = 0
    cap: int = Field(default=DEFAULT_CAP, description="Max sampled sentences per compound")
    workers: int = 1


class PrepareResponse(BaseModel):
    manifest_path: str
    coverage_path: str
    n_compounds: int
    n_with_occurrences: int
    n_zero_occurrence: int
    n_records: int
    config_hash: str


class SweepRequest(BaseModel):
    gold: str
    embeddings: str = Field(description="Directory of <compound>.<variant>.cemb files")
    out: str
    variants: list[str] = ["cased", "uncased"]
    top_k: int = DEFAULT_TOP_K
    workers: int = 1
    seed: int = 0


class ConfigResult(BaseModel):
    variant: str
    span: str
    estimate: str
    rho: float
    n_compounds: int


class SweepResponse(BaseModel):
    sweep_path: str
    predictions_path: str
    analysis_paths: list[str]
    n_rows: int
    best_modifier: list[ConfigResult]
    best_head: list[ConfigResult]
    config_hash: str


class ReportRequest(BaseModel):
    out: str = Field(description="Directory holding sweep.tsv and predictions.tsv")
    gold: str = ""
    top_k: int = DEFAULT_TOP_K
    seed: int = 0


class ReportResponse(BaseModel):
    analysis_paths: list[str]
    n_rows: int
    config_hash: str


class ErrorResponse(BaseModel):
    detail: str
    kind: str = Field(description="'validation' or 'missing_input'")


# kept alongside the request models so clients see every tunable in one place
DEFAULTS = {
    "cap": DEFAULT_CAP,
    "max_tokens": DEFAULT_MAX_TOKENS,
    "top_k": DEFAULT_TOP_K,
}
