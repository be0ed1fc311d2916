"""Sweep execution and rank-correlation analytics.

A full sweep covers every (model variant, layer span, estimate)
configuration, producing one tie-aware Spearman correlation per gold
rating column. Downstream analyses reduce that table: best
configurations, per-pair maxima, layer heatmaps, casing deltas, and
cased-vs-uncased agreement.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from glob import glob
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CorrelationError, EstimateError, MissingInputError
from .estimates import ESTIMATES, EstimateId, sentence_estimate_matrix
from .gold import GoldDataset
from .store import VARIANTS, read_embeddings, read_header
from .targets import LayerSpan, enumerate_spans

log = logging.getLogger(__name__)

GOLD_COLUMNS = ("modifier", "head")


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """Ranks 1..n with ties receiving the mean of the ranks they occupy."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    i = 0
    while i < len(v):
        j = i
        while j < len(v) and v[order[j]] == v[order[i]]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0
        i = j
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise CorrelationError(f"length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 3:
        raise CorrelationError(f"need at least 3 paired values, got {len(x)}")
    rx = average_ranks(x)
    ry = average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise CorrelationError("correlation undefined for constant input")
    return float((dx @ dy) / np.sqrt(sx * sy))


@dataclass(frozen=True)
class SweepConfig:
    """One point of the experimental space."""

    variant: str
    span: LayerSpan
    estimate: EstimateId

    def __str__(self) -> str:
        return f"{self.variant}/{self.span}/{self.estimate}"


@dataclass(frozen=True)
class SweepResult:
    variant: str
    span: LayerSpan
    estimate: EstimateId
    rho_modifier: float
    rho_head: float
    n_compounds: int

    def rho(self, column: str) -> float:
        if column not in GOLD_COLUMNS:
            raise ValueError(f"column must be one of {GOLD_COLUMNS}")
        return self.rho_modifier if column == "modifier" else self.rho_head


@dataclass
class SweepTable:
    """All sweep rows in canonical (variant, span, estimate) order."""

    variants: tuple[str, ...]
    spans: list[LayerSpan]
    estimates: list[EstimateId]
    rows: list[SweepResult]

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n_layers(self) -> int:
        return max(s.end for s in self.spans) + 1

    def rho_array(self, variant: str, column: str) -> np.ndarray:
        """(n_spans, n_estimates) grid of correlations for one variant/column."""
        rows = [r for r in self.rows if r.variant == variant]
        if len(rows) != len(self.spans) * len(self.estimates):
            raise ValueError(f"table does not cover variant {variant!r} completely")
        values = np.array([r.rho(column) for r in rows])
        return values.reshape(len(self.spans), len(self.estimates))

    def lookup(self, config: SweepConfig) -> SweepResult:
        for row in self.rows:
            if (row.variant, row.span, row.estimate) == (config.variant, config.span, config.estimate):
                return row
        raise KeyError(f"no sweep row for {config}")


@dataclass
class VariantPredictions:
    """Compound-level predictions for one model variant."""

    variant: str
    compounds: list[str]
    values: np.ndarray  # (n_compounds, n_spans, n_estimates)
    n_sentences: np.ndarray  # (n_compounds,)

    def index_of(self, compound: str) -> int:
        return self.compounds.index(compound)


@dataclass
class PredictionStore:
    spans: list[LayerSpan]
    estimates: list[EstimateId]
    variants: dict[str, VariantPredictions] = field(default_factory=dict)


@dataclass
class SweepOutcome:
    store: PredictionStore
    table: SweepTable
    gold: GoldDataset


def discover_embedding_files(
    directory: str | os.PathLike, variants: Sequence[str] = VARIANTS
) -> dict[str, dict[str, str]]:
    """variant -> compound -> path, from "<compound>.<variant>.cemb" files."""
    if not os.path.isdir(directory):
        raise MissingInputError(f"embeddings directory not found: {directory}")
    files: dict[str, dict[str, str]] = {v: {} for v in variants}
    for path in sorted(glob(os.path.join(str(directory), "*.cemb"))):
        stem = os.path.basename(path)[: -len(".cemb")]
        compound, _, variant = stem.rpartition(".")
        if variant in files and compound:
            files[variant][compound] = path
    return files


def _predict_one_file(task: tuple[str, str, str]) -> tuple[str, str, np.ndarray | None, int, int]:
    """Worker: compound-level estimate matrix for one embedding file."""
    compound, variant, path = task
    header = read_header(path)
    spans = enumerate_spans(header.n_layers)
    total: np.ndarray | None = None
    used = 0
    skipped = 0
    for tensor in read_embeddings(path, compound=compound):
        try:
            matrix = sentence_estimate_matrix(tensor, spans)
        except EstimateError:
            skipped += 1
            continue
        total = matrix if total is None else total + matrix
        used += 1
    values = total / used if used else None
    return compound, variant, values, used, skipped


def compute_predictions(
    gold: GoldDataset,
    files: dict[str, dict[str, str]],
    workers: int = 1,
) -> PredictionStore:
    """Compound-level predictions per variant from per-compound embedding files.

    Gold compounds without a file (or without a single usable sentence) for
    a variant are excluded from that variant with a warning. Results do not
    depend on the worker count.
    """
    n_layers = None
    for variant, paths in files.items():
        for path in paths.values():
            header = read_header(path)
            if header.variant != variant:
                raise MissingInputError(f"{path}: header variant {header.variant!r} != {variant!r}")
            if n_layers is None:
                n_layers = header.n_layers
            elif header.n_layers != n_layers:
                raise MissingInputError(
                    f"{path}: {header.n_layers} layers, expected {n_layers} as in other files"
                )
    if n_layers is None:
        raise MissingInputError("no embedding files found")

    spans = enumerate_spans(n_layers)
    store = PredictionStore(spans=spans, estimates=list(ESTIMATES))

    tasks = []
    for variant, paths in files.items():
        for entry in gold.entries:
            if entry.compound in paths:
                tasks.append((entry.compound, variant, paths[entry.compound]))
            else:
                log.warning("no %s embedding file for compound %r; excluded", variant, entry.compound)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_predict_one_file, tasks))
    else:
        outputs = [_predict_one_file(t) for t in tasks]

    by_variant: dict[str, dict[str, tuple[np.ndarray, int]]] = {v: {} for v in files}
    for compound, variant, values, used, skipped in outputs:
        if skipped:
            log.warning("%s/%s: skipped %d degenerate sentences", compound, variant, skipped)
        if values is None:
            log.warning("no usable sentences for %r (%s); excluded", compound, variant)
            continue
        by_variant[variant][compound] = (values, used)

    for variant, per_compound in by_variant.items():
        compounds = [e.compound for e in gold.entries if e.compound in per_compound]
        if not compounds:
            continue
        store.variants[variant] = VariantPredictions(
            variant=variant,
            compounds=compounds,
            values=np.stack([per_compound[c][0] for c in compounds]),
            n_sentences=np.array([per_compound[c][1] for c in compounds]),
        )
    return store


def correlate_predictions(store: PredictionStore, gold: GoldDataset) -> SweepTable:
    """One Spearman row per (variant, span, estimate), against both gold columns."""
    ratings = {e.compound: (e.rating_modifier, e.rating_head) for e in gold.entries}
    variants = tuple(sorted(store.variants))
    rows: list[SweepResult] = []
    for variant in variants:
        pred = store.variants[variant]
        if len(pred.compounds) < 3:
            raise CorrelationError(
                f"variant {variant!r} has {len(pred.compounds)} evaluable compounds, need >= 3"
            )
        gold_mod = np.array([ratings[c][0] for c in pred.compounds])
        gold_head = np.array([ratings[c][1] for c in pred.compounds])
        for si, span in enumerate(store.spans):
            for ei, estimate in enumerate(store.estimates):
                values = pred.values[:, si, ei]
                rows.append(
                    SweepResult(
                        variant=variant,
                        span=span,
                        estimate=estimate,
                        rho_modifier=spearman(values, gold_mod),
                        rho_head=spearman(values, gold_head),
                        n_compounds=len(pred.compounds),
                    )
                )
    return SweepTable(variants=variants, spans=list(store.spans), estimates=list(store.estimates), rows=rows)


def run_sweep(
    gold: GoldDataset,
    embeddings_dir: str | os.PathLike,
    variants: Sequence[str] = VARIANTS,
    workers: int = 1,
) -> SweepOutcome:
    files = discover_embedding_files(embeddings_dir, variants)
    missing = [v for v, paths in files.items() if not paths]
    if missing:
        raise MissingInputError(
            f"no embedding files for variant(s) {', '.join(missing)} in {embeddings_dir}"
        )
    store = compute_predictions(gold, files, workers=workers)
    table = correlate_predictions(store, gold)
    return SweepOutcome(store=store, table=table, gold=gold)


def best_configs(table: SweepTable, column: str, k: int) -> list[SweepResult]:
    """Top-k rows by the chosen column's rho; deterministic tie-breaking."""
    if column not in GOLD_COLUMNS:
        raise ValueError(f"column must be one of {GOLD_COLUMNS}")

    def key(row: SweepResult):
        return (
            -row.rho(column),
            row.variant,
            row.span.start,
            row.span.end,
            ESTIMATES.index(row.estimate),
        )

    return sorted(table.rows, key=key)[: max(k, 0)]


def estimate_matrix(table: SweepTable, column: str) -> np.ndarray:
    """5x5 best-over-spans-and-variants rho per direct target pair; NaN diagonal."""
    from .targets import TARGET_NAMES

    matrix = np.full((len(TARGET_NAMES), len(TARGET_NAMES)), np.nan)
    for row in table.rows:
        if row.estimate.kind != "direct":
            continue
        i = TARGET_NAMES.index(row.estimate.pair[0])
        j = TARGET_NAMES.index(row.estimate.pair[1])
        value = row.rho(column)
        if np.isnan(matrix[i, j]) or value > matrix[i, j]:
            matrix[i, j] = value
            matrix[j, i] = value
    return matrix


def prediction_cross_correlation(
    store: PredictionStore, config_a: SweepConfig, config_b: SweepConfig
) -> float:
    """Spearman between two configurations' predictions over shared compounds."""
    vec = []
    for config in (config_a, config_b):
        if config.variant not in store.variants:
            raise MissingInputError(f"no predictions for variant {config.variant!r}")
        pred = store.variants[config.variant]
        si = store.spans.index(config.span)
        ei = store.estimates.index(config.estimate)
        vec.append((pred, pred.values[:, si, ei]))
    (pred_a, values_a), (pred_b, values_b) = vec
    shared = [c for c in pred_a.compounds if c in set(pred_b.compounds)]
    if len(shared) < 3:
        raise CorrelationError(f"only {len(shared)} shared compounds between configurations")
    idx_a = [pred_a.compounds.index(c) for c in shared]
    idx_b = [pred_b.compounds.index(c) for c in shared]
    return spearman(values_a[idx_a], values_b[idx_b])


@dataclass
class CrossModelResult:
    """Cased-vs-uncased agreement, overall or per group."""

    level: str  # "values" | "rho"
    group_by: str  # "none" | "span" | "estimate"
    column: str | None
    groups: list[tuple[str, float]]
    mean: float
    std: float | None


def cross_model_correlation(
    outcome: SweepOutcome,
    group_by: str = "none",
    level: str = "values",
    column: str | None = None,
    on_undefined: str = "raise",
) -> CrossModelResult:
    """Correlate what the cased and the uncased model produce.

    level="values" pairs raw compound-level prediction values across the two
    variants (column-independent). level="rho" pairs the per-configuration
    correlation scores for one gold column, which is the per-column variant
    agreement; it requires ``column``. group_by="span" yields one rho per
    layer span (fixed layers, varying estimates), group_by="estimate" one
    per estimate (fixed estimate, varying layers), group_by="none" a single
    rho over everything.

    A group whose paired values are constant has no defined correlation;
    with on_undefined="nan" such groups are reported as NaN (and excluded
    from mean/std) instead of raising, which keeps report generation alive
    on tiny or degenerate datasets.
    """
    if group_by not in ("none", "span", "estimate"):
        raise ValueError(f"unknown group_by {group_by!r}")
    if level not in ("values", "rho"):
        raise ValueError(f"unknown level {level!r}")
    if on_undefined not in ("raise", "nan"):
        raise ValueError(f"unknown on_undefined {on_undefined!r}")

    spans = outcome.store.spans
    estimates = outcome.store.estimates
    if level == "values":
        store = outcome.store
        if "cased" not in store.variants or "uncased" not in store.variants:
            raise MissingInputError("value-level comparison requires both variants")
        cased = store.variants["cased"]
        uncased = store.variants["uncased"]
        shared = [c for c in cased.compounds if c in set(uncased.compounds)]
        if len(shared) < 1:
            raise CorrelationError("no shared compounds between variants")
        a = cased.values[[cased.compounds.index(c) for c in shared]]
        b = uncased.values[[uncased.compounds.index(c) for c in shared]]
        if group_by == "none":
            pairs = [("all", a.reshape(-1), b.reshape(-1))]
        elif group_by == "span":
            pairs = [(str(s), a[:, i, :].reshape(-1), b[:, i, :].reshape(-1)) for i, s in enumerate(spans)]
        else:
            pairs = [
                (str(e), a[:, :, i].reshape(-1), b[:, :, i].reshape(-1)) for i, e in enumerate(estimates)
            ]
    else:
        if column is None:
            raise ValueError("rho-level comparison requires a gold column")
        a = outcome.table.rho_array("cased", column)
        b = outcome.table.rho_array("uncased", column)
        if group_by == "none":
            pairs = [("all", a.reshape(-1), b.reshape(-1))]
        elif group_by == "span":
            pairs = [(str(s), a[i, :], b[i, :]) for i, s in enumerate(spans)]
        else:
            pairs = [(str(e), a[:, i], b[:, i]) for i, e in enumerate(estimates)]

    groups = []
    for label, x, y in pairs:
        try:
            groups.append((label, spearman(x, y)))
        except CorrelationError:
            if on_undefined == "raise":
                raise
            groups.append((label, float("nan")))
    rhos = np.array([rho for _, rho in groups])
    defined = rhos[np.isfinite(rhos)]
    return CrossModelResult(
        level=level,
        group_by=group_by,
        column=column,
        groups=groups,
        mean=float(defined.mean()) if defined.size else float("nan"),
        std=(float(defined.std()) if defined.size else float("nan")) if group_by != "none" else None,
    )


def span_heatmap(table: SweepTable, column: str, variant: str) -> np.ndarray:
    """Mean rho over estimates per span; rows = end layer, columns = start layer.

    Cells with start > end (above the diagonal) are NaN.
    """
    n = table.n_layers
    grid = np.full((n, n), np.nan)
    rho = table.rho_array(variant, column)
    for i, span in enumerate(table.spans):
        grid[span.end, span.start] = rho[i, :].mean()
    return grid


def casing_delta(table: SweepTable, column: str) -> np.ndarray:
    """Cased-minus-uncased heatmap; positive cells favor the cased model."""
    return span_heatmap(table, column, "cased") - span_heatmap(table, column, "uncased")


class SummaryStats(NamedTuple):
    median: float
    minimum: float
    maximum: float


def summary_stats(table: SweepTable, variant: str, column: str) -> SummaryStats:
    """Order statistics over all (span, estimate) correlations of one variant."""
    values = table.rho_array(variant, column).reshape(-1)
    return SummaryStats(float(np.median(values)), float(values.min()), float(values.max()))
