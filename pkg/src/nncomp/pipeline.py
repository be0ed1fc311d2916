"""End-to-end orchestration: prepare, sweep, and report stages.

Every artifact is written deterministically (stable ordering, lossless
float repr) and carries the config hash and seed, so identical
configurations reproduce identical bytes.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from glob import glob, has_magic

import numpy as np

from .analytics import (
    GOLD_COLUMNS,
    PredictionStore,
    SweepConfig,
    SweepOutcome,
    SweepResult,
    SweepTable,
    VariantPredictions,
    best_configs,
    casing_delta,
    cross_model_correlation,
    estimate_matrix,
    prediction_cross_correlation,
    run_sweep,
    span_heatmap,
    summary_stats,
)
from .config import RunConfig
from .corpus import (
    SampleManifest,
    SentenceRecord,
    compound_seed,
    sample_sentences,
    scan_corpus,
    split_compound,
    write_manifest,
)
from .errors import MissingInputError, NncompError, SplitError
from .estimates import ESTIMATE_INDEX, EstimateId
from .gold import GoldDataset, load_gold
from .svg import render_heatmap
from .targets import TARGET_NAMES, LayerSpan

log = logging.getLogger(__name__)


def _fmt(value: float) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(float(value))  # lossless round-trip repr, also for numpy scalars
    return str(value)


def write_tsv(path: str | os.PathLike, columns: list[str], rows: list[list], meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for key in sorted(meta):
            handle.write(f"# {key}={meta[key]}\n")
        handle.write("\t".join(columns) + "\n")
        for row in rows:
            handle.write("\t".join(_fmt(cell) for cell in row) + "\n")


def read_tsv(path: str | os.PathLike) -> tuple[dict, list[str], list[list[str]]]:
    if not os.path.exists(path):
        raise MissingInputError(f"file not found: {path}")
    meta: dict = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                meta[key] = value
            elif not columns:
                columns = line.split("\t")
            elif line:
                rows.append(line.split("\t"))
    return meta, columns, rows


# ---------------------------------------------------------------------------
# prepare


@dataclass
class PrepareSummary:
    manifest_path: str
    coverage_path: str
    n_compounds: int
    n_with_occurrences: int
    n_zero_occurrence: int
    n_records: int
    config_hash: str


def _scan_shard(task: tuple[str, list]) -> dict[str, list[str]]:
    path, entries = task
    with open(path, encoding="utf-8") as handle:
        return scan_corpus(handle, entries)


def expand_corpus_paths(patterns: list[str]) -> list[str]:
    paths: list[str] = []
    for pattern in patterns:
        if has_magic(pattern):
            paths.extend(sorted(glob(pattern)))
        elif os.path.exists(pattern):
            paths.append(pattern)
        else:
            raise MissingInputError(f"corpus file not found: {pattern}")
    if not paths:
        raise MissingInputError(f"no corpus files matched {patterns}")
    return paths


def prepare(config: RunConfig) -> PrepareSummary:
    """Scan the corpus, split every usable occurrence, sample, write the manifest."""
    config.validate()
    dataset = load_gold(config.gold)
    shard_paths = expand_corpus_paths(config.corpus)
    os.makedirs(config.out, exist_ok=True)

    tasks = [(path, dataset.entries) for path in shard_paths]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            shard_hits = list(pool.map(_scan_shard, tasks))
    else:
        shard_hits = [_scan_shard(task) for task in tasks]

    matched: dict[str, list[str]] = {e.compound: [] for e in dataset.entries}
    for hits in shard_hits:  # shard order keeps the merge deterministic
        for compound, sentences in hits.items():
            matched[compound].extend(sentences)

    manifest = SampleManifest(seed=config.seed, cap=config.cap)
    coverage_rows: list[list] = []
    zero = 0
    total_records = 0
    for entry in dataset.entries:
        records: list[SentenceRecord] = []
        dropped = 0
        for sentence in matched[entry.compound]:
            try:
                records.append(split_compound(sentence, entry))
            except SplitError:
                dropped += 1
        sampled = sample_sentences(records, config.cap, compound_seed(config.seed, entry.compound))
        if sampled:
            manifest.records[entry.compound] = sampled
            total_records += len(sampled)
        else:
            zero += 1
        coverage_rows.append(
            [entry.compound, len(matched[entry.compound]), dropped, len(sampled)]
        )
    if zero:
        log.warning("%d of %d compounds have no usable corpus occurrences", zero, len(dataset))

    manifest_path = os.path.join(config.out, "manifest.jsonl")
    coverage_path = os.path.join(config.out, "coverage.tsv")
    write_manifest(manifest, manifest_path, meta=config.meta())
    write_tsv(
        coverage_path,
        ["compound", "n_matched", "n_dropped", "n_sampled"],
        coverage_rows,
        config.meta(),
    )
    return PrepareSummary(
        manifest_path=manifest_path,
        coverage_path=coverage_path,
        n_compounds=len(dataset),
        n_with_occurrences=len(dataset) - zero,
        n_zero_occurrence=zero,
        n_records=total_records,
        config_hash=config.hash(),
    )


# ---------------------------------------------------------------------------
# sweep + analyses


@dataclass
class SweepSummary:
    sweep_path: str
    predictions_path: str
    analysis_paths: list[str] = field(default_factory=list)
    n_rows: int = 0
    best_modifier: list[SweepResult] = field(default_factory=list)
    best_head: list[SweepResult] = field(default_factory=list)
    config_hash: str = ""


def sweep(config: RunConfig) -> SweepSummary:
    """Run the full sweep over stored embeddings and write table plus analyses."""
    config.validate()
    dataset = load_gold(config.gold)
    outcome = run_sweep(dataset, config.embeddings, variants=config.variants, workers=config.workers)
    os.makedirs(config.out, exist_ok=True)

    sweep_path = os.path.join(config.out, "sweep.tsv")
    predictions_path = os.path.join(config.out, "predictions.tsv")
    write_sweep_tsv(outcome.table, sweep_path, config.meta())
    write_predictions_tsv(outcome.store, predictions_path, config.meta())

    analysis_paths = write_analyses(outcome, config)
    return SweepSummary(
        sweep_path=sweep_path,
        predictions_path=predictions_path,
        analysis_paths=analysis_paths,
        n_rows=len(outcome.table),
        best_modifier=best_configs(outcome.table, "modifier", config.top_k),
        best_head=best_configs(outcome.table, "head", config.top_k),
        config_hash=config.hash(),
    )


def write_sweep_tsv(table: SweepTable, path: str | os.PathLike, meta: dict) -> None:
    rows = [
        [r.variant, str(r.span), str(r.estimate), r.rho_modifier, r.rho_head, r.n_compounds]
        for r in table.rows
    ]
    write_tsv(path, ["variant", "span", "estimate", "rho_modifier", "rho_head", "n_compounds"], rows, meta)


def read_sweep_tsv(path: str | os.PathLike) -> SweepTable:
    _, columns, raw = read_tsv(path)
    expected = ["variant", "span", "estimate", "rho_modifier", "rho_head", "n_compounds"]
    if columns != expected:
        raise NncompError(f"{path}: unexpected sweep columns {columns}")
    rows = [
        SweepResult(
            variant=cells[0],
            span=LayerSpan.parse(cells[1]),
            estimate=EstimateId.parse(cells[2]),
            rho_modifier=float(cells[3]),
            rho_head=float(cells[4]),
            n_compounds=int(cells[5]),
        )
        for cells in raw
    ]
    variants = tuple(sorted({r.variant for r in rows}))
    spans = sorted({r.span for r in rows})
    estimates = sorted({r.estimate for r in rows}, key=ESTIMATE_INDEX.__getitem__)
    rows.sort(key=lambda r: (r.variant, r.span.start, r.span.end, ESTIMATE_INDEX[r.estimate]))
    return SweepTable(variants=variants, spans=spans, estimates=estimates, rows=rows)


def write_predictions_tsv(store: PredictionStore, path: str | os.PathLike, meta: dict) -> None:
    rows = []
    for variant in sorted(store.variants):
        pred = store.variants[variant]
        for ci, compound in enumerate(pred.compounds):
            for si, span in enumerate(store.spans):
                for ei, estimate in enumerate(store.estimates):
                    rows.append(
                        [
                            compound,
                            variant,
                            str(span),
                            str(estimate),
                            float(pred.values[ci, si, ei]),
                            int(pred.n_sentences[ci]),
                        ]
                    )
    write_tsv(
        path,
        ["compound", "model_variant", "span", "estimate", "value", "n_sentences"],
        rows,
        meta,
    )


def read_predictions_tsv(path: str | os.PathLike) -> PredictionStore:
    _, columns, raw = read_tsv(path)
    expected = ["compound", "model_variant", "span", "estimate", "value", "n_sentences"]
    if columns != expected:
        raise NncompError(f"{path}: unexpected prediction columns {columns}")

    spans = sorted({LayerSpan.parse(cells[2]) for cells in raw})
    estimates = sorted({EstimateId.parse(cells[3]) for cells in raw}, key=ESTIMATE_INDEX.__getitem__)
    span_index = {span: i for i, span in enumerate(spans)}
    est_index = {est: i for i, est in enumerate(estimates)}

    store = PredictionStore(spans=spans, estimates=estimates)
    grouped: dict[str, dict[str, tuple[np.ndarray, int]]] = {}
    for cells in raw:
        compound, variant = cells[0], cells[1]
        per_variant = grouped.setdefault(variant, {})
        if compound not in per_variant:
            per_variant[compound] = (np.full((len(spans), len(estimates)), np.nan), int(cells[5]))
        values, _ = per_variant[compound]
        values[span_index[LayerSpan.parse(cells[2])], est_index[EstimateId.parse(cells[3])]] = float(cells[4])

    for variant, per_compound in grouped.items():
        compounds = list(per_compound)
        store.variants[variant] = VariantPredictions(
            variant=variant,
            compounds=compounds,
            values=np.stack([per_compound[c][0] for c in compounds]),
            n_sentences=np.array([per_compound[c][1] for c in compounds]),
        )
    return store


def _matrix_rows(matrix: np.ndarray, labels: list[str]) -> list[list]:
    rows = []
    for i, label in enumerate(labels):
        rows.append([label] + [float(matrix[i, j]) for j in range(matrix.shape[1])])
    return rows


def write_analyses(outcome: SweepOutcome, config: RunConfig) -> list[str]:
    """Best-config tables, estimate matrices, agreement reports, heatmaps."""
    table = outcome.table
    meta = config.meta()
    out = config.out
    paths: list[str] = []

    def emit_tsv(name: str, columns: list[str], rows: list[list]) -> None:
        path = os.path.join(out, name)
        write_tsv(path, columns, rows, meta)
        paths.append(path)

    for column in GOLD_COLUMNS:
        best = best_configs(table, column, config.top_k)
        emit_tsv(
            f"best_{column}.tsv",
            ["rank", "variant", "span", "estimate", f"rho_{column}", "n_compounds"],
            [
                [i + 1, r.variant, str(r.span), str(r.estimate), r.rho(column), r.n_compounds]
                for i, r in enumerate(best)
            ],
        )

        matrix = estimate_matrix(table, column)
        emit_tsv(
            f"estimate_matrix_{column}.tsv",
            ["target"] + list(TARGET_NAMES),
            _matrix_rows(matrix, list(TARGET_NAMES)),
        )

        for variant in table.variants:
            grid = span_heatmap(table, column, variant)
            emit_tsv(
                f"heatmap_{column}_{variant}.tsv",
                ["end_layer"] + [str(i) for i in range(grid.shape[1])],
                _matrix_rows(grid, [str(i) for i in range(grid.shape[0])]),
            )
            svg_path = os.path.join(out, f"heatmap_{column}_{variant}.svg")
            _write_svg(
                svg_path,
                grid,
                title=f"mean rho, {column} ratings, {variant} model",
                meta=meta,
            )
            paths.append(svg_path)

    emit_tsv(
        "summary.tsv",
        ["variant", "column", "median_rho", "min_rho", "max_rho"],
        [
            [variant, column, *summary_stats(table, variant, column)]
            for variant in table.variants
            for column in GOLD_COLUMNS
        ],
    )

    both_variants = "cased" in table.variants and "uncased" in table.variants
    if both_variants:
        for column in GOLD_COLUMNS:
            delta = casing_delta(table, column)
            emit_tsv(
                f"casing_delta_{column}.tsv",
                ["end_layer"] + [str(i) for i in range(delta.shape[1])],
                _matrix_rows(delta, [str(i) for i in range(delta.shape[0])]),
            )
            svg_path = os.path.join(out, f"casing_delta_{column}.svg")
            _write_svg(
                svg_path,
                delta,
                title=f"cased minus uncased mean rho, {column} ratings",
                meta=meta,
            )
            paths.append(svg_path)

        summary_rows = []
        group_rows = []
        jobs = [("values", None)] + [("rho", column) for column in GOLD_COLUMNS]
        for level, column in jobs:
            for group_by in ("none", "span", "estimate"):
                result = cross_model_correlation(
                    outcome, group_by=group_by, level=level, column=column, on_undefined="nan"
                )
                summary_rows.append(
                    [
                        level,
                        group_by,
                        column or "",
                        len(result.groups),
                        result.mean,
                        result.std if result.std is not None else float("nan"),
                    ]
                )
                group_rows.extend(
                    [level, group_by, column or "", label, rho] for label, rho in result.groups
                )
        emit_tsv(
            "cross_model.tsv",
            ["level", "group_by", "column", "n_groups", "mean_rho", "std_rho"],
            summary_rows,
        )
        emit_tsv(
            "cross_model_groups.tsv",
            ["level", "group_by", "column", "group", "rho"],
            group_rows,
        )

    best_mod = best_configs(table, "modifier", 1)
    best_head = best_configs(table, "head", 1)
    if best_mod and best_head:
        config_a = SweepConfig(best_mod[0].variant, best_mod[0].span, best_mod[0].estimate)
        config_b = SweepConfig(best_head[0].variant, best_head[0].span, best_head[0].estimate)
        emit_tsv(
            "cross_config.tsv",
            ["config_modifier", "config_head", "rho"],
            [[str(config_a), str(config_b), prediction_cross_correlation(outcome.store, config_a, config_b)]],
        )

    return paths


def _write_svg(path: str, matrix: np.ndarray, title: str, meta: dict) -> None:
    comment = " ".join(f"{k}={meta[k]}" for k in sorted(meta))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(render_heatmap(matrix, title=title, comment=comment))


# ---------------------------------------------------------------------------
# report


@dataclass
class ReportSummary:
    analysis_paths: list[str]
    n_rows: int
    config_hash: str


def report(config: RunConfig) -> ReportSummary:
    """Regenerate analyses from persisted sweep and prediction tables."""
    config.validate()
    sweep_path = os.path.join(config.out, "sweep.tsv")
    predictions_path = os.path.join(config.out, "predictions.tsv")
    table = read_sweep_tsv(sweep_path)
    store = read_predictions_tsv(predictions_path)
    gold_dataset = load_gold(config.gold) if config.gold else GoldDataset(entries=[])
    outcome = SweepOutcome(store=store, table=table, gold=gold_dataset)
    paths = write_analyses(outcome, config)
    return ReportSummary(analysis_paths=paths, n_rows=len(table), config_hash=config.hash())
