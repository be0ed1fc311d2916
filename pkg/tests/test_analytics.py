import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nncomp.analytics import (
    PredictionStore,
    SweepConfig,
    SweepOutcome,
    SweepResult,
    SweepTable,
    VariantPredictions,
    average_ranks,
    best_configs,
    casing_delta,
    compute_predictions,
    correlate_predictions,
    cross_model_correlation,
    estimate_matrix,
    prediction_cross_correlation,
    run_sweep,
    span_heatmap,
    spearman,
    summary_stats,
)
from nncomp.errors import CorrelationError, MissingInputError
from nncomp.estimates import ESTIMATES, EstimateId
from nncomp.gold import CompoundEntry, GoldDataset
from nncomp.store import SentenceTensor, TokenRole, write_embeddings
from nncomp.targets import TARGET_NAMES, LayerSpan, enumerate_spans


def oracle_spearman(x, y):
    def brute_ranks(values):
        return [
            sum(1 for other in values if other < item)
            + (sum(1 for other in values if other == item) + 1) / 2
            for item in values
        ]

    rx, ry = brute_ranks(list(x)), brute_ranks(list(y))
    n = len(rx)
    mx, my = math.fsum(rx) / n, math.fsum(ry) / n
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = math.fsum((a - mx) ** 2 for a in rx)
    vy = math.fsum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def test_average_ranks_with_ties():
    assert list(average_ranks([10, 20, 20, 30])) == [1.0, 2.5, 2.5, 4.0]


def test_spearman_identity_and_reversal():
    x = [1.0, 2.0, 5.0, 9.0]
    assert spearman(x, x) == pytest.approx(1.0, abs=1e-15)
    assert spearman(x, x[::-1]) == pytest.approx(-1.0, abs=1e-15)


def test_spearman_hand_computed():
    assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6, abs=1e-15)


def test_spearman_errors():
    with pytest.raises(CorrelationError, match="constant"):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(CorrelationError, match="at least 3"):
        spearman([1, 2], [2, 1])
    with pytest.raises(CorrelationError, match="mismatch"):
        spearman([1, 2, 3], [1, 2])


def test_spearman_matches_oracle_with_ties():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(3, 51))
        x = rng.integers(0, 10, size=n).astype(float)
        y = rng.integers(0, 10, size=n).astype(float)
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        assert spearman(x, y) == pytest.approx(oracle_spearman(x, y), abs=1e-12)


@given(
    st.lists(st.integers(min_value=-50, max_value=50), min_size=3, max_size=30),
    st.integers(min_value=1, max_value=9),
    st.integers(min_value=0, max_value=100),
)
@settings(max_examples=150)
def test_spearman_invariant_under_monotone_transform(y, scale, shift):
    x = list(range(len(y)))
    if len(set(y)) < 2:
        return
    transformed = [scale * value + shift for value in y]  # strictly increasing map
    assert spearman(x, y) == spearman(x, transformed)


# ---------------------------------------------------------------------------
# synthetic tables and stores


def make_table(n_layers=3, variants=("cased", "uncased"), rho_fn=None):
    spans = enumerate_spans(n_layers)
    rows = []
    for variant in variants:
        for span in spans:
            for estimate in ESTIMATES:
                rho_mod, rho_head = (
                    rho_fn(variant, span, estimate) if rho_fn else (0.1, 0.2)
                )
                rows.append(
                    SweepResult(variant, span, estimate, rho_mod, rho_head, n_compounds=30)
                )
    return SweepTable(variants=tuple(variants), spans=spans, estimates=list(ESTIMATES), rows=rows)


def test_best_configs_ordering_and_bounds():
    special = SweepConfig("uncased", LayerSpan(1, 2), EstimateId.direct("modif", "cont"))

    def rho_fn(variant, span, estimate):
        if (variant, span, estimate) == (special.variant, special.span, special.estimate):
            return 0.9, 0.0
        return 0.1, 0.2

    table = make_table(rho_fn=rho_fn)
    best = best_configs(table, "modifier", 5)
    assert (best[0].variant, best[0].span, best[0].estimate) == (
        special.variant,
        special.span,
        special.estimate,
    )
    # everything else ties at 0.1; deterministic tie-break: variant, start, end, estimate order
    assert best[1].variant == "cased"
    assert best[1].span == LayerSpan(0, 0)
    assert best[1].estimate == ESTIMATES[0]

    assert best_configs(table, "modifier", 0) == []
    assert len(best_configs(table, "modifier", 10_000)) == len(table.rows)


def test_estimate_matrix_symmetry_and_max():
    def rho_fn(variant, span, estimate):
        if estimate == EstimateId.direct("modif", "cont") and span == LayerSpan(1, 1) and variant == "uncased":
            return 0.75, 0.3
        return 0.1, 0.2

    table = make_table(rho_fn=rho_fn)
    matrix = estimate_matrix(table, "modifier")
    i, j = TARGET_NAMES.index("modif"), TARGET_NAMES.index("cont")
    assert matrix[i, j] == 0.75
    assert matrix[j, i] == 0.75
    assert np.isnan(np.diag(matrix)).all()
    off_diagonal = ~np.eye(len(TARGET_NAMES), dtype=bool)
    assert np.allclose(matrix[off_diagonal & (matrix != 0.75)], 0.1)
    assert np.array_equal(matrix, matrix.T, equal_nan=True)


def test_span_heatmap_constant_field_and_cell_means():
    rng = np.random.default_rng(1)
    values = {}

    def rho_fn(variant, span, estimate):
        values[(variant, span, estimate)] = rng.uniform(-1, 1)
        return values[(variant, span, estimate)], 0.0

    table = make_table(rho_fn=rho_fn)
    grid = span_heatmap(table, "modifier", "cased")
    assert grid.shape == (3, 3)
    assert np.isnan(grid[0, 1]) and np.isnan(grid[0, 2]) and np.isnan(grid[1, 2])
    for span in table.spans:
        expected = np.mean([values[("cased", span, e)] for e in ESTIMATES])
        rows = [r for r in table.rows if r.variant == "cased" and r.span == span]
        assert len(rows) == 19
        assert grid[span.end, span.start] == pytest.approx(expected, abs=1e-12)

    constant = make_table(rho_fn=lambda *a: (0.42, 0.0))
    constant_grid = span_heatmap(constant, "modifier", "uncased")
    defined = constant_grid[np.isfinite(constant_grid)]
    assert np.allclose(defined, 0.42)


def test_casing_delta():
    identical = make_table(rho_fn=lambda *a: (0.3, 0.1))
    delta = casing_delta(identical, "modifier")
    assert np.allclose(delta[np.isfinite(delta)], 0.0)

    shifted = make_table(rho_fn=lambda variant, s, e: (0.35 if variant == "cased" else 0.3, 0.0))
    delta = casing_delta(shifted, "modifier")
    assert np.allclose(delta[np.isfinite(delta)], 0.05)


def test_summary_stats_singleton_table():
    span = LayerSpan(0, 0)
    table = SweepTable(
        variants=("cased",),
        spans=[span],
        estimates=[ESTIMATES[0]],
        rows=[SweepResult("cased", span, ESTIMATES[0], 0.37, 0.2, 5)],
    )
    stats = summary_stats(table, "cased", "modifier")
    assert stats.median == stats.minimum == stats.maximum == 0.37


def make_store(values_by_variant, spans=None, estimates=None, compounds=None):
    spans = spans or enumerate_spans(2)
    estimates = estimates or list(ESTIMATES)
    store = PredictionStore(spans=spans, estimates=estimates)
    for variant, values in values_by_variant.items():
        names = compounds or [f"K{i:02d}" for i in range(values.shape[0])]
        store.variants[variant] = VariantPredictions(
            variant=variant,
            compounds=list(names),
            values=values,
            n_sentences=np.full(values.shape[0], 2),
        )
    return store


def test_prediction_cross_correlation_self_and_reversal():
    rng = np.random.default_rng(2)
    n = 12
    values = rng.normal(size=(n, 3, 19))
    si, ei = 1, 4
    anti = values.copy()
    order = np.argsort(values[:, si, ei])
    anti[:, si, ei][order] = np.sort(values[:, si, ei])[::-1]

    store = make_store({"cased": values, "uncased": anti})
    config = SweepConfig("cased", store.spans[si], store.estimates[ei])
    assert prediction_cross_correlation(store, config, config) == pytest.approx(1.0, abs=1e-15)

    config_b = SweepConfig("uncased", store.spans[si], store.estimates[ei])
    assert prediction_cross_correlation(store, config, config_b) == pytest.approx(-1.0, abs=1e-15)


def test_cross_model_identical_predictions_all_ones():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(10, 3, 19))
    store = make_store({"cased": values, "uncased": values.copy()})
    table = make_table()  # not used by level="values"
    outcome = SweepOutcome(store=store, table=table, gold=GoldDataset(entries=[]))

    overall = cross_model_correlation(outcome, group_by="none", level="values")
    assert overall.mean == pytest.approx(1.0, abs=1e-15)
    assert overall.std is None and len(overall.groups) == 1

    per_span = cross_model_correlation(outcome, group_by="span", level="values")
    assert len(per_span.groups) == 3
    assert all(rho == pytest.approx(1.0, abs=1e-15) for _, rho in per_span.groups)

    per_estimate = cross_model_correlation(outcome, group_by="estimate", level="values")
    assert len(per_estimate.groups) == 19
    assert per_estimate.mean == pytest.approx(1.0, abs=1e-15)


def test_cross_model_undefined_groups_raise_or_nan():
    # constant rho for every configuration: no group correlation is defined
    table = make_table(rho_fn=lambda *a: (0.25, 0.25))
    outcome = SweepOutcome(store=make_store({}), table=table, gold=GoldDataset(entries=[]))
    with pytest.raises(CorrelationError):
        cross_model_correlation(outcome, group_by="span", level="rho", column="modifier")
    result = cross_model_correlation(
        outcome, group_by="span", level="rho", column="modifier", on_undefined="nan"
    )
    assert len(result.groups) == 3
    assert all(math.isnan(rho) for _, rho in result.groups)
    assert math.isnan(result.mean) and math.isnan(result.std)


def test_cross_model_rho_level():
    rng = np.random.default_rng(4)

    def rho_fn(variant, span, estimate):
        base = hash((span, estimate)) % 1000 / 1000.0
        return base + (0.001 if variant == "cased" else 0.0), base

    table = make_table(rho_fn=rho_fn)
    outcome = SweepOutcome(
        store=make_store({}), table=table, gold=GoldDataset(entries=[])
    )
    result = cross_model_correlation(outcome, group_by="none", level="rho", column="modifier")
    assert result.mean == pytest.approx(1.0, abs=1e-12)  # same ordering in both variants
    with pytest.raises(ValueError):
        cross_model_correlation(outcome, group_by="none", level="rho")


# ---------------------------------------------------------------------------
# file-backed sweeps


def single_layer_tensor(mod, head, ctx, dim=4):
    roles = np.array(
        [TokenRole.CLS, TokenRole.MODIFIER_SUBWORD, TokenRole.HEAD_SUBWORD, TokenRole.CONTEXT, TokenRole.SEP],
        dtype=np.uint8,
    )
    vectors = np.zeros((1, 5, dim), dtype=np.float32)
    vectors[0, 0, 2] = 1.0  # cls
    vectors[0, 1, : len(mod)] = mod
    vectors[0, 2, : len(head)] = head
    vectors[0, 3, : len(ctx)] = ctx
    vectors[0, 4, 3] = 1.0  # sep
    return SentenceTensor("Komp", roles, vectors)


def test_mult_aggregation_is_per_sentence(tmp_path):
    # sentence 1: cos(modif,cont)=1, cos(head,cont)=0; sentence 2: the reverse.
    s1 = single_layer_tensor(mod=[1, 0], head=[0, 1], ctx=[1, 0])
    s2 = single_layer_tensor(mod=[0, 1], head=[1, 0], ctx=[1, 0])
    path = tmp_path / "Komp.cased.cemb"
    write_embeddings(path, [s1, s2], variant="cased", dim=4, n_layers=1)

    gold = GoldDataset([CompoundEntry("Komp", "Mod", "Kopf", 3.0, 3.0)])
    store = compute_predictions(gold, {"cased": {"Komp": str(path)}})
    mult_cont = store.estimates.index(EstimateId.composite("mult", "cont"))
    add_cont = store.estimates.index(EstimateId.composite("add", "cont"))
    # mean over sentences of (a*b), not the product of means (which would be 0.25)
    assert store.variants["cased"].values[0, 0, mult_cont] == pytest.approx(0.0, abs=1e-12)
    assert store.variants["cased"].values[0, 0, add_cont] == pytest.approx(1.0, abs=1e-12)
    assert store.variants["cased"].n_sentences[0] == 2


def test_run_sweep_on_planted_fixture(planted):
    outcome = run_sweep(planted.gold, planted.embeddings_dir)
    assert len(outcome.table) == 2 * 91 * 19
    assert all(r.n_compounds == 30 for r in outcome.table.rows)

    top_mod = best_configs(outcome.table, "modifier", 1)[0]
    assert (top_mod.variant, top_mod.span, top_mod.estimate) == (
        planted.modifier_config.variant,
        planted.modifier_config.span,
        planted.modifier_config.estimate,
    )
    assert top_mod.rho_modifier == pytest.approx(1.0, abs=1e-9)

    top_head = best_configs(outcome.table, "head", 1)[0]
    assert (top_head.variant, top_head.span, top_head.estimate) == (
        planted.head_config.variant,
        planted.head_config.span,
        planted.head_config.estimate,
    )
    assert top_head.rho_head == pytest.approx(1.0, abs=1e-9)


def test_sweep_gold_order_invariance(planted):
    outcome = run_sweep(planted.gold, planted.embeddings_dir)
    reversed_gold = GoldDataset(list(reversed(planted.gold.entries)))
    outcome_reversed = run_sweep(reversed_gold, planted.embeddings_dir)
    for row, row_reversed in zip(outcome.table.rows, outcome_reversed.table.rows):
        assert row.variant == row_reversed.variant
        assert row.span == row_reversed.span and row.estimate == row_reversed.estimate
        assert row.rho_modifier == pytest.approx(row_reversed.rho_modifier, abs=1e-12)
        assert row.rho_head == pytest.approx(row_reversed.rho_head, abs=1e-12)


def test_sweep_worker_count_independence(planted):
    serial = run_sweep(planted.gold, planted.embeddings_dir, workers=1)
    parallel = run_sweep(planted.gold, planted.embeddings_dir, workers=3)
    for a, b in zip(serial.table.rows, parallel.table.rows):
        assert a == b


def test_sweep_missing_variant_file_excludes_compound(planted, tmp_path, caplog):
    import shutil

    partial = tmp_path / "partial"
    shutil.copytree(planted.embeddings_dir, partial)
    victim = planted.gold.entries[0].compound
    (partial / f"{victim}.cased.cemb").unlink()

    outcome = run_sweep(planted.gold, partial)
    per_variant = {r.variant: r.n_compounds for r in outcome.table.rows}
    assert per_variant["cased"] == 29
    assert per_variant["uncased"] == 30


def test_sweep_requires_three_compounds(planted, tmp_path):
    import os
    import shutil

    tiny = tmp_path / "tiny"
    tiny.mkdir()
    for entry in planted.gold.entries[:2]:
        for variant in ("cased", "uncased"):
            name = f"{entry.compound}.{variant}.cemb"
            shutil.copy(os.path.join(planted.embeddings_dir, name), tiny / name)
    with pytest.raises(CorrelationError, match="evaluable"):
        run_sweep(GoldDataset(planted.gold.entries[:2]), str(tiny))
