"""
Testes da MGSF: forward, fusão com porta, gradiente de ponta a ponta,
métricas, segmentação, treino e ablação.
MGSF tests: forward pass, gated fusion, end-to-end gradient, metrics,
segmentation, training and ablation.

Dependências / Dependencies:
- pytest
- numpy
- polars
"""

import numpy as np
import polars as pl
import pytest

from contracts.config_contracts import GeneratorConfig, MgsfConfig
from contracts.domain_contracts import NUM_FEATURES, NUM_THERBLIGS, Demonstration, Therblig
from datagen.dataset import corpus_from_memory
from datagen.demo_generator import generate_demo
from datagen.scene_generator import generate_scene
from datagen.templates import PICK_AND_PLACE, TRAINING_TEMPLATES
from domain.therbligs import one_hot
from mgsf.ablation import (
    ABLATION_SCHEMA,
    METRIC_COLUMNS,
    run_ablation,
    stratified_subset,
    summarize_ablation,
    threshold_baseline_row,
)
from mgsf.baselines import threshold_segment
from mgsf.metrics import cohen_kappa, compute_metrics, contingency_table, macro_recall
from mgsf.model import MgsfModel, forward, gate_parameters, recursive_gated_fusion
from mgsf.segmentation import segment, smooth_labels
from mgsf.training import evaluate, make_batches, train
from numeric.losses import bce_loss
from numeric.optim import grad_check
from numeric.tensor import precision
from utils.errors import ContractError, NumericalError

TOY = dict(lstm_hidden=4, d_model=8, heads=2, ffn_dim=8, encoder_layers=1, fusion_steps=2, meta_dim=4, meta_hidden=4)
VARIANTS = ["full", "no_meta", "no_gate", "backbone"]

# ---------------- Fixtures -------------------


@pytest.fixture(scope="module")
def toy_corpus():
    config = GeneratorConfig(num_demos=5, duration_steps=60, seed=2)
    return corpus_from_memory(config, TRAINING_TEMPLATES[:2])


def toy_model(variant: str = "full", **extra) -> MgsfModel:
    return MgsfModel.initialize(MgsfConfig(variant=variant, **{**TOY, **extra}))


# ---------------- Modelo / Model -------------------


@pytest.mark.parametrize("variant", VARIANTS)
def test_forward_rows_are_probabilities(variant, rng):
    model = toy_model(variant)
    probs = model.predict_proba(rng.normal(size=(9, NUM_FEATURES)))
    assert probs.shape == (9, NUM_THERBLIGS)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)


def test_forward_handles_batches(rng):
    model = toy_model()
    X = rng.normal(size=(2, 5, NUM_FEATURES))
    batched = model.predict_proba(X)
    assert batched.shape == (2, 5, NUM_THERBLIGS)
    assert np.allclose(batched[1], model.predict_proba(X[1]), atol=1e-5)


def test_forward_rejects_wrong_width_and_non_finite(rng):
    model = toy_model()
    with pytest.raises(ContractError):
        model.predict_proba(rng.normal(size=(5, 10)))
    bad = rng.normal(size=(5, NUM_FEATURES))
    bad[2, 4] = np.nan
    with pytest.raises(NumericalError):
        model.predict_proba(bad)


def test_variants_own_distinct_parameter_groups():
    names = {v: set(toy_model(v).params) for v in ("full", "no_meta", "no_gate", "backbone")}
    assert "meta.w2" in names["full"] and "gate.w" not in names["full"]
    assert "gate.w" in names["no_meta"]
    assert "fuse.w" in names["no_gate"]
    assert not any(n.startswith("lstm.") for n in names["backbone"])


def test_gated_fusion_matches_loop_oracle(rng):
    model = toy_model("full", fusion_steps=3, fusion_init="zeros")
    c = rng.normal(size=(5, model.config.fused_dim))
    with precision(np.float64):
        out = recursive_gated_fusion(c, model).data
        w_g, b_g = (t.data.astype(np.float64) for t in gate_parameters(model))
    F = np.zeros_like(c)
    for _ in range(3):
        G = 1.0 / (1.0 + np.exp(-(c @ w_g + b_g)))
        F = G * c + (1.0 - G) * F
    assert np.allclose(out, F, atol=1e-6)


def test_gated_fusion_from_input_keeps_input(rng):
    model = toy_model("no_meta")
    c = rng.normal(size=(4, model.config.fused_dim))
    with precision(np.float64):
        assert np.allclose(recursive_gated_fusion(c, model).data, c, atol=1e-12)


def test_fusion_rejects_wrong_width(rng):
    model = toy_model("full")
    with pytest.raises(ContractError):
        recursive_gated_fusion(rng.normal(size=(4, 3)), model)


@pytest.mark.parametrize("variant", ["full", "no_gate"])
def test_end_to_end_gradient_check(variant, rng):
    model = toy_model(variant, fusion_init="zeros")
    X = rng.normal(size=(6, NUM_FEATURES))
    Y = one_hot(rng.integers(0, NUM_THERBLIGS, 6))
    params = {k: np.array(v.data, dtype=np.float64) for k, v in model.params.items()}

    def f(t):
        return bce_loss(forward(X, model.with_params(t)), Y)

    assert grad_check(f, params, max_checks_per_param=4) <= 1e-4


def test_save_and_load_reproduce_predictions(tmp_path, rng):
    model = toy_model("no_meta")
    model.set_standardization(rng.normal(size=NUM_FEATURES), rng.uniform(0.5, 2.0, NUM_FEATURES))
    path = model.save(str(tmp_path / "m.json"))
    loaded = MgsfModel.load(path)
    X = rng.normal(size=(7, NUM_FEATURES))
    assert loaded.variant == "no_meta"
    assert np.allclose(loaded.predict_proba(X), model.predict_proba(X), atol=1e-5)


# ---------------- Métricas / Metrics -------------------


def test_metrics_small_oracle():
    metrics = compute_metrics([np.array([0, 1, 1, 1])], [np.array([0, 0, 1, 1])])
    assert metrics.recall == pytest.approx(75.0)
    assert metrics.kappa == pytest.approx(50.0)
    assert metrics.precision == pytest.approx(100.0 * (1.0 + 2.0 / 3.0) / 2.0)
    assert set(metrics.excluded_classes) == {t.name for t in Therblig if t not in (Therblig.REST, Therblig.TRANSPORT_EMPTY)}


def test_perfect_prediction_scores_100():
    truth = np.array([0, 0, 3, 4, 6, 0])
    metrics = compute_metrics([truth], [truth])
    assert metrics.recall == metrics.precision == metrics.f1 == metrics.kappa == pytest.approx(100.0)


def test_tp_range_spans_task_recalls():
    truths = [np.array([0, 1]), np.array([0, 1])]
    preds = [np.array([0, 1]), np.array([0, 0])]
    metrics = compute_metrics(preds, truths, ["a", "b"])
    assert metrics.tp_range == pytest.approx((50.0, 100.0))
    assert metrics.per_task_recall == pytest.approx({"a": 100.0, "b": 50.0})


def test_metrics_reject_length_mismatch():
    with pytest.raises(ContractError):
        compute_metrics([np.array([0, 1])], [np.array([0, 1, 1])])


def test_kappa_of_constant_agreement():
    table = contingency_table(np.array([2, 2, 2]), np.array([2, 2, 2]))
    assert cohen_kappa(table) == 1.0
    assert macro_recall([2, 2, 2], [2, 2, 2]) == pytest.approx(100.0)


# ---------------- Segmentação / Segmentation -------------------


def test_smoothing_removes_isolated_flips():
    labels = np.array([0, 0, 0, 1, 0, 0, 0, 3, 3, 3, 3, 3])
    assert smooth_labels(labels, 3).tolist() == [0] * 7 + [3] * 5
    with pytest.raises(ContractError):
        smooth_labels(labels, 4)


def test_segment_returns_probabilities_and_covering_segments(rng):
    model = toy_model("backbone")
    demo = Demonstration(states=rng.normal(size=(12, NUM_FEATURES)), gripper=np.zeros(12, dtype=bool))
    labels, segments = segment(demo, model, window=3)
    assert labels.probabilities.shape == (12, NUM_THERBLIGS)
    assert segments[0].start == 0 and segments[-1].end == 12


@pytest.mark.parametrize("variant", VARIANTS)
def test_single_demo_forward_matches_its_batched_row(variant, toy_corpus):
    model = toy_model(variant)
    X = toy_corpus.items[0].demo.states
    single = forward(X, model)
    assert single.shape == (X.shape[0], NUM_THERBLIGS)
    batched = model.predict_proba(np.stack([X, X]))
    assert np.allclose(single.data, batched[0], atol=1e-5)


@pytest.mark.parametrize("variant", VARIANTS)
def test_single_generated_demo_is_segmented(variant):
    scene = generate_scene(2, 0, seed=3)
    demo, _, _ = generate_demo(PICK_AND_PLACE, scene, seed=4, config=GeneratorConfig(duration_steps=60))
    labels, segments = segment(demo, toy_model(variant), window=3)
    assert labels.labels.shape == (demo.n,)
    assert np.allclose(labels.probabilities.sum(axis=1), 1.0)
    assert segments[0].start == 0 and segments[-1].end == demo.n


@pytest.mark.parametrize("variant", VARIANTS)
def test_training_scores_validation_demos_one_at_a_time(variant, toy_corpus):
    config = MgsfConfig(variant=variant, epochs=1, batch_size=2, **TOY)
    result = train(MgsfModel.initialize(config), toy_corpus, config, progress=False)
    assert not result.diverged, result.error
    assert len(result.log) == 1
    assert 0.0 <= result.best_val_recall <= 100.0


def test_threshold_baseline_finds_grasp_near_gripper_closing():
    demo, _, _ = generate_demo(PICK_AND_PLACE, generate_scene(2, 0, seed=3), seed=4)
    labels = threshold_segment(demo).labels
    assert labels.shape == (demo.n,)
    closing = int(np.flatnonzero(np.diff(demo.gripper.astype(int)) == 1)[0]) + 1
    window = labels[max(0, closing - 3) : closing + 3]
    assert Therblig.GRASP in window.tolist()


# ---------------- Treino / Training -------------------


def test_batches_group_equal_lengths(toy_corpus, rng):
    items = toy_corpus.split("train")
    batches = make_batches(items, 2, rng)
    assert sorted(i for b in batches for i in b) == list(range(len(items)))
    assert all(len({items[i].demo.n for i in b}) == 1 for b in batches)


def test_training_logs_epochs_and_keeps_best_checkpoint(toy_corpus, tmp_path):
    config = MgsfConfig(variant="full", epochs=2, batch_size=2, patience=5, **TOY)
    path = str(tmp_path / "best.json")
    result = train(MgsfModel.initialize(config), toy_corpus, config, checkpoint_path=path, progress=False)
    assert 1 <= len(result.log) <= 2
    assert result.best_epoch >= 0
    assert not result.diverged
    reloaded = MgsfModel.load(path)
    X = toy_corpus.split("test")[0].demo.states
    assert np.allclose(reloaded.predict_proba(X), result.model.predict_proba(X), atol=1e-5)
    metrics = evaluate(result.model, toy_corpus.split("test"))
    assert 0.0 <= metrics.recall <= 100.0
    assert metrics.bce_loss is not None


def test_training_is_deterministic_per_seed(toy_corpus):
    config = MgsfConfig(variant="no_meta", epochs=1, batch_size=2, seed=4, **TOY)
    a = train(MgsfModel.initialize(config), toy_corpus, config, progress=False)
    b = train(MgsfModel.initialize(config), toy_corpus, config, progress=False)
    for name, value in a.model.state_dict().items():
        assert np.array_equal(value, b.model.state_dict()[name])


def test_training_needs_val_split(toy_corpus):
    only_train = toy_corpus.subset(toy_corpus.split("train"))
    with pytest.raises(ContractError):
        train(toy_model(), only_train, progress=False)


# ---------------- Ablação / Ablation -------------------


def test_ablation_needs_two_seeds(toy_corpus):
    with pytest.raises(ContractError):
        run_ablation(toy_corpus, [0], MgsfConfig(**TOY))


@pytest.mark.slow
def test_ablation_table_has_one_row_per_cell(toy_corpus):
    base = MgsfConfig(epochs=1, batch_size=2, **TOY)
    table = run_ablation(toy_corpus, [0, 1], base)
    assert table.height == 8
    assert table.filter(pl.col("error").is_not_null()).height == 0
    assert summarize_ablation(table)["variant"].to_list() == ["full", "no_meta", "no_gate", "backbone"]


def test_summary_skips_failed_cells_and_keeps_order():
    rows = [
        {"variant": "no_gate", "seed": 0, **{m: 10.0 for m in METRIC_COLUMNS}, "best_epoch": 1, "error": None},
        {"variant": "no_gate", "seed": 1, **{m: 20.0 for m in METRIC_COLUMNS}, "best_epoch": 1, "error": None},
        {"variant": "full", "seed": 0, **{m: None for m in METRIC_COLUMNS}, "best_epoch": None, "error": "boom"},
        {"variant": "full", "seed": 1, **{m: 30.0 for m in METRIC_COLUMNS}, "best_epoch": 0, "error": None},
    ]
    summary = summarize_ablation(pl.DataFrame(rows, schema=ABLATION_SCHEMA))
    assert summary["variant"].to_list() == ["no_gate", "full"]
    assert summary["cells"].to_list() == [2, 1]
    assert summary["recall_mean"].to_list() == pytest.approx([15.0, 30.0])


def test_stratified_subset_takes_first_demos_of_every_task(toy_corpus):
    subset = stratified_subset(toy_corpus, 4)
    assert len(subset) == 4
    assert {it.task_name for it in subset.items} == set(toy_corpus.task_names())
    assert sorted(it.record.index for it in subset.items) == [0, 0, 1, 1]


def test_threshold_row_has_every_metric(toy_corpus):
    row = threshold_baseline_row(toy_corpus, "train")
    assert row["variant"] == "threshold"
    assert set(METRIC_COLUMNS) <= set(row)
