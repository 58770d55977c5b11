"""
Testes de benchmark no corpus sintético completo (312 demos): ablação das
variantes, varredura de tamanho e sucesso com o segmentador treinado.
Benchmark tests on the full synthetic corpus (312 demos): variant ablation,
dataset-size sweep and success with the trained segmenter.

Todos são `slow`: rodam com --runslow / All are `slow`: run with --runslow.

Dependências / Dependencies:
- pytest
- numpy
- polars
"""

import numpy as np
import polars as pl
import pytest

from contracts.config_contracts import GeneratorConfig, MgsfConfig, ScenarioConfig
from datagen.dataset import corpus_from_memory
from datagen.templates import TEST_TEMPLATES, TRAINING_TEMPLATES
from harness.suite import CATEGORY_NAMES, run_success_suite
from mgsf.ablation import SWEEP_SIZES, run_ablation, run_dataset_sweep, summarize_ablation
from mgsf.model import MgsfModel
from mgsf.segmentation import model_segmenter
from mgsf.training import train

# ---------------- Fixtures -------------------


@pytest.fixture(scope="module")
def benchmark_corpus():
    corpus = corpus_from_memory(GeneratorConfig(), TRAINING_TEMPLATES)
    assert len(corpus) == 312
    return corpus


@pytest.fixture(scope="module")
def trained_full(benchmark_corpus):
    config = MgsfConfig(variant="full", seed=0)
    return train(MgsfModel.initialize(config), benchmark_corpus, config)


# ---------------- Testes -------------------


@pytest.mark.slow
def test_full_model_reaches_90_validation_recall(trained_full):
    assert not trained_full.diverged, trained_full.error
    assert trained_full.best_val_recall >= 90.0


@pytest.mark.slow
def test_ablation_keeps_the_variant_ordering(benchmark_corpus):
    table = run_ablation(benchmark_corpus, list(range(5)), MgsfConfig())
    assert table.filter(pl.col("error").is_not_null()).height == 0
    summary = summarize_ablation(table)
    recall = dict(zip(summary["variant"].to_list(), summary["recall_mean"].to_list()))
    assert recall["full"] >= recall["no_meta"] >= recall["no_gate"] >= recall["backbone"], recall
    assert recall["full"] - recall["backbone"] >= 2.0


@pytest.mark.slow
def test_recall_does_not_drop_as_the_corpus_grows(benchmark_corpus):
    sweep = run_dataset_sweep(benchmark_corpus, SWEEP_SIZES, seeds=(0, 1), base_config=MgsfConfig())
    assert sweep.filter(pl.col("error").is_not_null()).height == 0
    by_size = (
        sweep.group_by("size")
        .agg(pl.col("recall").mean().alias("mean"), pl.col("recall").std().alias("std"))
        .sort("size")
    )
    assert by_size["size"].to_list() == list(SWEEP_SIZES)
    pooled = float(np.sqrt(np.mean(np.square(by_size["std"].to_numpy()))))
    means = by_size["mean"].to_list()
    for smaller, larger in zip(means, means[1:]):
        assert larger >= smaller - pooled, (means, pooled)


@pytest.mark.slow
def test_trained_segmenter_succeeds_in_sim_at_least_as_often_as_in_com(trained_full):
    segmenter = model_segmenter(trained_full.model)
    sim, _ = run_success_suite(TEST_TEMPLATES, ScenarioConfig(mode="sim"), segmenter, threads=4, progress=False)
    com, _ = run_success_suite(TEST_TEMPLATES, ScenarioConfig(mode="com"), segmenter, threads=4, progress=False)
    assert sim.total_trials == com.total_trials == 5 * 50
    assert sim.total_rate >= 0.9
    assert sim.total_rate >= com.total_rate
    for result in (sim, com):
        assert list(result.failure_histogram) == CATEGORY_NAMES
        assert sum(result.failure_histogram.values()) + result.total_successes == result.total_trials
