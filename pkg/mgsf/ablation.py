"""
ablation.py
-----------

Ablação das variantes da MGSF (full, no_meta, no_gate, backbone) por semente,
varredura de tamanho do dataset e linha de referência do segmentador por
limiares.
Ablation of the MGSF variants (full, no_meta, no_gate, backbone) per seed,
dataset-size sweep and the threshold-segmenter reference row.

Uma célula que falha é registrada com o erro e não interrompe as demais.
A failing cell is recorded with its error and does not stop the others.

Dependências / Dependencies:
- polars
"""

from typing import Optional, Sequence

import numpy as np
import polars as pl

from contracts.config_contracts import VARIANTS, MgsfConfig
from datagen.dataset import Corpus
from mgsf.baselines import threshold_segment
from mgsf.metrics import compute_metrics
from mgsf.model import MgsfModel
from mgsf.training import evaluate, train
from utils.errors import ContractError
from utils.logger import setup_logger

logger = setup_logger("mgsf_ablation")

SWEEP_SIZES = (30, 90, 150, 210, 270, 312)
METRIC_COLUMNS = ("bce_loss", "precision", "recall", "f1", "kappa", "tp_min", "tp_max")

ABLATION_SCHEMA = {
    "variant": pl.Utf8,
    "seed": pl.Int64,
    **{name: pl.Float64 for name in METRIC_COLUMNS},
    "best_epoch": pl.Int64,
    "error": pl.Utf8,
}


def _metric_row(metrics) -> dict:
    return {
        "bce_loss": metrics.bce_loss,
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
        "kappa": metrics.kappa,
        "tp_min": metrics.tp_range[0],
        "tp_max": metrics.tp_range[1],
    }


def _empty_metrics() -> dict:
    return {name: None for name in METRIC_COLUMNS}


def run_cell(corpus: Corpus, config: MgsfConfig, progress: bool = False) -> dict:
    model = MgsfModel.initialize(config)
    result = train(model, corpus, config, progress=progress)
    metrics = evaluate(result.model, corpus.split("test"))
    return {**_metric_row(metrics), "best_epoch": result.best_epoch, "error": result.error}


def run_ablation(
    corpus: Corpus,
    seeds: Sequence[int],
    base_config: Optional[MgsfConfig] = None,
    variants: Sequence[str] = VARIANTS,
    progress: bool = False,
) -> pl.DataFrame:
    """
    Treina cada variante para cada semente com a mesma ordem de dados.
    Train every variant for every seed with the same data order.

    Retorna uma linha por (variante, semente) / Returns one row per (variant, seed).
    """
    if len(seeds) < 2:
        raise ContractError(f"an ablation needs at least 2 seeds, got {len(seeds)}")
    base_config = base_config or MgsfConfig()

    rows = []
    for seed in seeds:
        for variant in variants:
            config = base_config.model_copy(update={"variant": variant, "seed": int(seed)})
            try:
                row = run_cell(corpus, config, progress)
            except Exception as e:
                logger.error(
                    f"Falha na célula ({variant}, {seed}): {e} / Cell ({variant}, {seed}) failed: {e}"
                )
                row = {**_empty_metrics(), "best_epoch": None, "error": f"{type(e).__name__}: {e}"}
            rows.append({"variant": variant, "seed": int(seed), **row})
            logger.info(f"Célula ({variant}, {seed}) concluída / Cell ({variant}, {seed}) done")

    return pl.DataFrame(rows, schema=ABLATION_SCHEMA)


def threshold_metrics(corpus: Corpus, split: str = "test"):
    """Metrics of the threshold segmenter on one split."""
    items = corpus.split(split)
    if not items:
        raise ContractError(f"split {split} is empty")
    preds = [threshold_segment(it.demo) for it in items]
    return compute_metrics(preds, [it.labels for it in items], [it.task_name for it in items])


def threshold_baseline_row(corpus: Corpus, split: str = "test") -> dict:
    return {"variant": "threshold", **_metric_row(threshold_metrics(corpus, split))}


def summarize_ablation(table: pl.DataFrame) -> pl.DataFrame:
    """Mean and std per variant over the successful cells, in input variant order."""
    ok = table.filter(pl.col("error").is_null())
    order = list(dict.fromkeys(table["variant"].to_list()))
    summary = (
        ok.group_by("variant")
        .agg(
            [pl.len().alias("cells")]
            + [pl.col(c).mean().alias(f"{c}_mean") for c in METRIC_COLUMNS]
            + [pl.col(c).std().alias(f"{c}_std") for c in METRIC_COLUMNS]
        )
        .with_columns(pl.col("variant").replace_strict(order, list(range(len(order))), default=None).alias("_order"))
        .sort("_order")
        .drop("_order")
    )
    return summary


def stratified_subset(corpus: Corpus, size: int) -> Corpus:
    """Take the first ⌈size / tasks⌉ demos (by generation index) of every task, splits preserved."""
    tasks = corpus.task_names()
    per_task = int(np.ceil(size / len(tasks)))
    items = []
    for task in tasks:
        task_items = sorted((it for it in corpus.items if it.task_name == task), key=lambda it: it.record.index)
        items.extend(task_items[:per_task])
    return corpus.subset(items)


def run_dataset_sweep(
    corpus: Corpus,
    sizes: Sequence[int] = SWEEP_SIZES,
    seeds: Sequence[int] = (0, 1),
    base_config: Optional[MgsfConfig] = None,
    progress: bool = False,
) -> pl.DataFrame:
    """
    Treina a variante full em subconjuntos estratificados; avalia sempre no test completo.
    Train the full variant on stratified subsets; always evaluate on the full test split.
    """
    base_config = (base_config or MgsfConfig()).model_copy(update={"variant": "full"})
    test_items = corpus.split("test")
    rows = []
    for size in sizes:
        subset = stratified_subset(corpus, size)
        for seed in seeds:
            config = base_config.model_copy(update={"seed": int(seed)})
            try:
                model = MgsfModel.initialize(config)
                result = train(model, subset, config, progress=progress)
                recall = evaluate(result.model, test_items).recall
                error = result.error
            except Exception as e:
                logger.error(f"Falha no tamanho {size}, semente {seed}: {e} / Size {size}, seed {seed} failed: {e}")
                recall, error = None, f"{type(e).__name__}: {e}"
            rows.append({"size": int(size), "demos": len(subset), "seed": int(seed), "recall": recall, "error": error})
    return pl.DataFrame(
        rows, schema={"size": pl.Int64, "demos": pl.Int64, "seed": pl.Int64, "recall": pl.Float64, "error": pl.Utf8}
    )
