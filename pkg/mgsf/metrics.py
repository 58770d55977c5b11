"""
metrics.py
----------

Métricas de segmentação: precisão, recall e F1 macro, kappa de Cohen e
faixa de recall por tarefa (TP-Range), em porcentagem.
Segmentation metrics: macro precision, recall and F1, Cohen's kappa and the
per-task recall range (TP-Range), in percent.

Regras / Rules:
- Classes ausentes da verdade ficam fora da média macro (com aviso).
  Classes absent from the truth are left out of the macro average (with a warning).
- F1 macro = média do F1 por classe / macro F1 = mean of per-class F1.
- Kappa a partir da tabela de contingência 7×7 completa.
  Kappa from the full 7×7 contingency table.
"""

from typing import Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from contracts.domain_contracts import NUM_THERBLIGS, LabelSequence, Therblig
from contracts.report_contracts import Metrics
from domain.therbligs import LabelsLike, as_label_array, check_codes
from utils.errors import ContractError
from utils.logger import setup_logger

logger = setup_logger("mgsf_metrics")

CLASS_CODES = list(range(NUM_THERBLIGS))


def contingency_table(truth: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    return confusion_matrix(truth, pred, labels=CLASS_CODES)


def per_class_scores(table: np.ndarray) -> dict[str, np.ndarray]:
    """Per-class precision, recall and F1 in [0, 1]; `present` marks classes seen in the truth."""
    table = table.astype(np.float64)
    tp = np.diag(table)
    support = table.sum(axis=1)
    predicted = table.sum(axis=0)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2.0 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return {"precision": precision, "recall": recall, "f1": f1, "present": support > 0}


def cohen_kappa(table: np.ndarray) -> float:
    table = table.astype(np.float64)
    total = table.sum()
    if total == 0:
        return 0.0
    observed = np.trace(table) / total
    expected = float((table.sum(axis=1) * table.sum(axis=0)).sum()) / total**2
    if expected >= 1.0:
        return 1.0 if observed >= 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


def macro_recall(truth: LabelsLike, pred: LabelsLike) -> float:
    """Macro recall in percent over the classes present in `truth`."""
    t, p = as_label_array(truth), as_label_array(pred)
    scores = per_class_scores(contingency_table(t, p))
    return 100.0 * float(scores["recall"][scores["present"]].mean())


def _class_recall_map(scores: dict[str, np.ndarray]) -> dict[str, Optional[float]]:
    return {
        Therblig(k).name: (100.0 * float(scores["recall"][k]) if scores["present"][k] else None)
        for k in CLASS_CODES
    }


def compute_metrics(
    preds: Sequence[LabelsLike],
    truths: Sequence[LabelsLike],
    task_ids: Optional[Sequence[str]] = None,
    bce: Optional[float] = None,
) -> Metrics:
    """
    Métricas agregadas sobre todas as demos; TP-Range sobre o recall macro por tarefa.
    Metrics pooled over all demos; TP-Range over the per-task macro recall.
    """
    if isinstance(preds, (LabelSequence, np.ndarray)):
        preds, truths = [preds], [truths]
    if len(preds) != len(truths) or not preds:
        raise ContractError(f"got {len(preds)} predictions for {len(truths)} truths")
    task_ids = list(task_ids) if task_ids is not None else ["all"] * len(truths)
    if len(task_ids) != len(truths):
        raise ContractError(f"got {len(task_ids)} task ids for {len(truths)} sequences")

    pred_arrays, truth_arrays = [], []
    for i, (p, t) in enumerate(zip(preds, truths)):
        pa, ta = as_label_array(p), as_label_array(t)
        if pa.shape != ta.shape:
            raise ContractError(f"sequence {i}: prediction length {pa.size} differs from truth length {ta.size}")
        check_codes(pa)
        check_codes(ta)
        pred_arrays.append(pa)
        truth_arrays.append(ta)

    pooled_truth = np.concatenate(truth_arrays)
    pooled_pred = np.concatenate(pred_arrays)
    table = contingency_table(pooled_truth, pooled_pred)
    scores = per_class_scores(table)
    present = scores["present"]
    excluded = [Therblig(k).name for k in CLASS_CODES if not present[k]]
    if excluded:
        logger.warning(
            f"Classes ausentes da verdade excluídas da média: {excluded} / "
            f"Classes absent from the truth excluded from the macro average: {excluded}"
        )

    per_task_recall: dict[str, float] = {}
    per_task_class: dict[str, dict[str, Optional[float]]] = {}
    for task in dict.fromkeys(task_ids):
        idx = [i for i, tid in enumerate(task_ids) if tid == task]
        task_table = contingency_table(
            np.concatenate([truth_arrays[i] for i in idx]), np.concatenate([pred_arrays[i] for i in idx])
        )
        task_scores = per_class_scores(task_table)
        per_task_recall[task] = 100.0 * float(task_scores["recall"][task_scores["present"]].mean())
        per_task_class[task] = _class_recall_map(task_scores)

    recalls = list(per_task_recall.values())
    return Metrics(
        bce_loss=bce,
        precision=100.0 * float(scores["precision"][present].mean()),
        recall=100.0 * float(scores["recall"][present].mean()),
        f1=100.0 * float(scores["f1"][present].mean()),
        kappa=100.0 * cohen_kappa(table),
        tp_range=(min(recalls), max(recalls)),
        per_class_recall=_class_recall_map(scores),
        per_task_recall=per_task_recall,
        per_task_class_recall=per_task_class,
        excluded_classes=excluded,
    )
