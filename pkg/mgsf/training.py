"""
training.py
-----------

Treino da MGSF: BCE sobre a saída softmax, Adam, parada antecipada pelo recall
macro de validação e retenção do melhor checkpoint.
MGSF training: BCE over the softmax output, Adam, early stopping on validation
macro recall and best-checkpoint retention.

Lotes agrupam demos de mesmo comprimento; a ordem dos lotes depende só da
semente, então todas as variantes veem os dados na mesma ordem.
Batches group demos of equal length; batch order depends only on the seed, so
every variant sees the data in the same order.

Dependências / Dependencies:
- numpy
- tqdm
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from tqdm import tqdm

from contracts.config_contracts import MgsfConfig
from contracts.report_contracts import Metrics, TrainingLogEntry
from datagen.dataset import Corpus, CorpusItem
from domain.therbligs import one_hot
from mgsf.metrics import compute_metrics, macro_recall
from mgsf.model import MgsfModel, forward
from mgsf.segmentation import smooth_labels
from numeric.losses import bce_loss
from numeric.optim import AdamState, adam_step, collect_grads, zero_grads
from numeric.tensor import Tape
from utils.errors import ContractError, NumericalError
from utils.logger import setup_logger

logger = setup_logger("mgsf_training")


@dataclass
class TrainingResult:
    model: MgsfModel
    log: list[TrainingLogEntry] = field(default_factory=list)
    best_epoch: int = -1
    best_val_recall: float = 0.0
    stopped_early: bool = False
    diverged: bool = False
    error: Optional[str] = None


def feature_statistics(items: Sequence[CorpusItem]) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and std over every timestep of the given demos."""
    stacked = np.concatenate([it.demo.states for it in items], axis=0)
    return stacked.mean(axis=0), stacked.std(axis=0)


def make_batches(items: Sequence[CorpusItem], batch_size: int, rng: np.random.Generator) -> list[list[int]]:
    """Shuffle, group indices by sequence length and cut into batches; batch order shuffled too."""
    by_length: dict[int, list[int]] = {}
    for i in rng.permutation(len(items)):
        by_length.setdefault(items[i].demo.n, []).append(int(i))
    batches = [
        group[k : k + batch_size] for _, group in sorted(by_length.items()) for k in range(0, len(group), batch_size)
    ]
    return [batches[i] for i in rng.permutation(len(batches))]


def predict_labels(model: MgsfModel, items: Sequence[CorpusItem], window: int = 1) -> list[np.ndarray]:
    out = []
    for it in items:
        probs = model.predict_proba(it.demo.states)
        out.append(smooth_labels(np.argmax(probs, axis=1), window))
    return out


def dataset_loss(model: MgsfModel, items: Sequence[CorpusItem]) -> float:
    losses = [
        float(bce_loss(model.predict_proba(it.demo.states), one_hot(it.labels)).data) for it in items
    ]
    return float(np.mean(losses)) if losses else float("nan")


def evaluate(model: MgsfModel, items: Sequence[CorpusItem], window: Optional[int] = None) -> Metrics:
    """
    Métricas de um conjunto de demos; window=None usa a janela da configuração.
    Metrics over a set of demos; window=None uses the configured window.
    """
    if not items:
        raise ContractError("cannot evaluate an empty split")
    window = model.config.smoothing_window if window is None else window
    preds = predict_labels(model, items, window)
    return compute_metrics(
        preds,
        [it.labels for it in items],
        [it.task_name for it in items],
        bce=dataset_loss(model, items),
    )


def validation_recall(model: MgsfModel, items: Sequence[CorpusItem]) -> float:
    """Macro recall of raw argmax labels, pooled over the split."""
    preds = predict_labels(model, items, window=1)
    return macro_recall(
        np.concatenate([np.asarray(it.labels.labels) for it in items]), np.concatenate(preds)
    )


def train_step(model: MgsfModel, batch: Sequence[CorpusItem], state: AdamState) -> float:
    X = np.stack([it.demo.states for it in batch])
    Y = np.stack([one_hot(it.labels) for it in batch])
    with Tape() as tape:
        loss = bce_loss(forward(X, model), Y)
    value = float(loss.data)
    if not np.isfinite(value):
        raise NumericalError(f"training loss is {value}", stage="loss")
    tape.backward(loss)
    adam_step(model.params, collect_grads(model.params), state)
    zero_grads(model.params)
    return value


def train(
    model: MgsfModel,
    corpus: Corpus,
    config: Optional[MgsfConfig] = None,
    checkpoint_path: Optional[str] = None,
    progress: bool = True,
) -> TrainingResult:
    """
    Treina o modelo no split train e escolhe o melhor epoch pelo split val.
    Train on the train split and pick the best epoch on the val split.

    Divergência (NaN) interrompe o treino e restaura o último bom estado.
    Divergence (NaN) stops training and restores the last good state.
    """
    config = config or model.config
    train_items, val_items = corpus.split("train"), corpus.split("val")
    if not train_items or not val_items:
        raise ContractError(
            f"training needs nonempty train and val splits (got {len(train_items)} and {len(val_items)})"
        )

    mean, std = feature_statistics(train_items)
    model.set_standardization(mean, std)
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
    rng = np.random.default_rng(config.seed)

    result = TrainingResult(model=model)
    best_state = model.state_dict()
    epochs_without_gain = 0
    logger.info(
        f"Treinando variante {model.variant} ({model.num_parameters()} parâmetros) / "
        f"Training variant {model.variant} ({model.num_parameters()} params)"
    )

    for epoch in range(config.epochs):
        batches = make_batches(train_items, config.batch_size, rng)
        losses = []
        try:
            for batch in tqdm(batches, desc=f"epoch {epoch}", disable=not progress, leave=False):
                losses.append(train_step(model, [train_items[i] for i in batch], state))
        except NumericalError as e:
            logger.error(f"Treino divergiu no epoch {epoch}: {e} / Training diverged at epoch {epoch}: {e}")
            model.load_state_dict(best_state)
            result.diverged, result.error = True, str(e)
            break

        val_recall = validation_recall(model, val_items)
        improved = val_recall > result.best_val_recall or result.best_epoch < 0
        entry = TrainingLogEntry(
            epoch=epoch, train_loss=float(np.mean(losses)), val_recall=val_recall, improved=improved
        )
        result.log.append(entry)
        logger.info(
            f"epoch {epoch}: loss={entry.train_loss:.5f} val_recall={val_recall:.2f}"
            + (" *" if improved else "")
        )

        if improved:
            result.best_epoch, result.best_val_recall = epoch, val_recall
            best_state = model.state_dict()
            epochs_without_gain = 0
            if checkpoint_path:
                model.save(checkpoint_path, extra={"epoch": epoch, "val_recall": val_recall})
        else:
            epochs_without_gain += 1
            if epochs_without_gain >= config.patience:
                logger.info(f"Parada antecipada no epoch {epoch} / Early stop at epoch {epoch}")
                result.stopped_early = True
                break

    model.load_state_dict(best_state)
    if checkpoint_path and result.best_epoch < 0:
        model.save(checkpoint_path, extra={"epoch": -1})
    return result
