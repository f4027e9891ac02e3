"""Mini-batch training with early stopping, and evaluation."""

import asyncio
import logging
import math
from typing import Callable, Mapping, Optional

import numpy as np

from metrics.report import ClassificationReport, report
from metrics.confusion import confusion
from numeric.errors import ConfigurationError, ContractError, NonFiniteError, TrainingDivergedError
from numeric.gradients import backward
from numeric.ops import cross_entropy
from numeric.parameters import ParameterSet
from numeric.tensor import Tensor
from tep.windows import WindowedDataset
from trainer.config import ClassWeighting, TrainConfig
from trainer.evaluation_pool import EvaluationPool
from trainer.history import EpochRecord, TrainHistory
from trainer.optimizers import make_optimizer
from twin.checkpoint import save_checkpoint
from twin.config import TwinModelConfig
from twin.model import effective_heads, forward_batch, gate_summary, predict_batch
from twin.params import TwinModelParams

logger = logging.getLogger(__name__)


def _check_classes(ds: WindowedDataset, config: TwinModelConfig, role: str):
    if ds.n_classes != config.n_classes:
        raise ConfigurationError(f"{role} dataset has {ds.n_classes} classes, model expects {config.n_classes}")
    if ds.n_features != config.n_features or ds.window_len != config.window_len:
        raise ConfigurationError(f"{role} windows are {ds.window_len}x{ds.n_features}, "
                                 f"model expects {config.window_len}x{config.n_features}")


def class_weight_vector(ds: WindowedDataset, weighting: ClassWeighting) -> Optional[np.ndarray]:
    """Inverse-frequency weights n / (C * count_c), 0 for absent classes; None when unweighted."""
    if weighting is ClassWeighting.NONE:
        return None
    counts = ds.class_counts().astype(np.float64)
    weights = np.zeros(ds.n_classes)
    present = counts > 0
    weights[present] = len(ds) / (ds.n_classes * counts[present])
    return weights


def batch_loss(params, config: TwinModelConfig, windows: np.ndarray, labels: np.ndarray,
               class_weights: Optional[np.ndarray] = None) -> Tensor:
    """Cross-entropy of the model on one mini-batch, on the gradient graph."""
    return cross_entropy(forward_batch(windows, params, config), labels, class_weights)


def dataset_loss(params: ParameterSet, config: TwinModelConfig, ds: WindowedDataset, batch_size: int = 256) -> float:
    """Unweighted mean cross-entropy over every window."""
    structured = TwinModelParams.from_parameters(params, config)
    total = 0.0
    for start in range(0, len(ds), batch_size):
        stop = start + batch_size
        total += batch_loss(structured, config, ds.windows[start:stop], ds.labels[start:stop]).item() \
            * len(ds.labels[start:stop])
    return total / len(ds)


def predict_dataset(params: ParameterSet, config: TwinModelConfig, ds: WindowedDataset,
                    batch_size: int = 256, workers: int = 1) -> np.ndarray:
    """Predicted class of every window, serially or on an EvaluationPool."""
    if workers > 1:
        return asyncio.run(_predict_pooled(params, config, ds, batch_size, workers))
    structured = TwinModelParams.from_parameters(params, config)
    parts = [predict_batch(ds.windows[start:start + batch_size], structured, config)
             for start in range(0, len(ds), batch_size)]
    return np.concatenate(parts)


async def _predict_pooled(params, config, ds, batch_size, workers) -> np.ndarray:
    async with EvaluationPool(params, config, workers, batch_size) as pool:
        return await pool.predict(ds.windows)


def evaluate(
    params: ParameterSet,
    config: TwinModelConfig,
    ds: WindowedDataset,
    batch_size: int = 256,
    workers: int = 1,
    metadata: Optional[Mapping[str, object]] = None,
) -> ClassificationReport:
    """
    Predict every window of ``ds`` and score the predictions.

    Raises:
        ContractError: If ``ds`` is empty.
        ConfigurationError: If the dataset does not fit the model.
    """
    if len(ds) == 0:
        raise ContractError("cannot evaluate on an empty dataset")
    _check_classes(ds, config, 'evaluation')
    preds = predict_dataset(params, config, ds, batch_size, workers)
    meta = {'model_config_hash': config.config_hash(), 'n_windows': len(ds)}
    meta.update(metadata or {})
    return report(confusion(preds, ds.labels, config.n_classes),
                  [ds.class_names[label] for label in range(ds.n_classes)], meta)


def train(
    params: ParameterSet,
    config: TwinModelConfig,
    train_ds: WindowedDataset,
    val_ds: WindowedDataset,
    cfg: TrainConfig,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> tuple[ParameterSet, TrainHistory]:
    """
    Mini-batch descent on cross-entropy with early stopping on validation macro F1.

    Each epoch visits the training windows in a fresh permutation drawn from
    a generator seeded with ``cfg.seed``. The parameters of the epoch with
    the highest validation macro F1 (first one on ties) are returned, and
    written to ``cfg.checkpoint_path`` whenever they improve.

    Args:
        params: Initial parameters.
        config: Model configuration.
        train_ds: Training windows.
        val_ds: Validation windows.
        cfg: Training configuration.
        on_epoch: Called with each epoch record.

    Returns:
        (best parameters, history)

    Raises:
        TrainingDivergedError: If a loss or update becomes non-finite.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise ContractError("training and validation datasets must be non-empty")
    _check_classes(train_ds, config, 'training')
    _check_classes(val_ds, config, 'validation')

    rng = np.random.default_rng(cfg.seed)
    optimizer = make_optimizer(cfg)
    weights = class_weight_vector(train_ds, cfg.class_weights)
    history = TrainHistory()
    best_params, best_f1, waited = params, -math.inf, 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_ds))
        loss_sum = 0.0
        for batch, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            try:
                loss = batch_loss(params, config, train_ds.windows[idx], train_ds.labels[idx], weights)
                params = optimizer.step(params, backward(loss, params))
            except NonFiniteError as exc:
                logger.warning("training diverged at epoch %d, batch %d", epoch, batch)
                raise TrainingDivergedError(epoch, batch, params.norms()) from exc
            loss_sum += loss.item() * len(idx)

        val_report = evaluate(params, config, val_ds, cfg.eval_batch_size, cfg.eval_workers)
        record = EpochRecord(
            epoch=epoch,
            train_loss=loss_sum / len(order),
            val_loss=dataset_loss(params, config, val_ds, cfg.eval_batch_size),
            val_macro_f1=val_report.macro_f1,
            effective_heads=effective_heads(params, config, cfg.head_threshold),
            gates=gate_summary(params, config),
        )
        history.append(record)
        logger.info("epoch %d: train loss %.5f, val loss %.5f, val macro F1 %.4f, heads %s",
                    epoch, record.train_loss, record.val_loss, record.val_macro_f1, record.effective_heads)
        if on_epoch:
            on_epoch(record)

        if record.val_macro_f1 > best_f1:
            best_params, best_f1, waited = params, record.val_macro_f1, 0
            history.best_epoch = epoch
            if cfg.checkpoint_path:
                save_checkpoint(best_params, config, cfg.checkpoint_path)
        else:
            waited += 1
            if cfg.early_stop_patience and waited >= cfg.early_stop_patience:
                history.stopped_early = True
                logger.warning("early stop after epoch %d; best epoch %d (val macro F1 %.4f)",
                               epoch, history.best_epoch, best_f1)
                break
    return best_params, history
