"""Training, evaluation and the command-line surface."""

from trainer.config import (
    TRAIN_CONFIG_SCHEMA, ClassWeighting, OptimizerKind, TrainConfig, load_train_config, save_train_config,
)
from trainer.optimizers import SGD, Adam, BaseOptimizer, make_optimizer
from trainer.history import EpochRecord, TrainHistory


# Loaded on first use.
def __getattr__(name):
    if name in ('train', 'evaluate', 'batch_loss', 'class_weight_vector', 'predict_dataset', 'dataset_loss'):
        from trainer import loop
        return getattr(loop, name)
    elif name == 'EvaluationPool':
        from trainer.evaluation_pool import EvaluationPool
        return EvaluationPool
    elif name == 'cli':
        from trainer.cli import cli
        return cli
    raise AttributeError(f"module 'trainer' has no attribute {name!r}")


__all__ = [
    'TrainConfig', 'TRAIN_CONFIG_SCHEMA', 'OptimizerKind', 'ClassWeighting', 'load_train_config',
    'save_train_config', 'BaseOptimizer', 'SGD', 'Adam', 'make_optimizer', 'EpochRecord', 'TrainHistory',
    'train', 'evaluate', 'batch_loss', 'class_weight_vector', 'predict_dataset', 'dataset_loss',
    'EvaluationPool', 'cli',
]
