"""Training configuration and its JSON schema."""

import dataclasses
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Union

from numeric.errors import ConfigurationError


class OptimizerKind(Enum):
    SGD = 'sgd'
    ADAM = 'adam'


class ClassWeighting(Enum):
    NONE = 'none'
    BALANCED = 'balanced'  # n / (C * count_c); classes without windows get 0


class FieldRule(NamedTuple):
    """Type, constraint and its description for one TrainConfig field."""
    kind: type
    check: Callable[[object], bool]
    constraint: str


def _positive(v) -> bool:
    return v > 0 and math.isfinite(v)


# Documented in docs/formats.md; keep the two in sync.
TRAIN_CONFIG_SCHEMA: dict[str, FieldRule] = {
    'learning_rate': FieldRule(float, lambda v: v >= 0 and math.isfinite(v), '>= 0'),
    'epochs': FieldRule(int, lambda v: v >= 1, '>= 1'),
    'batch_size': FieldRule(int, lambda v: v >= 1, '>= 1'),
    'optimizer': FieldRule(OptimizerKind, lambda v: True, "'sgd' or 'adam'"),
    'beta1': FieldRule(float, lambda v: 0 <= v < 1, 'in [0, 1)'),
    'beta2': FieldRule(float, lambda v: 0 <= v < 1, 'in [0, 1)'),
    'adam_eps': FieldRule(float, _positive, '> 0'),
    'seed': FieldRule(int, lambda v: v >= 0, '>= 0'),
    'early_stop_patience': FieldRule(int, lambda v: v >= 0, '>= 0 (0 disables)'),
    'checkpoint_path': FieldRule(str, lambda v: v is None or bool(v), 'path or null'),
    'val_fraction': FieldRule(float, lambda v: 0 < v < 1, 'in (0, 1)'),
    'class_weights': FieldRule(ClassWeighting, lambda v: True, "'none' or 'balanced'"),
    'head_threshold': FieldRule(float, lambda v: 0 < v < 1, 'in (0, 1)'),
    'eval_batch_size': FieldRule(int, lambda v: v >= 1, '>= 1'),
    'eval_workers': FieldRule(int, lambda v: v >= 1, '>= 1'),
}


@dataclass(frozen=True)
class TrainConfig:
    """Everything that, together with the data and model config, determines a training run."""
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 32
    optimizer: OptimizerKind = OptimizerKind.ADAM
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    early_stop_patience: int = 10
    checkpoint_path: Optional[str] = None
    val_fraction: float = 0.2
    class_weights: ClassWeighting = ClassWeighting.NONE
    head_threshold: float = 0.5
    eval_batch_size: int = 256
    eval_workers: int = 1

    def __post_init__(self):
        for f in dataclasses.fields(self):
            rule = TRAIN_CONFIG_SCHEMA[f.name]
            value = getattr(self, f.name)
            if value is None and f.name == 'checkpoint_path':
                continue
            if rule.kind is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
                object.__setattr__(self, f.name, value)
            if not isinstance(value, rule.kind) or (rule.kind is int and isinstance(value, bool)):
                raise ConfigurationError(f"{f.name} must be {rule.kind.__name__}, got {value!r}")
            if not rule.check(value):
                raise ConfigurationError(f"{f.name} must be {rule.constraint}, got {value!r}")

    def to_dict(self) -> dict:
        return {f.name: _plain(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> 'TrainConfig':
        """Build from a JSON object. Unknown keys are rejected; missing keys take defaults."""
        unknown = sorted(set(data) - set(TRAIN_CONFIG_SCHEMA))
        if unknown:
            raise ConfigurationError(f"unknown train config keys: {', '.join(unknown)}")
        values = {}
        for name, value in data.items():
            kind = TRAIN_CONFIG_SCHEMA[name].kind
            if issubclass(kind, Enum) and isinstance(value, str):
                try:
                    value = kind(value)
                except ValueError as exc:
                    raise ConfigurationError(f"{name}: invalid value {value!r}") from exc
            values[name] = value
        return cls(**values)

    def replace(self, **changes) -> 'TrainConfig':
        return dataclasses.replace(self, **changes)


def _plain(value):
    return value.value if isinstance(value, Enum) else value


def load_train_config(path: Union[str, Path]) -> TrainConfig:
    with open(path, 'r') as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: train config must be a JSON object")
    return TrainConfig.from_dict(data)


def save_train_config(config: TrainConfig, path: Union[str, Path]):
    with open(path, 'w') as f:
        json.dump(config.to_dict(), f, indent=2)
