"""Twin model configuration and its plain-text key-value file format."""

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from attention.similarity import DEFAULT_SIMILARITY, SimilarityKind
from numeric.errors import ConfigurationError

CONFIG_SUFFIX = '.cfg'


class SplitStrategy(Enum):
    """How the input features are divided between the two branches."""
    FEATURE_HALVES = 'feature_halves'  # branch 1 gets [0, ceil(n/2)), branch 2 the rest
    DUPLICATE = 'duplicate'            # both branches see every feature


class FusionKind(Enum):
    """How branch outputs are combined before the classifier."""
    CONCAT_MEAN_POOLED = 'concat_mean_pooled'


@dataclass(frozen=True)
class TwinModelConfig:
    """
    Shape and behaviour of a twin-branch GDLAttention classifier.

    ``d_k`` and ``d_v`` default to ``max(1, d_model // n_heads)``; d_model
    does not have to be divisible by n_heads.
    """
    n_features: int = 52
    window_len: int = 20
    d_model: int = 32
    n_layers_per_branch: int = 2
    n_heads: int = 4
    d_ff: int = 64
    n_classes: int = 21
    d_k: Optional[int] = None
    d_v: Optional[int] = None
    similarity: SimilarityKind = DEFAULT_SIMILARITY
    split_strategy: SplitStrategy = SplitStrategy.FEATURE_HALVES
    fusion: FusionKind = FusionKind.CONCAT_MEAN_POOLED
    layer_norm_eps: float = 1e-5
    attention_eps: float = 1e-12

    def __post_init__(self):
        for name in ('n_features', 'window_len', 'd_model', 'n_layers_per_branch', 'n_heads', 'd_ff', 'n_classes'):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        for name in ('d_k', 'd_v'):
            value = getattr(self, name)
            if value is None:
                object.__setattr__(self, name, max(1, self.d_model // self.n_heads))
            elif not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        for name in ('layer_norm_eps', 'attention_eps'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value > 0 or not math.isfinite(value):
                raise ConfigurationError(f"{name} must be a positive real, got {value!r}")
        for name, enum_type in (('similarity', SimilarityKind), ('split_strategy', SplitStrategy),
                                ('fusion', FusionKind)):
            if not isinstance(getattr(self, name), enum_type):
                raise ConfigurationError(f"{name} must be a {enum_type.__name__}, got {getattr(self, name)!r}")
        if self.split_strategy is SplitStrategy.FEATURE_HALVES and self.n_features < 2:
            raise ConfigurationError(f"feature_halves split needs at least 2 features, got {self.n_features}")

    @classmethod
    def tiny(cls, **overrides) -> 'TwinModelConfig':
        """The small configuration used for gradient checks."""
        values = dict(n_features=6, window_len=4, d_model=8, n_layers_per_branch=1, n_heads=2,
                      d_ff=16, n_classes=3)
        values.update(overrides)
        return cls(**values)

    @property
    def branch_widths(self) -> tuple[int, int]:
        """Number of input features each branch receives."""
        if self.split_strategy is SplitStrategy.DUPLICATE:
            return self.n_features, self.n_features
        first = math.ceil(self.n_features / 2)
        return first, self.n_features - first

    # --- Serialization ---

    def to_dict(self) -> dict:
        """Plain values; enums become their string values."""
        return {f.name: _encode(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> 'TwinModelConfig':
        """Build from ``to_dict`` output. Unknown keys are rejected; missing keys take defaults."""
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigurationError(f"unknown model config keys: {', '.join(unknown)}")
        return cls(**{name: _decode(known[name], value) for name, value in data.items()})

    def to_text(self) -> str:
        """Key-value document, one ``key = value`` per line in field order."""
        lines = ['# twin GDLAttention model config']
        for name, value in self.to_dict().items():
            lines.append(f'{name} = {"none" if value is None else value}')
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'TwinModelConfig':
        """Parse a key-value document written by ``to_text`` (or by hand)."""
        data = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise ConfigurationError(f"line {number}: expected 'key = value', got {raw!r}")
            key = key.strip()
            if key in data:
                raise ConfigurationError(f"line {number}: duplicate key {key!r}")
            data[key] = value.strip()
        return cls.from_dict(data)

    def config_hash(self) -> str:
        """SHA-256 of the canonical key-value text."""
        return hashlib.sha256(self.to_text().encode('utf-8')).hexdigest()


def _encode(value):
    return value.value if isinstance(value, Enum) else value


def _decode(field: dataclasses.Field, value):
    """Convert a raw (possibly string) value to the field's type."""
    name = field.name
    default = field.default
    try:
        if isinstance(default, Enum):
            return type(default)(value)
        if isinstance(value, str):
            text = value.strip()
            if name in ('d_k', 'd_v'):
                return None if text.lower() == 'none' else int(text)
            if isinstance(default, float):
                return float(text)
            if isinstance(default, int):
                return int(text)
        return value
    except ValueError as exc:
        raise ConfigurationError(f"invalid value {value!r} for {name}") from exc


def config_path_for(checkpoint_path: Union[str, Path]) -> Path:
    """Where the model config lives beside a checkpoint."""
    return Path(checkpoint_path).with_suffix(CONFIG_SUFFIX)


def save_model_config(config: TwinModelConfig, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.to_text(), encoding='utf-8')


def load_model_config(path: Union[str, Path]) -> TwinModelConfig:
    return TwinModelConfig.from_text(Path(path).read_text(encoding='utf-8'))
