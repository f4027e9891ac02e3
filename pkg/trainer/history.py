"""Per-epoch training record."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from numeric.errors import ContractError


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_macro_f1: float
    effective_heads: dict[str, int]
    gates: dict[str, list[float]]

    def to_dict(self) -> dict:
        return {
            'epoch': self.epoch,
            'train_loss': self.train_loss,
            'val_loss': self.val_loss,
            'val_macro_f1': self.val_macro_f1,
            'effective_heads': dict(self.effective_heads),
            'gates': {k: list(v) for k, v in self.gates.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'EpochRecord':
        return cls(**data)


@dataclass
class TrainHistory:
    """Epoch records in order, plus the epoch whose parameters were kept."""
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False

    def append(self, record: EpochRecord):
        if self.epochs and record.epoch <= self.epochs[-1].epoch:
            raise ContractError(f"epoch {record.epoch} recorded after epoch {self.epochs[-1].epoch}")
        self.epochs.append(record)

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def best(self) -> Optional[EpochRecord]:
        for record in self.epochs:
            if record.epoch == self.best_epoch:
                return record
        return None

    def to_dict(self) -> dict:
        return {
            'best_epoch': self.best_epoch,
            'stopped_early': self.stopped_early,
            'epochs': [record.to_dict() for record in self.epochs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TrainHistory':
        return cls(
            epochs=[EpochRecord.from_dict(e) for e in data['epochs']],
            best_epoch=data['best_epoch'],
            stopped_early=data['stopped_early'],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n'

    def save(self, path: Union[str, Path]):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding='utf-8')

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'TrainHistory':
        with open(path, 'r') as f:
            return cls.from_dict(json.load(f))
