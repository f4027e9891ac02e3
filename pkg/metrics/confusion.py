"""Confusion matrices with rows = true class and columns = predicted class."""

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from numeric.errors import ContractError, DimensionError, LabelIndexError


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """C x C non-negative counts; ``counts[t, p]`` pairs true class t with prediction p."""
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] < 1:
            raise DimensionError(f"confusion counts must be a non-empty square matrix, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ContractError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def trace(self) -> int:
        return int(np.trace(self.counts))

    def __add__(self, other: 'ConfusionMatrix') -> 'ConfusionMatrix':
        if other.n_classes != self.n_classes:
            raise DimensionError(f"cannot add {self.n_classes}- and {other.n_classes}-class matrices")
        return ConfusionMatrix(self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def one_vs_rest(self, c: int) -> tuple[int, int, int, int]:
        """(TP, FP, TN, FN) for class ``c`` against all others."""
        tp = int(self.counts[c, c])
        fn = int(self.counts[c, :].sum()) - tp
        fp = int(self.counts[:, c].sum()) - tp
        return tp, fp, self.total - tp - fn - fp, fn


def _as_labels(values: Iterable[int], what: str) -> np.ndarray:
    array = np.asarray(list(values) if not isinstance(values, np.ndarray) else values).reshape(-1)
    if array.size and not np.issubdtype(array.dtype, np.integer):
        raise ContractError(f"{what}s must be integers, got dtype {array.dtype}")
    return array.astype(np.int64)


def _check_range(values: np.ndarray, n_classes: int, what: str):
    bad = np.flatnonzero((values < 0) | (values >= n_classes))
    if bad.size:
        position = int(bad[0])
        raise LabelIndexError(f"{what} {values[position]} at position {position} is outside [0, {n_classes})")


def confusion(preds: Iterable[int], labels: Iterable[int], n_classes: int) -> ConfusionMatrix:
    """
    Tally (prediction, label) pairs.

    Raises:
        ContractError: If either sequence holds non-integer values.
        DimensionError: If the arrays differ in length.
        LabelIndexError: Naming the first out-of-range value.
    """
    if n_classes < 1:
        raise ContractError(f"n_classes must be >= 1, got {n_classes}")
    preds = _as_labels(preds, 'prediction')
    labels = _as_labels(labels, 'label')
    if preds.shape != labels.shape:
        raise DimensionError(f"{preds.size} predictions but {labels.size} labels")
    _check_range(preds, n_classes, 'prediction')
    _check_range(labels, n_classes, 'label')
    coding = labels * n_classes + preds
    return ConfusionMatrix(np.bincount(coding, minlength=n_classes * n_classes).reshape(n_classes, n_classes))
