"""Per-class and macro fault-diagnosis metrics.

Each class is scored one-vs-rest from the confusion matrix:

    precision = TP / (TP + FP)
    recall    = TP / (TP + FN)
    f1        = 2 * precision * recall / (precision + recall)
    FAR       = FP / (TN + FP)
    MAR       = (FP + FN) / total

Every 0/0 is 0. Values are fractions in [0, 1]; percentages appear only in
``render_table``.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from metrics.confusion import ConfusionMatrix
from numeric.errors import ConfigurationError, ContractError

logger = logging.getLogger(__name__)

METRIC_NAMES = ('precision', 'recall', 'f1', 'far', 'mar')
CSV_COLUMNS = ('class',) + METRIC_NAMES + ('support',)
REPORT_FORMAT_VERSION = 1


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    far: float
    mar: float
    support: int

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES + ('support',)}


def per_class_metrics(cm: ConfusionMatrix) -> tuple[ClassMetrics, ...]:
    """
    One-vs-rest metrics for every class of ``cm``.

    Raises:
        ContractError: If the matrix holds no pairs.
    """
    total = cm.total
    if total == 0:
        raise ContractError("cannot compute metrics from an empty confusion matrix")
    rows = []
    for c in range(cm.n_classes):
        tp, fp, tn, fn = cm.one_vs_rest(c)
        # Columns are predictions, so precision divides by the predicted count TP + FP.
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        rows.append(ClassMetrics(
            precision=precision,
            recall=recall,
            f1=_ratio(2.0 * precision * recall, precision + recall),
            far=_ratio(fp, tn + fp),
            # Every misclassified pair touching class c, over all pairs.
            mar=(fp + fn) / total,
            support=tp + fn,
        ))
    return tuple(rows)


@dataclass(frozen=True)
class ClassificationReport:
    """
    Confusion matrix with per-class rows, unweighted macro averages,
    accuracy and the population variance of per-class F1.
    """
    matrix: ConfusionMatrix
    per_class: tuple[ClassMetrics, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_far: float
    macro_mar: float
    f1_variance: float
    accuracy: float
    class_names: tuple[str, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return self.matrix.n_classes

    def macro(self) -> dict[str, float]:
        return {name: getattr(self, f'macro_{name}') for name in METRIC_NAMES}

    def to_dict(self) -> dict:
        return {
            'format_version': REPORT_FORMAT_VERSION,
            'class_names': list(self.class_names),
            'confusion': self.matrix.counts.tolist(),
            'total': self.matrix.total,
            'per_class': [dict(row.to_dict(), **{'class': name})
                          for name, row in zip(self.class_names, self.per_class)],
            'macro': self.macro(),
            'accuracy': self.accuracy,
            'f1_variance': self.f1_variance,
            'f1_variance_kind': 'population',
            'metadata': dict(self.metadata),
        }

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, two-space indent, trailing newline."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n'

    @classmethod
    def from_dict(cls, data: dict) -> 'ClassificationReport':
        """Rebuild from ``to_dict`` output; metrics are recomputed from the stored matrix."""
        try:
            matrix = ConfusionMatrix(np.asarray(data['confusion']))
            names = data['class_names']
        except KeyError as exc:
            raise ConfigurationError(f"report is missing {exc.args[0]!r}") from exc
        except TypeError as exc:
            raise ConfigurationError(f"malformed report: {exc}") from exc
        return report(matrix, names, data.get('metadata', {}))


def report(cm: ConfusionMatrix, class_names: Optional[Sequence[str]] = None,
           metadata: Optional[Mapping[str, object]] = None) -> ClassificationReport:
    """
    Build the full report for ``cm``.

    Args:
        cm: Confusion matrix with total > 0.
        class_names: Display name per class; defaults to the class index.
        metadata: Free-form provenance (dataset id, model config hash, ...).
    """
    rows = per_class_metrics(cm)
    names = tuple(str(c) for c in range(cm.n_classes)) if class_names is None else tuple(class_names)
    if len(names) != cm.n_classes:
        raise ContractError(f"{len(names)} class names for a {cm.n_classes}-class matrix")
    columns = {name: np.array([getattr(row, name) for row in rows]) for name in METRIC_NAMES}
    return ClassificationReport(
        matrix=cm,
        per_class=rows,
        macro_precision=float(columns['precision'].mean()),
        macro_recall=float(columns['recall'].mean()),
        macro_f1=float(columns['f1'].mean()),
        macro_far=float(columns['far'].mean()),
        macro_mar=float(columns['mar'].mean()),
        f1_variance=float(columns['f1'].var()),
        accuracy=cm.trace() / cm.total,
        class_names=names,
        metadata=dict(metadata or {}),
    )


def save_report_json(rep: ClassificationReport, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rep.to_json(), encoding='utf-8')


def load_report_json(path: Union[str, Path]) -> ClassificationReport:
    with open(path, 'r') as f:
        return ClassificationReport.from_dict(json.load(f))


def report_frame(rep: ClassificationReport) -> pd.DataFrame:
    """Per-class rows in the column order class, precision, recall, f1, far, mar, support."""
    return pd.DataFrame(
        [dict(row.to_dict(), **{'class': name}) for name, row in zip(rep.class_names, rep.per_class)],
        columns=list(CSV_COLUMNS),
    )


def write_report_csv(rep: ClassificationReport, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report_frame(rep).to_csv(path, index=False)
    logger.debug("wrote %d per-class rows to %s", rep.n_classes, path)


def render_table(rep: ClassificationReport) -> str:
    """
    Aligned text table in percent: one row per class, then Average and
    Variance rows. The Variance row holds the population variance of the
    per-class F1 scores in squared percentage points.
    """
    headers = ['Precision (%)', 'Recall (%)', 'F1-score (%)', 'FAR (%)', 'MAR (%)']
    rows, index = [], []
    for name, row in zip(rep.class_names, rep.per_class):
        rows.append([f'{100.0 * getattr(row, m):.2f}' for m in METRIC_NAMES])
        index.append(name)
    rows.append([f'{100.0 * value:.2f}' for value in rep.macro().values()])
    index.append('Average')
    rows.append(['', '', f'{1e4 * rep.f1_variance:.2f}', '', ''])
    index.append('Variance')
    table = pd.DataFrame(rows, index=index, columns=headers).to_string()
    return f'{table}\n\nAccuracy: {100.0 * rep.accuracy:.2f}%  ({rep.matrix.trace()}/{rep.matrix.total})\n'
