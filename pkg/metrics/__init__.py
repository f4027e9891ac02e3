"""Confusion accounting and fault-diagnosis metrics."""

from metrics.confusion import ConfusionMatrix, confusion
from metrics.published import (
    ALL_CLASSES, COMPARISON_COLUMNS, COMPARISON_F1, WITHOUT_INCIPIENT, comparison_frame, load_comparison_csv,
    write_comparison_csv,
)
from metrics.report import (
    CSV_COLUMNS, METRIC_NAMES, ClassificationReport, ClassMetrics, load_report_json, per_class_metrics,
    render_table, report, report_frame, save_report_json, write_report_csv,
)

__all__ = [
    'ConfusionMatrix', 'confusion', 'ClassMetrics', 'ClassificationReport', 'per_class_metrics',
    'report', 'report_frame', 'render_table', 'write_report_csv', 'save_report_json',
    'load_report_json', 'METRIC_NAMES', 'CSV_COLUMNS', 'ALL_CLASSES', 'WITHOUT_INCIPIENT',
    'COMPARISON_F1', 'COMPARISON_COLUMNS', 'comparison_frame', 'write_comparison_csv', 'load_comparison_csv',
]
