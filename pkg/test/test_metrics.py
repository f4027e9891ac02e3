"""Unit tests for confusion matrices and classification reports."""

import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from metrics import (
    ALL_CLASSES, COMPARISON_COLUMNS, COMPARISON_F1, CSV_COLUMNS, WITHOUT_INCIPIENT, ClassificationReport,
    ConfusionMatrix, comparison_frame, confusion, load_comparison_csv, load_report_json, per_class_metrics,
    render_table, report, save_report_json, write_comparison_csv, write_report_csv,
)
from numeric.errors import ConfigurationError, ContractError, DimensionError, LabelIndexError
from test import reference


class TestConfusion(unittest.TestCase):
    """Test tallying predictions against labels."""

    def test_example(self):
        """Test rows are true classes and columns predictions."""
        cm = confusion([0, 1, 1, 2], [0, 1, 2, 2], 3)
        np.testing.assert_array_equal(cm.counts, [[1, 0, 0], [0, 1, 0], [0, 1, 1]])
        self.assertEqual((cm.total, cm.trace()), (4, 3))

    def test_out_of_range(self):
        """Test the first bad value and its position are named."""
        with self.assertRaises(LabelIndexError) as ctx:
            confusion([0, 3, 1], [0, 1, 1], 3)
        self.assertIn('prediction 3 at position 1', str(ctx.exception))
        with self.assertRaises(LabelIndexError):
            confusion([0, 1], [0, -1], 3)

    def test_non_integer_labels(self):
        """Test float predictions or labels are refused instead of being truncated."""
        with self.assertRaises(ContractError):
            confusion([0.0, 1.7], [0, 1], 2)
        with self.assertRaises(ContractError):
            confusion(np.array([0, 1]), np.array([0.0, 1.0]), 2)
        self.assertEqual(confusion(np.array([], dtype=np.int64), [], 2).total, 0)

    def test_length_mismatch(self):
        """Test predictions and labels must pair up."""
        with self.assertRaises(DimensionError):
            confusion([0, 1], [0], 2)

    def test_addition(self):
        """Test matrices over disjoint shards add to the matrix of the whole."""
        rng = np.random.default_rng(0)
        preds, labels = rng.integers(0, 4, 200), rng.integers(0, 4, 200)
        whole = confusion(preds, labels, 4)
        self.assertEqual(confusion(preds[:70], labels[:70], 4) + confusion(preds[70:], labels[70:], 4), whole)

    def test_one_vs_rest(self):
        """Test the four counts partition the total."""
        cm = ConfusionMatrix(np.array([[8, 5], [2, 85]]))
        self.assertEqual(cm.one_vs_rest(0), (8, 2, 85, 5))

    def test_invalid_counts(self):
        """Test non-square or negative counts are refused."""
        with self.assertRaises(DimensionError):
            ConfusionMatrix(np.zeros((2, 3)))
        with self.assertRaises(ContractError):
            ConfusionMatrix(np.array([[1, -1], [0, 0]]))


class TestPerClassMetrics(unittest.TestCase):
    """Test one-vs-rest metrics."""

    def test_worked_example(self):
        """Test TP=8, FP=2, TN=85, FN=5."""
        row = per_class_metrics(ConfusionMatrix(np.array([[8, 5], [2, 85]])))[0]
        self.assertAlmostEqual(row.precision, 0.8)
        self.assertAlmostEqual(row.recall, 8 / 13)
        self.assertAlmostEqual(row.f1, 2 * 0.8 * (8 / 13) / (0.8 + 8 / 13))
        self.assertAlmostEqual(row.far, 2 / 87)
        self.assertAlmostEqual(row.mar, 0.07)
        self.assertEqual(row.support, 13)

    def test_zero_over_zero(self):
        """Test a class never predicted nor present scores zero everywhere but MAR."""
        rows = per_class_metrics(ConfusionMatrix(np.array([[5, 0], [0, 0]])))
        self.assertEqual((rows[1].precision, rows[1].recall, rows[1].f1, rows[1].far), (0.0, 0.0, 0.0, 0.0))
        self.assertEqual(rows[0].f1, 1.0)

    def test_empty_matrix(self):
        """Test a matrix without pairs is refused."""
        with self.assertRaises(ContractError):
            per_class_metrics(ConfusionMatrix(np.zeros((3, 3))))

    def test_matches_direct_count(self):
        """Test every metric against counting raw pairs, over many random draws."""
        for seed in range(50):
            rng = np.random.default_rng(seed)
            labels = rng.integers(0, 21, 1000)
            preds = np.where(rng.random(1000) < 0.6, labels, rng.integers(0, 21, 1000))
            rows = per_class_metrics(confusion(preds, labels, 21))
            expected = reference.direct_metrics(preds.tolist(), labels.tolist(), 21)
            for c, (row, want) in enumerate(zip(rows, expected)):
                got = (row.precision, row.recall, row.f1, row.far, row.mar)
                np.testing.assert_allclose(got, want, rtol=0, atol=1e-12, err_msg=f"seed {seed}, class {c}")


class TestReport(unittest.TestCase):
    """Test macro averages and report serialization."""

    def _report(self, seed=1, n_classes=5, metadata=None):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, n_classes, 300)
        preds = np.where(rng.random(300) < 0.7, labels, rng.integers(0, n_classes, 300))
        return report(confusion(preds, labels, n_classes), [f'c{i}' for i in range(n_classes)], metadata)

    def test_f1_variance_is_population(self):
        """Test per-class F1 of 1 and 0 gives variance 0.25."""
        rep = report(ConfusionMatrix(np.array([[5, 0], [0, 0]])))
        self.assertAlmostEqual(rep.f1_variance, 0.25)
        self.assertAlmostEqual(rep.macro_f1, 0.5)
        self.assertEqual(rep.class_names, ('0', '1'))

    def test_mean_mar_tracks_accuracy(self):
        """Test mean MAR equals 2 (1 - accuracy) / C."""
        rep = self._report()
        self.assertAlmostEqual(rep.macro_mar, 2 * (1 - rep.accuracy) / rep.n_classes, places=12)

    def test_perfect_predictions(self):
        """Test a diagonal matrix scores 1 with zero FAR and MAR."""
        rep = report(ConfusionMatrix(np.diag([3, 4, 5])))
        self.assertEqual((rep.macro_precision, rep.macro_recall, rep.macro_f1), (1.0, 1.0, 1.0))
        self.assertEqual((rep.macro_far, rep.macro_mar, rep.accuracy, rep.f1_variance), (0.0, 0.0, 1.0, 0.0))

    def test_permutation_equivariance(self):
        """Test renumbering classes permutes rows and keeps the macro averages."""
        rng = np.random.default_rng(2)
        labels = rng.integers(0, 6, 400)
        preds = np.where(rng.random(400) < 0.5, labels, rng.integers(0, 6, 400))
        perm = rng.permutation(6)
        base = report(confusion(preds, labels, 6))
        moved = report(confusion(perm[preds], perm[labels], 6))
        for c in range(6):
            self.assertAlmostEqual(moved.per_class[perm[c]].f1, base.per_class[c].f1, places=12)
            self.assertAlmostEqual(moved.per_class[perm[c]].far, base.per_class[c].far, places=12)
        for name, value in base.macro().items():
            self.assertAlmostEqual(moved.macro()[name], value, places=12)

    def test_name_count_must_match(self):
        """Test the roster must name every class."""
        with self.assertRaises(ContractError):
            report(ConfusionMatrix(np.eye(3)), ['a', 'b'])

    def test_json_is_canonical(self):
        """Test sorted keys, trailing newline and identical output for identical input."""
        text = self._report(metadata={'dataset_id': 'abc'}).to_json()
        self.assertTrue(text.endswith('}\n'))
        self.assertEqual(text, self._report(metadata={'dataset_id': 'abc'}).to_json())
        data = json.loads(text)
        self.assertEqual(list(data), sorted(data))
        self.assertEqual(data['f1_variance_kind'], 'population')
        self.assertEqual(data['per_class'][0]['class'], 'c0')

    def test_json_file_round_trip(self):
        """Test save_report_json then load_report_json."""
        rep = self._report(metadata={'n_windows': 300})
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'out' / 'report.json'
            save_report_json(rep, path)
            loaded = load_report_json(path)
        self.assertEqual(loaded, rep)

    def test_csv_columns(self):
        """Test the CSV header order and one row per class."""
        rep = self._report()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'report.csv'
            write_report_csv(rep, path)
            lines = path.read_text().splitlines()
        self.assertEqual(lines[0], ','.join(CSV_COLUMNS))
        self.assertEqual(lines[0], 'class,precision,recall,f1,far,mar,support')
        self.assertEqual(len(lines), 1 + rep.n_classes)
        self.assertTrue(lines[1].startswith('c0,'))

    def test_render_table(self):
        """Test the text table has percent rows, Average, Variance and accuracy."""
        rep = report(confusion([0, 1, 1, 2], [0, 1, 2, 2], 3), ['Normal', 'Fault 1', 'Fault 2'])
        table = render_table(rep)
        self.assertIn('Fault 2', table)
        self.assertIn('Average', table)
        self.assertIn('Variance', table)
        self.assertIn('Accuracy: 75.00%  (3/4)', table)
        self.assertIn('100.00', table)

    def test_from_dict_requires_matrix(self):
        """Test a document without a confusion matrix is refused."""
        with self.assertRaises(ConfigurationError):
            ClassificationReport.from_dict({'class_names': ['a']})



class TestPublishedComparison(unittest.TestCase):
    """Test measured metrics lined up against the published tables."""

    def _tep_report(self):
        rng = np.random.default_rng(5)
        labels = rng.integers(0, 21, 2000)
        preds = np.where(rng.random(2000) < 0.9, labels, rng.integers(0, 21, 2000))
        names = ['Normal'] + [f'Fault {i}' for i in range(1, 21)]
        return report(confusion(preds, labels, 21), names)

    def test_tables_are_kept_verbatim(self):
        """Test a few published cells and the roster of each table."""
        self.assertEqual(ALL_CLASSES['Fault 9'], (78, 78, 78, 1.5, 8.2))
        self.assertEqual(ALL_CLASSES['Average'], (95, 94, 94, 0.3, 1.3))
        self.assertEqual(len(ALL_CLASSES), 22)
        self.assertNotIn('Fault 3', WITHOUT_INCIPIENT)
        self.assertNotIn('Fault 19', WITHOUT_INCIPIENT)
        self.assertIn('Fault 15', WITHOUT_INCIPIENT)
        self.assertEqual(WITHOUT_INCIPIENT['Fault 17'][4], 0.31)
        self.assertEqual((COMPARISON_F1['Fault 1'], COMPARISON_F1['Variance']), (72, 12))
        self.assertNotIn('Normal', COMPARISON_F1)

    def test_frame_matches_by_class_name(self):
        """Test measured percentages sit beside the published values of the same class."""
        rep = self._tep_report()
        frame = comparison_frame(rep).set_index('class')
        self.assertEqual(list(frame.index), list(rep.class_names) + ['Average', 'Variance'])
        self.assertAlmostEqual(frame.loc['Fault 4', 'measured_f1'], 100.0 * rep.per_class[4].f1)
        self.assertEqual(frame.loc['Fault 9', 'all_classes_f1'], 78.0)
        self.assertEqual(frame.loc['Fault 9', 'comparison_f1'], 98.0)
        self.assertTrue(np.isnan(frame.loc['Fault 9', 'without_incipient_f1']))
        self.assertTrue(np.isnan(frame.loc['Normal', 'comparison_f1']))
        self.assertAlmostEqual(frame.loc['Average', 'measured_far'], 100.0 * rep.macro_far)
        self.assertAlmostEqual(frame.loc['Variance', 'measured_f1'], 1e4 * rep.f1_variance)
        self.assertEqual(frame.loc['Variance', 'comparison_f1'], 12.0)

    def test_unknown_class_names_leave_published_cells_empty(self):
        """Test classes absent from the published tables get NaN published cells."""
        rep = report(confusion([0, 1, 1, 2], [0, 1, 2, 2], 3), ['c0', 'c1', 'c2'])
        frame = comparison_frame(rep).set_index('class')
        self.assertTrue(frame.loc['c0', [c for c in COMPARISON_COLUMNS if c.startswith('all_classes')]].isna().all())
        self.assertEqual(frame.loc['Average', 'all_classes_precision'], 95.0)

    def test_csv_round_trip(self):
        """Test the written CSV reads back to the same frame."""
        rep = self._tep_report()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'out' / 'compare.csv'
            write_comparison_csv(rep, path)
            header = path.read_text().splitlines()[0]
            loaded = load_comparison_csv(path)
        self.assertEqual(header, ','.join(COMPARISON_COLUMNS))
        pd.testing.assert_frame_equal(loaded, comparison_frame(rep), check_dtype=False)


if __name__ == '__main__':
    unittest.main()
