"""Unit tests for tensors, numeric operations, gradients and parameter files."""

import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from numeric import initializers, ops
from numeric.errors import ContractError, DeterminismError, DimensionError, LabelIndexError, NonFiniteError
from numeric.gradients import backward, finite_diff_check, relative_error
from numeric.parameters import ParameterSet, load_parameters, parameters_from_bytes, parameters_to_bytes, save_parameters
from numeric.tensor import Tensor


def _weighted_sum(out: Tensor, seed: int) -> Tensor:
    """Scalar loss with random weights, so no output direction has zero gradient."""
    weights = np.random.default_rng(seed + 1000).normal(size=out.shape)
    return ops.sum(ops.mul(out, weights))


class TestTensor(unittest.TestCase):
    """Test Tensor construction and immutability."""

    def test_values_are_float64(self):
        """Test integer input is stored as float64."""
        t = Tensor([[1, 2], [3, 4]])
        self.assertEqual(t.data.dtype, np.float64)
        self.assertEqual(t.shape, (2, 2))

    def test_read_only(self):
        """Test the stored array cannot be written."""
        t = Tensor([1.0, 2.0])
        with self.assertRaises(ValueError):
            t.data[0] = 5.0

    def test_numpy_returns_writable_copy(self):
        """Test numpy() copies so callers cannot change the tensor."""
        t = Tensor([1.0, 2.0])
        copy = t.numpy()
        copy[0] = 9.0
        self.assertEqual(t.data[0], 1.0)

    def test_rejects_non_finite(self):
        """Test NaN and Inf are rejected at construction."""
        with self.assertRaises(NonFiniteError):
            Tensor([1.0, math.nan])
        with self.assertRaises(NonFiniteError):
            Tensor([math.inf])

    def test_rejects_zero_extent(self):
        """Test empty axes are rejected."""
        with self.assertRaises(DimensionError):
            Tensor(np.zeros((0, 3)))

    def test_division_by_zero(self):
        """Test an infinite quotient raises NonFiniteError."""
        with self.assertRaises(NonFiniteError):
            ops.div(Tensor([1.0]), Tensor([0.0]))

    def test_item(self):
        """Test item() on single and multi-element tensors."""
        self.assertEqual(Tensor([[2.5]]).item(), 2.5)
        with self.assertRaises(DimensionError):
            Tensor([1.0, 2.0]).item()


class TestMatmul(unittest.TestCase):
    """Test matrix products."""

    def test_hand_example(self):
        """Test [[1,2],[3,4]] @ [[5,6],[7,8]]."""
        out = ops.matmul(Tensor([[1, 2], [3, 4]]), Tensor([[5, 6], [7, 8]]))
        np.testing.assert_array_equal(out.data, [[19, 22], [43, 50]])

    def test_identity_and_zero(self):
        """Test A @ I is exactly A and A @ 0 is exactly 0."""
        a = Tensor(np.random.default_rng(0).normal(size=(3, 4)))
        self.assertTrue(np.array_equal(ops.matmul(a, Tensor(np.eye(4))).data, a.data))
        self.assertTrue(np.array_equal(ops.matmul(a, Tensor(np.zeros((4, 2)))).data, np.zeros((3, 2))))

    def test_shape_mismatch_names_both_shapes(self):
        """Test the error message mentions both operand shapes."""
        with self.assertRaises(DimensionError) as ctx:
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
        self.assertIn('(2, 3) @ (2, 3)', str(ctx.exception))

    def test_batched_broadcast(self):
        """Test a leading batch axis against a shared right operand."""
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(5, 3, 4)), rng.normal(size=(4, 2))
        out = ops.matmul(Tensor(a), Tensor(b))
        self.assertEqual(out.shape, (5, 3, 2))
        np.testing.assert_allclose(out.data[2], a[2] @ b)


class TestRowwise(unittest.TestCase):
    """Test softmax, sigmoid, row norms and layer norm."""

    def test_softmax_examples(self):
        """Test [0, ln 3] and a large equal row."""
        out = ops.softmax_rows(Tensor([[0.0, math.log(3.0)], [1000.0, 1000.0]]))
        np.testing.assert_allclose(out.data[0], [0.25, 0.75], atol=1e-12)
        np.testing.assert_allclose(out.data[1], [0.5, 0.5], atol=1e-12)

    def test_softmax_rows_sum_to_one(self):
        """Test every row of random inputs sums to 1."""
        rng = np.random.default_rng(2)
        for scale in (1e-3, 1.0, 1e3):
            out = ops.softmax_rows(Tensor(rng.normal(size=(6, 9)) * scale))
            np.testing.assert_allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)
            self.assertTrue((out.data >= 0).all())

    def test_sigmoid_examples(self):
        """Test sigmoid at 0, ln 3 and the extremes."""
        out = ops.sigmoid(Tensor([0.0, math.log(3.0), 40.0, -40.0])).data
        self.assertEqual(out[0], 0.5)
        self.assertLess(abs(out[1] - 0.75), 1e-15)
        self.assertLess(abs(out[2] - 1.0), 1e-15)
        self.assertLess(out[3], 1e-15)

    def test_sigmoid_stays_inside_unit_interval(self):
        """Test saturated logits still give values strictly between 0 and 1."""
        out = ops.sigmoid(Tensor([-1e3, -40.0, 40.0, 1e3])).data
        self.assertTrue(np.all(out > 0.0), out)
        self.assertTrue(np.all(out < 1.0), out)

    def test_extreme_magnitudes(self):
        """Test softmax, layer norm and cross-entropy stay finite at +/-1e6."""
        x = np.random.default_rng(8).choice([-1e6, 1e6], size=(4, 5)) + np.arange(5.0)
        probs = ops.softmax_rows(Tensor(x)).data
        self.assertTrue(np.isfinite(probs).all())
        np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-12)
        normed = ops.layer_norm(Tensor(x), Tensor(np.ones(5)), Tensor(np.zeros(5))).data
        self.assertTrue(np.isfinite(normed).all())
        params = ParameterSet({'z': x})
        loss = ops.cross_entropy(params['z'], [0, 1, 2, 3])
        self.assertTrue(math.isfinite(loss.item()))
        self.assertTrue(np.isfinite(backward(loss, params)['z'].data).all())

    def test_sigmoid_symmetry(self):
        """Test sigmoid(x) + sigmoid(-x) = 1."""
        x = np.random.default_rng(3).normal(size=50) * 10
        total = ops.sigmoid(Tensor(x)).data + ops.sigmoid(Tensor(-x)).data
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_row_l2_norms(self):
        """Test norms of [3,4], ones and a zero row."""
        out = ops.row_l2_norms(Tensor([[3.0, 4.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0], [0.0, 0.0, 0.0, 0.0]]))
        self.assertEqual(out.shape, (3, 1))
        np.testing.assert_allclose(out.data[:, 0], [5.0, 2.0, 1e-12])

    def test_row_l2_norms_rejects_bad_eps(self):
        """Test a non-positive floor is rejected."""
        with self.assertRaises(ContractError):
            ops.row_l2_norms(Tensor([[1.0]]), eps=0.0)

    def test_layer_norm_constant_row(self):
        """Test a constant row normalizes to zeros before the bias."""
        out = ops.layer_norm(Tensor([[7.0, 7.0, 7.0]]), Tensor(np.ones(3)), Tensor(np.zeros(3)))
        np.testing.assert_array_equal(out.data, np.zeros((1, 3)))

    def test_layer_norm_examples(self):
        """Test [-1, 1] and [0, 2] with gain 2 and bias 1."""
        out = ops.layer_norm(Tensor([[-1.0, 1.0]]), Tensor(np.ones(2)), Tensor(np.zeros(2)))
        np.testing.assert_allclose(out.data, [[-1.0, 1.0]], atol=1e-4)
        out = ops.layer_norm(Tensor([[0.0, 2.0]]), Tensor([2.0, 2.0]), Tensor([1.0, 1.0]))
        np.testing.assert_allclose(out.data, [[-1.0, 3.0]], atol=1e-4)

    def test_layer_norm_gain_shape(self):
        """Test gain and bias must match the row width."""
        with self.assertRaises(DimensionError):
            ops.layer_norm(Tensor(np.ones((2, 3))), Tensor(np.ones(2)), Tensor(np.zeros(3)))


class TestCrossEntropy(unittest.TestCase):
    """Test the cross-entropy loss."""

    def test_uniform_logits(self):
        """Test zero logits over 4 classes give ln 4."""
        loss = ops.cross_entropy(Tensor(np.zeros((1, 4))), [2])
        self.assertAlmostEqual(loss.item(), math.log(4.0), places=12)

    def test_confident_correct(self):
        """Test a +1000 logit on the label gives zero loss."""
        loss = ops.cross_entropy(Tensor([[1000.0, 0.0, 0.0]]), [0])
        self.assertLess(abs(loss.item()), 1e-9)

    def test_two_class_example(self):
        """Test logits [0, ln 3] with label 1 give -ln 0.75."""
        loss = ops.cross_entropy(Tensor([[0.0, math.log(3.0)]]), [1])
        self.assertAlmostEqual(loss.item(), -math.log(0.75), places=12)

    def test_label_out_of_range(self):
        """Test the first bad label's batch position is reported."""
        with self.assertRaises(LabelIndexError) as ctx:
            ops.cross_entropy(Tensor(np.zeros((3, 4))), [0, 4, 7])
        self.assertIn('batch position 1', str(ctx.exception))

    def test_class_weights(self):
        """Test the weighted mean of per-row losses."""
        logits = np.array([[0.0, 0.0], [0.0, math.log(3.0)]])
        loss = ops.cross_entropy(Tensor(logits), [0, 1], class_weights=np.array([3.0, 1.0]))
        expected = (3.0 * math.log(2.0) + 1.0 * -math.log(0.75)) / 4.0
        self.assertAlmostEqual(loss.item(), expected, places=12)


class TestBackward(unittest.TestCase):
    """Test reverse-mode gradients on hand-derived cases."""

    def test_sum(self):
        """Test d/dp sum(p) is all ones."""
        params = ParameterSet({'p': np.array([[1.0, -2.0], [3.0, 0.5]])})
        grads = backward(ops.sum(params['p']), params)
        np.testing.assert_array_equal(grads['p'].data, np.ones((2, 2)))

    def test_half_square(self):
        """Test d/dp sum(p^2)/2 is p, with p used twice."""
        values = np.array([1.0, -2.0, 3.0])
        params = ParameterSet({'p': values})
        p = params['p']
        grads = backward(ops.mul(ops.sum(ops.mul(p, p)), 0.5), params)
        np.testing.assert_allclose(grads['p'].data, values)

    def test_cross_entropy_gradient(self):
        """Test the logit gradient is softmax minus the one-hot label."""
        params = ParameterSet({'z': np.array([[0.0, math.log(3.0)]])})
        grads = backward(ops.cross_entropy(params['z'], [1]), params)
        np.testing.assert_allclose(grads['z'].data, [[0.25, -0.25]], atol=1e-12)

    def test_unused_parameter_gets_zeros(self):
        """Test parameters the loss does not reach get zero gradients."""
        params = ParameterSet({'a': np.ones(2), 'b': np.ones((2, 3))})
        grads = backward(ops.sum(params['a']), params)
        np.testing.assert_array_equal(grads['b'].data, np.zeros((2, 3)))

    def test_non_scalar_loss(self):
        """Test backward refuses a non-scalar loss."""
        params = ParameterSet({'a': np.ones(2)})
        with self.assertRaises(ContractError):
            backward(params['a'], params)


class TestFiniteDiffCheck(unittest.TestCase):
    """Test the finite-difference oracle and every operation against it."""

    def test_sum_of_squares(self):
        """Test f = sum(p^2) passes at a tight tolerance."""
        params = ParameterSet({'p': np.array([0.5, -1.5, 2.0])})
        report = finite_diff_check(lambda ps: ops.sum(ops.mul(ps['p'], ps['p'])), params, tolerance=1e-6)
        self.assertTrue(report.passed, report.to_dict())

    def test_constant_function(self):
        """Test a constant f has zero error everywhere."""
        params = ParameterSet({'p': np.ones(3)})
        report = finite_diff_check(lambda ps: Tensor(2.0), params)
        self.assertTrue(report.passed)
        self.assertEqual(report.max_relative_error, 0.0)

    def test_nondeterministic_function(self):
        """Test a function that changes between calls is refused."""
        calls = []

        def f(ps):
            calls.append(1)
            return ops.mul(ops.sum(ps['p']), float(len(calls)))

        with self.assertRaises(DeterminismError):
            finite_diff_check(f, ParameterSet({'p': np.ones(2)}))

    def test_relative_error_floor(self):
        """Test two tiny values are compared against the 1e-8 floor."""
        self.assertAlmostEqual(float(relative_error(np.array([1e-12]), np.array([0.0]))[0]), 1e-4)

    def _check(self, build, shapes, seed, prepare=None):
        rng = np.random.default_rng(seed)
        values = {name: rng.normal(size=shape) for name, shape in shapes.items()}
        if prepare is not None:
            values = {name: prepare(v) for name, v in values.items()}
        params = ParameterSet(values)
        report = finite_diff_check(lambda ps: _weighted_sum(build(ps), seed), params)
        self.assertTrue(report.passed, f"seed {seed}: {report.to_dict()}")

    def test_operations(self):
        """Test each differentiable operation over several seeds."""
        cases = {
            'add': (lambda ps: ops.add(ps['a'], ps['b']), {'a': (3, 4), 'b': (4,)}),
            'sub': (lambda ps: ops.sub(ps['a'], ps['b']), {'a': (3, 4), 'b': (4,)}),
            'mul': (lambda ps: ops.mul(ps['a'], ps['b']), {'a': (3, 4), 'b': (3, 4)}),
            'neg': (lambda ps: ops.neg(ps['a']), {'a': (5,)}),
            'relu': (lambda ps: ops.relu(ps['a']), {'a': (4, 5)}),
            'reshape': (lambda ps: ops.reshape(ps['a'], (4, 3)), {'a': (2, 6)}),
            'div': (lambda ps: ops.div(ps['a'], ops.add(ops.mul(ps['b'], ps['b']), 1.0)), {'a': (3, 4), 'b': (3, 4)}),
            'matmul': (lambda ps: ops.matmul(ps['a'], ps['b']), {'a': (2, 3, 4), 'b': (4, 2)}),
            'transpose': (lambda ps: ops.transpose(ps['a']), {'a': (3, 4)}),
            'index': (lambda ps: ps['a'][..., 1:3], {'a': (2, 3, 4)}),
            'concat': (lambda ps: ops.concat([ps['a'], ps['b']], axis=-1), {'a': (3, 2), 'b': (3, 4)}),
            'mean': (lambda ps: ops.mean(ps['a'], axis=-2), {'a': (2, 3, 4)}),
            'softmax': (lambda ps: ops.softmax_rows(ps['a']), {'a': (3, 5)}),
            'sigmoid': (lambda ps: ops.sigmoid(ps['a']), {'a': (6,)}),
            'row_norms': (lambda ps: ops.row_l2_norms(ps['a']), {'a': (4, 3)}),
            'layer_norm': (lambda ps: ops.layer_norm(ps['x'], ps['g'], ps['b']), {'x': (3, 5), 'g': (5,), 'b': (5,)}),
        }
        # relu inputs are pushed at least 0.25 away from the kink.
        prepare = {'relu': lambda v: v + np.where(v >= 0, 0.25, -0.25)}
        for name, (build, shapes) in cases.items():
            for seed in range(20):
                with self.subTest(op=name, seed=seed):
                    self._check(build, shapes, seed, prepare.get(name))

    def test_cross_entropy(self):
        """Test the loss gradient with and without class weights."""
        labels = np.array([0, 2, 1, 2])
        weights = np.array([0.5, 2.0, 1.0])
        for seed in range(5):
            params = ParameterSet({'z': np.random.default_rng(seed).normal(size=(4, 3))})
            for w in (None, weights):
                report = finite_diff_check(lambda ps: ops.cross_entropy(ps['z'], labels, w), params)
                self.assertTrue(report.passed, report.to_dict())


class TestInitializers(unittest.TestCase):
    """Test the weight initialization helpers."""

    def test_constant_fills(self):
        """Test zeros, ones and identity shapes and values."""
        np.testing.assert_array_equal(initializers.zeros(3, 2), np.zeros((3, 2)))
        np.testing.assert_array_equal(initializers.ones(4), np.ones(4))
        np.testing.assert_array_equal(initializers.identity(3), np.eye(3))
        self.assertEqual(initializers.zeros(5).dtype, np.float64)

    def test_xavier_bounds_and_seeding(self):
        """Test Xavier draws stay within the limit and repeat for the same seed."""
        w = initializers.xavier_uniform(np.random.default_rng(1), 6, 10)
        self.assertEqual(w.shape, (6, 10))
        self.assertLessEqual(np.abs(w).max(), math.sqrt(6.0 / 16))
        np.testing.assert_array_equal(w, initializers.xavier_uniform(np.random.default_rng(1), 6, 10))


class TestParameterSet(unittest.TestCase):
    """Test ParameterSet behaviour and the binary file format."""

    def _params(self):
        rng = np.random.default_rng(4)
        return ParameterSet({'b.w': rng.normal(size=(3, 2)), 'a.bias': rng.normal(size=5), 'c': np.array(0.1)})

    def test_sorted_iteration(self):
        """Test names iterate in sorted order and tensors need gradients."""
        params = self._params()
        self.assertEqual(list(params), ['a.bias', 'b.w', 'c'])
        self.assertTrue(all(t.requires_grad for t in params.values()))

    def test_replace(self):
        """Test replace returns a new set and validates names and shapes."""
        params = self._params()
        updated = params.replace({'c': np.array(2.0)})
        self.assertEqual(updated['c'].item(), 2.0)
        self.assertAlmostEqual(params['c'].item(), 0.1)
        self.assertIs(updated['b.w'], params['b.w'])
        with self.assertRaises(ContractError):
            params.replace({'missing': np.ones(1)})
        with self.assertRaises(DimensionError):
            params.replace({'b.w': np.ones(6)})

    def test_with_prefix(self):
        """Test prefix selection strips the prefix."""
        self.assertEqual(list(self._params().with_prefix('b')), ['w'])

    def test_file_round_trip_is_bitwise(self):
        """Test save then load reproduces every value exactly."""
        params = self._params()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'nested' / 'params.bin'
            save_parameters(params, path)
            self.assertTrue(load_parameters(path).equals(params))

    def test_bad_magic(self):
        """Test a payload without the magic tag is refused."""
        payload = parameters_to_bytes(self._params())
        with self.assertRaises(ContractError):
            parameters_from_bytes(b'XXXX' + payload[4:])

    def test_truncated(self):
        """Test a cut-off payload is refused."""
        payload = parameters_to_bytes(self._params())
        with self.assertRaises(ContractError):
            parameters_from_bytes(payload[:-3])
        with self.assertRaises(ContractError):
            parameters_from_bytes(payload[:6])

    def test_trailing_bytes(self):
        """Test extra bytes after the last parameter are refused."""
        with self.assertRaises(ContractError):
            parameters_from_bytes(parameters_to_bytes(self._params()) + b'\x00')


if __name__ == '__main__':
    unittest.main()
