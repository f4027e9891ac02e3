"""Unit tests for the twin-branch model, its configuration and checkpoints."""

import tempfile
import unittest
from pathlib import Path

import numpy as np

from attention.similarity import SimilarityKind
from numeric import ops
from numeric.errors import ConfigurationError, ContractError, DimensionError
from numeric.gradients import backward, finite_diff_check
from numeric.tensor import Tensor
from test import reference
from twin import (
    SplitStrategy, TwinModelConfig, TwinModelParams, check_parameters, effective_heads, embed,
    encoder_block, expected_shapes, forward, forward_batch, gate_summary, init_parameters,
    load_checkpoint, pooled_branches, positional_encoding, predict, predict_batch, save_checkpoint, split_input,
)
from twin.config import config_path_for


def _params(config, seed=0, gate_scale=0.5):
    """Initial parameters with random gate logits so every gate is distinct."""
    params = init_parameters(config, seed)
    rng = np.random.default_rng(seed + 100)
    return params.replace({
        name: rng.normal(scale=gate_scale, size=params[name].shape)
        for name in params if name.endswith('gate_logits')
    })


class TestSplitAndEmbed(unittest.TestCase):
    """Test the feature split and the input embedding."""

    def test_branch_widths(self):
        """Test 52 features split 26/26 and 5 split 3/2."""
        self.assertEqual(TwinModelConfig().branch_widths, (26, 26))
        self.assertEqual(TwinModelConfig(n_features=5).branch_widths, (3, 2))
        self.assertEqual(TwinModelConfig(n_features=5, split_strategy=SplitStrategy.DUPLICATE).branch_widths,
                         (5, 5))

    def test_split_input(self):
        """Test the halves split takes leading columns first."""
        x = Tensor(np.arange(20.0).reshape(4, 5))
        first, second = split_input(x, SplitStrategy.FEATURE_HALVES)
        np.testing.assert_array_equal(first.data, x.data[:, :3])
        np.testing.assert_array_equal(second.data, x.data[:, 3:])

    def test_duplicate_passes_same_tensor(self):
        """Test duplicate hands the same input to both branches."""
        x = Tensor(np.ones((4, 5)))
        first, second = split_input(x, SplitStrategy.DUPLICATE)
        self.assertIs(first, x)
        self.assertIs(second, x)

    def test_halves_needs_two_features(self):
        """Test one feature cannot be split in halves."""
        with self.assertRaises(ConfigurationError):
            split_input(Tensor(np.ones((4, 1))), SplitStrategy.FEATURE_HALVES)
        with self.assertRaises(ConfigurationError):
            TwinModelConfig(n_features=1)

    def test_positional_encoding(self):
        """Test the encoding against the loop-based reference and its first row."""
        pe = positional_encoding(7, 8)
        np.testing.assert_allclose(pe, reference.positional_encoding(7, 8), atol=1e-12)
        np.testing.assert_array_equal(pe[0, 0::2], np.zeros(4))
        np.testing.assert_array_equal(pe[0, 1::2], np.ones(4))
        self.assertFalse(pe.flags.writeable)

    def test_zero_input_embeds_to_encoding(self):
        """Test a zero window embeds to exactly the positional encoding."""
        config = TwinModelConfig.tiny()
        branch = TwinModelParams.from_parameters(init_parameters(config), config).branches[0]
        out = embed(Tensor(np.zeros((4, 3))), branch)
        np.testing.assert_array_equal(out.data, positional_encoding(4, 8))


class TestEncoderBlock(unittest.TestCase):
    """Test one post-norm encoder block."""

    def test_closed_gates_and_zero_ff(self):
        """Test the block reduces to two layer norms when attention and FF contribute nothing."""
        config = TwinModelConfig.tiny()
        params = init_parameters(config)
        prefix = 'branch1.layer0'
        params = params.replace({
            f'{prefix}.attn.gate_logits': np.full(2, -1e3),
            f'{prefix}.ff_w1': np.zeros((8, 16)),
            f'{prefix}.ff_w2': np.zeros((16, 8)),
        })
        block = TwinModelParams.from_parameters(params, config).branches[0].blocks[0]
        t = np.random.default_rng(20).normal(size=(4, 8))
        ones, zeros = np.ones(8), np.zeros(8)
        expected = reference.layer_norm(reference.layer_norm(t, ones, zeros, 1e-5), ones, zeros, 1e-5)
        np.testing.assert_allclose(encoder_block(Tensor(t), block).data, expected, atol=1e-12)


class TestForward(unittest.TestCase):
    """Test the full forward pass and prediction."""

    def test_matches_reference(self):
        """Test logits equal the loop-based reference for several variants."""
        variants = {
            'default': TwinModelConfig.tiny(),
            'bilinear': TwinModelConfig.tiny(similarity=SimilarityKind.BILINEAR),
            'dot_product': TwinModelConfig.tiny(similarity=SimilarityKind.DOT_PRODUCT),
            'duplicate': TwinModelConfig.tiny(split_strategy=SplitStrategy.DUPLICATE, n_layers_per_branch=2),
        }
        x = np.random.default_rng(21).normal(size=(4, 6))
        for name, config in variants.items():
            with self.subTest(variant=name):
                params = _params(config)
                logits = forward(Tensor(x), params, config)
                self.assertEqual(logits.shape, (3,))
                expected = reference.twin_forward(x, params.to_arrays(), config)
                np.testing.assert_allclose(logits.data, expected, rtol=0, atol=1e-12)

    def test_batch_matches_single(self):
        """Test each batch row equals the single-window logits."""
        config = TwinModelConfig.tiny()
        params = _params(config)
        x = np.random.default_rng(22).normal(size=(5, 4, 6))
        batched = forward_batch(x, params, config).data
        for b in range(5):
            np.testing.assert_allclose(batched[b], forward(x[b], params, config).data, atol=1e-12)

    def test_deterministic(self):
        """Test repeated calls give bitwise identical logits."""
        config = TwinModelConfig.tiny()
        params = _params(config)
        x = np.random.default_rng(23).normal(size=(3, 4, 6))
        self.assertTrue(np.array_equal(forward_batch(x, params, config).data, forward_batch(x, params, config).data))

    def test_zero_classifier_returns_bias(self):
        """Test a zero FC weight makes the logits equal the bias."""
        config = TwinModelConfig.tiny()
        params = _params(config).replace({'head.fc_w': np.zeros((16, 3)), 'head.fc_b': np.array([0.5, -1.0, 2.0])})
        logits = forward(np.random.default_rng(24).normal(size=(4, 6)), params, config)
        np.testing.assert_array_equal(logits.data, [0.5, -1.0, 2.0])

    def test_predict_ties_go_to_lowest_class(self):
        """Test equal logits predict class 0 and a tie between 1 and 2 predicts 1."""
        config = TwinModelConfig.tiny()
        x = np.random.default_rng(25).normal(size=(2, 4, 6))
        params = _params(config).replace({'head.fc_w': np.zeros((16, 3)), 'head.fc_b': np.zeros(3)})
        self.assertEqual(predict(x[0], params, config), 0)
        params = params.replace({'head.fc_b': np.array([1.0, 3.0, 3.0])})
        np.testing.assert_array_equal(predict_batch(x, params, config), [1, 1])
        self.assertEqual(predict_batch(x, params, config).dtype, np.int64)

    def test_pooling_ignores_row_order(self):
        """Test permuting embedded rows (positional encodings included) leaves the pooled branch unchanged."""
        config = TwinModelConfig.tiny(n_layers_per_branch=2)
        params = _params(config, seed=3)
        structured = TwinModelParams.from_parameters(params, config)
        x = Tensor(np.random.default_rng(27).normal(size=(4, 6)))
        for part, branch in zip(split_input(x, config.split_strategy), structured.branches):
            embedded = embed(part, branch).data
            pooled = []
            for rows in (np.arange(4), np.array([2, 0, 3, 1])):
                t = Tensor(embedded[rows])
                for block in branch.blocks:
                    t = encoder_block(t, block, config.layer_norm_eps, config.attention_eps)
                pooled.append(ops.mean(t, axis=-2).data)
            np.testing.assert_allclose(pooled[1], pooled[0], rtol=0, atol=1e-12)
        first, _ = pooled_branches(x, params, config)
        self.assertEqual(first.shape, (8,))

    def test_prediction_ignores_positive_head_scaling(self):
        """Test scaling the classifier weight and bias by a positive factor keeps every prediction."""
        config = TwinModelConfig.tiny()
        params = _params(config, seed=4)
        x = np.random.default_rng(28).normal(size=(12, 4, 6))
        base = predict_batch(x, params, config)
        for factor in (0.25, 3.7, 100.0):
            scaled = params.replace({'head.fc_w': factor * params['head.fc_w'].data,
                                     'head.fc_b': factor * params['head.fc_b'].data})
            np.testing.assert_array_equal(predict_batch(x, scaled, config), base)

    def test_duplicate_split_with_silenced_second_branch(self):
        """Test closed gates and zero FF in branch 2 keep logits finite and branch 1 trainable."""
        config = TwinModelConfig.tiny(split_strategy=SplitStrategy.DUPLICATE)
        params = _params(config, seed=5)
        prefix = 'branch2.layer0'
        params = params.replace({
            f'{prefix}.attn.gate_logits': np.full(2, -1e3),
            f'{prefix}.ff_w1': np.zeros((8, 16)),
            f'{prefix}.ff_b1': np.zeros(16),
            f'{prefix}.ff_w2': np.zeros((16, 8)),
            f'{prefix}.ff_b2': np.zeros(8),
        })
        x = np.random.default_rng(29).normal(size=(3, 4, 6))
        logits = forward_batch(x, params, config)
        self.assertTrue(np.isfinite(logits.data).all())
        grads = backward(ops.cross_entropy(logits, [0, 1, 2]), params)
        for name in params:
            self.assertTrue(np.isfinite(grads[name].data).all(), name)
        for name in ('branch1.input_proj', 'branch1.layer0.attn.gate_logits', 'branch1.layer0.ff_w1'):
            self.assertTrue(np.any(grads[name].data != 0.0), name)

    def test_wrong_input_shape(self):
        """Test windows of the wrong shape are refused."""
        config = TwinModelConfig.tiny()
        params = init_parameters(config)
        with self.assertRaises(DimensionError):
            forward(np.zeros((4, 5)), params, config)
        with self.assertRaises(DimensionError):
            forward_batch(np.zeros((4, 6)), params, config)
        with self.assertRaises(DimensionError):
            forward_batch(np.zeros((2, 5, 6)), params, config)

    def test_gate_summary_and_effective_heads(self):
        """Test fresh gates are 0.5 in every layer and all heads count at 0.5."""
        config = TwinModelConfig.tiny()
        params = init_parameters(config)
        self.assertEqual(gate_summary(params, config), {'branch1.layer0': [0.5, 0.5], 'branch2.layer0': [0.5, 0.5]})
        self.assertEqual(effective_heads(params, config, 0.5), {'branch1.layer0': 2, 'branch2.layer0': 2})
        self.assertEqual(effective_heads(params, config, 0.6), {'branch1.layer0': 0, 'branch2.layer0': 0})

    def test_gradients_match_finite_differences(self):
        """Test every parameter of the tiny model against central differences."""
        x = np.random.default_rng(26).normal(size=(2, 4, 6))
        labels = np.array([0, 2])
        for similarity in (SimilarityKind.COSINE, SimilarityKind.BILINEAR):
            with self.subTest(similarity=similarity):
                config = TwinModelConfig.tiny(similarity=similarity)
                report = finite_diff_check(
                    lambda ps, config=config: ops.cross_entropy(forward_batch(x, ps, config), labels),
                    _params(config, seed=1),
                )
                self.assertTrue(report.passed, f"worst {report.worst_parameter}: {report.max_relative_error:.3e}")


class TestParameters(unittest.TestCase):
    """Test parameter initialization and validation."""

    def test_names_and_shapes(self):
        """Test init produces exactly the expected names and shapes."""
        config = TwinModelConfig.tiny()
        params = init_parameters(config)
        shapes = expected_shapes(config)
        self.assertEqual(set(params), set(shapes))
        self.assertEqual(params['branch1.input_proj'].shape, (3, 8))
        self.assertEqual(params['branch1.layer0.attn.w_o'].shape, (8, 8))
        self.assertEqual(params['head.fc_w'].shape, (16, 3))
        self.assertNotIn('branch1.layer0.attn.head0.w_bilinear', params)

    def test_seeded(self):
        """Test the same seed reproduces parameters and another seed does not."""
        config = TwinModelConfig.tiny()
        self.assertTrue(init_parameters(config, 3).equals(init_parameters(config, 3)))
        self.assertFalse(init_parameters(config, 3).equals(init_parameters(config, 4)))

    def test_branches_do_not_share_weights(self):
        """Test the two branches get different initial weights."""
        params = init_parameters(TwinModelConfig.tiny(split_strategy=SplitStrategy.DUPLICATE))
        self.assertFalse(np.array_equal(params['branch1.input_proj'].data, params['branch2.input_proj'].data))

    def test_check_parameters(self):
        """Test missing names and wrong shapes are reported."""
        config = TwinModelConfig.tiny()
        params = init_parameters(config)
        with self.assertRaises(ContractError):
            check_parameters(params, TwinModelConfig.tiny(n_layers_per_branch=2))
        with self.assertRaises(DimensionError):
            check_parameters(params, TwinModelConfig.tiny(n_classes=4))


class TestModelConfig(unittest.TestCase):
    """Test TwinModelConfig validation and its text format."""

    def test_defaults(self):
        """Test default dimensions and derived head widths."""
        config = TwinModelConfig()
        self.assertEqual((config.n_features, config.window_len, config.n_classes), (52, 20, 21))
        self.assertEqual((config.d_k, config.d_v), (8, 8))
        self.assertIs(config.similarity, SimilarityKind.COSINE)
        self.assertEqual(TwinModelConfig(d_model=3, n_heads=4).d_k, 1)

    def test_invalid_values(self):
        """Test non-positive sizes and epsilons are refused."""
        with self.assertRaises(ConfigurationError):
            TwinModelConfig(n_heads=0)
        with self.assertRaises(ConfigurationError):
            TwinModelConfig(layer_norm_eps=0.0)
        with self.assertRaises(ConfigurationError):
            TwinModelConfig(similarity='cosine')

    def test_text_round_trip(self):
        """Test to_text then from_text gives an equal config."""
        config = TwinModelConfig.tiny(similarity=SimilarityKind.BILINEAR, split_strategy=SplitStrategy.DUPLICATE)
        self.assertEqual(TwinModelConfig.from_text(config.to_text()), config)
        self.assertIn('similarity = bilinear', config.to_text())

    def test_text_errors(self):
        """Test unknown keys, duplicate keys and lines without '=' are refused."""
        with self.assertRaises(ConfigurationError):
            TwinModelConfig.from_text('n_heads = 2\ncolour = blue\n')
        with self.assertRaises(ConfigurationError):
            TwinModelConfig.from_text('n_heads = 2\nn_heads = 3\n')
        with self.assertRaises(ConfigurationError):
            TwinModelConfig.from_text('n_heads 2\n')
        with self.assertRaises(ConfigurationError):
            TwinModelConfig.from_text('n_heads = two\n')

    def test_missing_keys_take_defaults(self):
        """Test a partial document fills in defaults."""
        config = TwinModelConfig.from_text('# partial\nn_heads = 2\n\nd_k = none\n')
        self.assertEqual(config.n_heads, 2)
        self.assertEqual(config.d_model, 32)
        self.assertEqual(config.d_k, 16)

    def test_config_hash(self):
        """Test the hash is stable and sensitive to every field."""
        self.assertEqual(TwinModelConfig().config_hash(), TwinModelConfig().config_hash())
        self.assertNotEqual(TwinModelConfig().config_hash(), TwinModelConfig(n_heads=2).config_hash())


class TestCheckpoint(unittest.TestCase):
    """Test saving and loading checkpoints."""

    def test_round_trip(self):
        """Test parameters and config reload exactly."""
        config = TwinModelConfig.tiny()
        params = _params(config)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'model.bin'
            save_checkpoint(params, config, path)
            self.assertTrue(config_path_for(path).exists())
            loaded, loaded_config = load_checkpoint(path)
        self.assertTrue(loaded.equals(params))
        self.assertEqual(loaded_config, config)

    def test_mismatched_config_is_refused(self):
        """Test a checkpoint cannot be saved with the wrong config."""
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(DimensionError):
                save_checkpoint(init_parameters(TwinModelConfig.tiny()), TwinModelConfig.tiny(n_classes=4),
                                Path(tmp) / 'model.bin')

    def test_missing_files(self):
        """Test loading a missing checkpoint raises FileNotFoundError."""
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(FileNotFoundError):
                load_checkpoint(Path(tmp) / 'absent.bin')


if __name__ == '__main__':
    unittest.main()
