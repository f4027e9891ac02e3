"""Forward pass of the twin-branch GDLAttention encoder.

split -> per-branch embed -> encoder blocks -> mean-pool over positions
-> concatenate the two pooled vectors -> FC head -> raw logits.

Every function accepts either a single window (W, n) or a batch (B, W, n);
the batched form builds one graph per mini-batch.
"""

import functools
import math
from typing import Union

import numpy as np

from attention.gdl import effective_head_count, gate_values, gdl_attention
from numeric import ops
from numeric.errors import ConfigurationError, DimensionError
from numeric.parameters import ParameterSet
from numeric.tensor import Tensor
from twin.config import SplitStrategy, TwinModelConfig
from twin.params import BRANCHES, BranchParams, EncoderBlockParams, TwinModelParams, layer_prefix

ModelParams = Union[ParameterSet, TwinModelParams]


@functools.lru_cache(maxsize=32)
def positional_encoding(length: int, d_model: int) -> np.ndarray:
    """
    Fixed sinusoidal encoding of shape (length, d_model).

    Even columns 2i hold sin(pos / 10000^(2i/d_model)) and odd columns 2i+1
    hold the matching cosine. The returned array is read-only.
    """
    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = np.exp(-math.log(10000.0) * np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    angles = positions * rates[None, :]
    encoding = np.zeros((length, d_model))
    encoding[:, 0::2] = np.sin(angles)
    encoding[:, 1::2] = np.cos(angles[:, : d_model // 2])
    encoding.setflags(write=False)
    return encoding


def split_input(x: Tensor, strategy: SplitStrategy) -> tuple[Tensor, Tensor]:
    """
    Divide the feature axis between the branches.

    FEATURE_HALVES gives branch 1 the first ceil(n/2) columns and branch 2
    the rest; DUPLICATE hands the same tensor to both.

    Raises:
        ConfigurationError: FEATURE_HALVES with fewer than 2 features.
    """
    if strategy is SplitStrategy.DUPLICATE:
        return x, x
    n = x.shape[-1]
    if n < 2:
        raise ConfigurationError(f"feature_halves split needs at least 2 features, got {n}")
    cut = math.ceil(n / 2)
    return x[..., :cut], x[..., cut:]


def embed(x_branch: Tensor, branch: BranchParams) -> Tensor:
    """Linear projection to d_model plus the positional encoding of positions 0..W-1."""
    projected = ops.matmul(x_branch, branch.input_proj)
    return ops.add(projected, positional_encoding(x_branch.shape[-2], projected.shape[-1]))


def encoder_block(t: Tensor, block: EncoderBlockParams, layer_norm_eps: float = 1e-5,
                  attention_eps: float = ops.DEFAULT_NORM_EPS) -> Tensor:
    """Post-norm residual block: LN(T + attention(T)), then LN(T1 + FF(T1))."""
    attended = gdl_attention(t, t, t, block.attention, attention_eps)
    t1 = ops.layer_norm(ops.add(t, attended), block.ln1_gain, block.ln1_bias, layer_norm_eps)
    hidden = ops.relu(ops.add(ops.matmul(t1, block.ff_w1), block.ff_b1))
    ff = ops.add(ops.matmul(hidden, block.ff_w2), block.ff_b2)
    return ops.layer_norm(ops.add(t1, ff), block.ln2_gain, block.ln2_bias, layer_norm_eps)


def encode_branch(x_branch: Tensor, branch: BranchParams, config: TwinModelConfig) -> Tensor:
    """Embedding followed by every encoder block of one branch; shape (..., W, d_model)."""
    t = embed(x_branch, branch)
    for block in branch.blocks:
        t = encoder_block(t, block, config.layer_norm_eps, config.attention_eps)
    return t


def _structured(params: ModelParams, config: TwinModelConfig) -> TwinModelParams:
    if isinstance(params, TwinModelParams):
        return params
    return TwinModelParams.from_parameters(params, config)


def _check_input(x: Tensor, config: TwinModelConfig, batched: bool):
    expected = ('B', config.window_len, config.n_features) if batched else (config.window_len, config.n_features)
    if x.ndim != len(expected) or x.shape[-2:] != (config.window_len, config.n_features):
        raise DimensionError(f"model input has shape {x.shape}, expected {expected}")


def pooled_branches(x: Tensor, params: ModelParams, config: TwinModelConfig) -> tuple[Tensor, Tensor]:
    """Mean over positions of each branch's encoder output, shape (..., d_model) each."""
    structured = _structured(params, config)
    parts = split_input(x, config.split_strategy)
    return tuple(
        ops.mean(encode_branch(part, branch, config), axis=-2)
        for part, branch in zip(parts, structured.branches)
    )


def forward_batch(x, params: ModelParams, config: TwinModelConfig) -> Tensor:
    """
    Logits for a batch of windows.

    Args:
        x: Tensor or array of shape (B, W, n_features).
        params: ParameterSet or its structured view.
        config: Model configuration.

    Returns:
        Tensor of shape (B, n_classes); no softmax is applied.

    Raises:
        DimensionError: If ``x`` does not match the configured window shape.
    """
    x = ops.as_tensor(x)
    _check_input(x, config, batched=True)
    structured = _structured(params, config)
    pooled = pooled_branches(x, structured, config)
    fused = ops.concat(pooled, axis=-1)
    return ops.add(ops.matmul(fused, structured.fc_w), structured.fc_b)


def forward(x, params: ModelParams, config: TwinModelConfig) -> Tensor:
    """Logits of shape (n_classes,) for one (W, n_features) window."""
    x = ops.as_tensor(x)
    _check_input(x, config, batched=False)
    logits = forward_batch(ops.reshape(x, (1,) + x.shape), params, config)
    return logits[0]


def argmax_lowest(logits: np.ndarray) -> np.ndarray:
    """Argmax over the last axis; ties go to the lowest class index."""
    return np.argmax(logits, axis=-1)


def predict(x, params: ModelParams, config: TwinModelConfig) -> int:
    return int(argmax_lowest(forward(x, params, config).data))


def predict_batch(x, params: ModelParams, config: TwinModelConfig) -> np.ndarray:
    return argmax_lowest(forward_batch(x, params, config).data).astype(np.int64)


def gate_summary(params: ModelParams, config: TwinModelConfig) -> dict[str, list[float]]:
    """Current gate values g = sigmoid(logits) for every attention layer."""
    structured = _structured(params, config)
    summary = {}
    for name, branch in zip(BRANCHES, structured.branches):
        for layer, block in enumerate(branch.blocks):
            summary[layer_prefix(name, layer)] = gate_values(block.attention).data.tolist()
    return summary


def effective_heads(params: ModelParams, config: TwinModelConfig, threshold: float = 0.5) -> dict[str, int]:
    """Per-layer count of heads with gate >= ``threshold``."""
    structured = _structured(params, config)
    return {
        layer_prefix(name, layer): effective_head_count(block.attention, threshold)
        for name, branch in zip(BRANCHES, structured.branches)
        for layer, block in enumerate(branch.blocks)
    }
