"""Parameter naming, initialization and structured views for the twin model.

Every learnable tensor lives in one ParameterSet under a branch-qualified
name::

    branch1.input_proj
    branch1.layer0.attn.head0.w_q   (w_k, w_v, w_bilinear)
    branch1.layer0.attn.w_o
    branch1.layer0.attn.gate_logits
    branch1.layer0.ff_w1            (ff_b1, ff_w2, ff_b2)
    branch1.layer0.ln1_gain         (ln1_bias, ln2_gain, ln2_bias)
    ...
    head.fc_w
    head.fc_b

The two branches never share parameters.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from attention.gdl import GDLAttentionParams, init_gdl_parameters
from attention.similarity import SimilarityKind
from numeric.errors import ContractError, DimensionError
from numeric.initializers import ones, xavier_uniform, zeros
from numeric.parameters import ParameterSet
from numeric.tensor import Tensor
from twin.config import TwinModelConfig

BRANCHES = ('branch1', 'branch2')


def layer_prefix(branch: str, layer: int) -> str:
    return f'{branch}.layer{layer}'


def expected_shapes(config: TwinModelConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape of every parameter a model with ``config`` owns."""
    shapes = {}
    d, h = config.d_model, config.n_heads
    for branch, width in zip(BRANCHES, config.branch_widths):
        shapes[f'{branch}.input_proj'] = (width, d)
        for layer in range(config.n_layers_per_branch):
            prefix = layer_prefix(branch, layer)
            for i in range(h):
                shapes[f'{prefix}.attn.head{i}.w_q'] = (d, config.d_k)
                shapes[f'{prefix}.attn.head{i}.w_k'] = (d, config.d_k)
                shapes[f'{prefix}.attn.head{i}.w_v'] = (d, config.d_v)
                if config.similarity is SimilarityKind.BILINEAR:
                    shapes[f'{prefix}.attn.head{i}.w_bilinear'] = (config.d_k, config.d_k)
            shapes[f'{prefix}.attn.w_o'] = (h * config.d_v, d)
            shapes[f'{prefix}.attn.gate_logits'] = (h,)
            shapes[f'{prefix}.ff_w1'] = (d, config.d_ff)
            shapes[f'{prefix}.ff_b1'] = (config.d_ff,)
            shapes[f'{prefix}.ff_w2'] = (config.d_ff, d)
            shapes[f'{prefix}.ff_b2'] = (d,)
            for norm in ('ln1', 'ln2'):
                shapes[f'{prefix}.{norm}_gain'] = (d,)
                shapes[f'{prefix}.{norm}_bias'] = (d,)
    shapes['head.fc_w'] = (2 * d, config.n_classes)
    shapes['head.fc_b'] = (config.n_classes,)
    return shapes


def init_parameters(config: TwinModelConfig, seed: int = 0) -> ParameterSet:
    """
    Fresh parameters for ``config``, fully determined by ``seed``.

    Weight matrices are Xavier-uniform, biases zero, layer-norm gains one,
    gate logits zero and bilinear forms the identity.
    """
    rng = np.random.default_rng(seed)
    d = config.d_model
    values = {}
    for branch, width in zip(BRANCHES, config.branch_widths):
        values[f'{branch}.input_proj'] = xavier_uniform(rng, width, d)
        for layer in range(config.n_layers_per_branch):
            prefix = layer_prefix(branch, layer)
            values.update(init_gdl_parameters(rng, f'{prefix}.attn', d, config.n_heads,
                                              config.d_k, config.d_v, config.similarity))
            values[f'{prefix}.ff_w1'] = xavier_uniform(rng, d, config.d_ff)
            values[f'{prefix}.ff_b1'] = zeros(config.d_ff)
            values[f'{prefix}.ff_w2'] = xavier_uniform(rng, config.d_ff, d)
            values[f'{prefix}.ff_b2'] = zeros(d)
            for norm in ('ln1', 'ln2'):
                values[f'{prefix}.{norm}_gain'] = ones(d)
                values[f'{prefix}.{norm}_bias'] = zeros(d)
    values['head.fc_w'] = xavier_uniform(rng, 2 * d, config.n_classes)
    values['head.fc_b'] = zeros(config.n_classes)
    return ParameterSet(values)


def check_parameters(params: ParameterSet, config: TwinModelConfig):
    """
    Raises:
        ContractError: If names are missing or unexpected.
        DimensionError: If a tensor's shape does not match the config.
    """
    shapes = expected_shapes(config)
    missing = sorted(set(shapes) - set(params))
    extra = sorted(set(params) - set(shapes))
    if missing or extra:
        raise ContractError(f"parameter names do not match model config: "
                            f"missing {missing or 'none'}, unexpected {extra or 'none'}")
    for name, shape in shapes.items():
        if params[name].shape != shape:
            raise DimensionError(f"parameter {name} has shape {params[name].shape}, config expects {shape}")


@dataclass(frozen=True)
class EncoderBlockParams:
    attention: GDLAttentionParams
    ff_w1: Tensor
    ff_b1: Tensor
    ff_w2: Tensor
    ff_b2: Tensor
    ln1_gain: Tensor
    ln1_bias: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor


@dataclass(frozen=True)
class BranchParams:
    input_proj: Tensor
    blocks: tuple[EncoderBlockParams, ...]


@dataclass(frozen=True)
class TwinModelParams:
    """Structured, read-only view of a twin model's ParameterSet."""
    branches: tuple[BranchParams, BranchParams]
    fc_w: Tensor
    fc_b: Tensor
    source: Optional[ParameterSet] = None

    @classmethod
    def from_parameters(cls, params: ParameterSet, config: TwinModelConfig) -> 'TwinModelParams':
        check_parameters(params, config)
        branches = []
        for branch in BRANCHES:
            blocks = []
            for layer in range(config.n_layers_per_branch):
                prefix = layer_prefix(branch, layer)
                blocks.append(EncoderBlockParams(
                    attention=GDLAttentionParams.from_parameters(
                        params, f'{prefix}.attn', config.n_heads, config.similarity),
                    **{name: params[f'{prefix}.{name}'] for name in (
                        'ff_w1', 'ff_b1', 'ff_w2', 'ff_b2', 'ln1_gain', 'ln1_bias', 'ln2_gain', 'ln2_bias')},
                ))
            branches.append(BranchParams(input_proj=params[f'{branch}.input_proj'], blocks=tuple(blocks)))
        return cls(branches=tuple(branches), fc_w=params['head.fc_w'], fc_b=params['head.fc_b'], source=params)
