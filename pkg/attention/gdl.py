"""Gated Dynamic Learnable multi-head attention.

Each head runs scaled attention on its own projections of the inputs. The
head output is multiplied by a gate g_i = sigmoid(gate_logit_i), one scalar
per head shared by every position, and the gated heads are concatenated and
projected by W_o. Closing a gate removes a head without changing H, which
is how the number of active heads is learned.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from attention.similarity import DEFAULT_SIMILARITY, AttentionWeights, SimilarityKind, scaled_attention
from numeric import ops
from numeric.errors import ConfigurationError, ContractError, DimensionError
from numeric.initializers import identity, xavier_uniform, zeros
from numeric.parameters import ParameterSet
from numeric.tensor import Tensor


@dataclass(frozen=True)
class HeadParams:
    """Projections for one attention head.

    Attributes:
        w_q: (d_model, d_k) query projection.
        w_k: (d_model, d_k) key projection.
        w_v: (d_model, d_v) value projection.
        w_bilinear: (d_k, d_k) form, present only for bilinear similarity.
    """
    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_bilinear: Optional[Tensor] = None

    @property
    def d_k(self) -> int:
        return self.w_q.shape[1]

    @property
    def d_v(self) -> int:
        return self.w_v.shape[1]


@dataclass(frozen=True)
class GDLAttentionParams:
    """All parameters of one gated multi-head attention layer.

    Attributes:
        heads: H head parameter sets sharing d_k and d_v.
        w_o: (H * d_v, d_model) output projection.
        gate_logits: (H,) logits; the gates are their sigmoids.
        similarity: Similarity function used by every head.
    """
    heads: tuple[HeadParams, ...]
    w_o: Tensor
    gate_logits: Tensor
    similarity: SimilarityKind = DEFAULT_SIMILARITY

    def __post_init__(self):
        if not self.heads:
            raise ConfigurationError("attention needs at least one head")
        d_k, d_v = self.heads[0].d_k, self.heads[0].d_v
        for i, head in enumerate(self.heads):
            if head.d_k != d_k or head.d_v != d_v or head.w_k.shape[1] != d_k:
                raise ConfigurationError(f"head {i} does not share d_k={d_k}, d_v={d_v}")
            if (head.w_bilinear is not None) != (self.similarity is SimilarityKind.BILINEAR):
                raise ConfigurationError(f"head {i}: bilinear form must be present iff similarity is bilinear")
        if self.gate_logits.shape != (self.n_heads,):
            raise ConfigurationError(f"gate_logits must have shape ({self.n_heads},), got {self.gate_logits.shape}")
        if self.w_o.ndim != 2 or self.w_o.shape[0] != self.n_heads * d_v:
            raise ConfigurationError(f"w_o must have {self.n_heads * d_v} rows, got shape {self.w_o.shape}")

    @property
    def n_heads(self) -> int:
        return len(self.heads)

    @property
    def d_model(self) -> int:
        return self.w_o.shape[1]

    @classmethod
    def from_parameters(cls, params: ParameterSet, prefix: str, n_heads: int,
                        similarity: SimilarityKind = DEFAULT_SIMILARITY) -> 'GDLAttentionParams':
        """Build the structured view from ParameterSet names under ``prefix``."""
        bilinear = similarity is SimilarityKind.BILINEAR
        heads = tuple(
            HeadParams(
                w_q=params[f'{prefix}.head{i}.w_q'],
                w_k=params[f'{prefix}.head{i}.w_k'],
                w_v=params[f'{prefix}.head{i}.w_v'],
                w_bilinear=params[f'{prefix}.head{i}.w_bilinear'] if bilinear else None,
            )
            for i in range(n_heads)
        )
        return cls(heads=heads, w_o=params[f'{prefix}.w_o'],
                   gate_logits=params[f'{prefix}.gate_logits'], similarity=similarity)


def init_gdl_parameters(
    rng: np.random.Generator,
    prefix: str,
    d_model: int,
    n_heads: int,
    d_k: int,
    d_v: int,
    similarity: SimilarityKind = DEFAULT_SIMILARITY,
) -> dict[str, np.ndarray]:
    """Initial values for one attention layer, keyed by ParameterSet name.

    Projections are Xavier-uniform, gate logits are zero (every gate starts
    at 0.5) and bilinear forms start as the identity.
    """
    values = {}
    for i in range(n_heads):
        values[f'{prefix}.head{i}.w_q'] = xavier_uniform(rng, d_model, d_k)
        values[f'{prefix}.head{i}.w_k'] = xavier_uniform(rng, d_model, d_k)
        values[f'{prefix}.head{i}.w_v'] = xavier_uniform(rng, d_model, d_v)
        if similarity is SimilarityKind.BILINEAR:
            values[f'{prefix}.head{i}.w_bilinear'] = identity(d_k)
    values[f'{prefix}.w_o'] = xavier_uniform(rng, n_heads * d_v, d_model)
    values[f'{prefix}.gate_logits'] = zeros(n_heads)
    return values


def gate_values(params: GDLAttentionParams) -> Tensor:
    """g = sigmoid(gate_logits), on the gradient graph."""
    return ops.sigmoid(params.gate_logits)


def head_outputs(
    q_in: Tensor,
    k_in: Tensor,
    v_in: Tensor,
    params: GDLAttentionParams,
    eps: float = ops.DEFAULT_NORM_EPS,
) -> list[tuple[Tensor, AttentionWeights]]:
    """Gated output and attention weights of every head, before concatenation."""
    gates = gate_values(params)
    outputs = []
    for i, head in enumerate(params.heads):
        for name, x in (('queries', q_in), ('keys', k_in), ('values', v_in)):
            if x.shape[-1] != head.w_q.shape[0]:
                raise DimensionError(f"head {i}: {name} have width {x.shape[-1]}, "
                                     f"projections expect {head.w_q.shape[0]}")
        out, weights = scaled_attention(
            ops.matmul(q_in, head.w_q),
            ops.matmul(k_in, head.w_k),
            ops.matmul(v_in, head.w_v),
            params.similarity,
            head.w_bilinear,
            eps,
        )
        outputs.append((ops.mul(out, gates[i]), weights))
    return outputs


def gdl_attention(
    q_in: Tensor,
    k_in: Tensor,
    v_in: Tensor,
    params: GDLAttentionParams,
    eps: float = ops.DEFAULT_NORM_EPS,
) -> Tensor:
    """
    Concat(g_1 * head_1, ..., g_H * head_H) @ W_o.

    Self-attention is the case ``q_in is k_in is v_in``.

    Args:
        q_in, k_in, v_in: Inputs of shape (..., L, d_model).
        params: Layer parameters.
        eps: Norm floor used by cosine similarity.

    Returns:
        Tensor of shape (..., L, d_model).

    Raises:
        DimensionError: Naming the head whose projections do not fit the inputs.
    """
    gated = [out for out, _ in head_outputs(q_in, k_in, v_in, params, eps)]
    return ops.matmul(ops.concat(gated, axis=-1), params.w_o)


def effective_head_count(params: GDLAttentionParams, threshold: float = 0.5) -> int:
    """Number of heads whose gate is at least ``threshold``. Diagnostic only.

    Raises:
        ContractError: If ``threshold`` is outside (0, 1).
    """
    if not 0.0 < threshold < 1.0:
        raise ContractError(f"threshold must be in (0, 1), got {threshold}")
    return int(np.count_nonzero(gate_values(params).data >= threshold))
