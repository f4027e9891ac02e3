"""Similarity scores and single-head scaled attention."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from numeric import ops
from numeric.errors import ConfigurationError, DimensionError
from numeric.tensor import Tensor


class SimilarityKind(Enum):
    """How queries are compared with keys."""
    DOT_PRODUCT = 'dot_product'
    BILINEAR = 'bilinear'
    COSINE = 'cosine'


# Cosine is the mechanism the model is built around; the other two stay selectable.
DEFAULT_SIMILARITY = SimilarityKind.COSINE


@dataclass(frozen=True)
class AttentionWeights:
    """Row-stochastic attention matrix of shape (..., L_q, L_k)."""
    matrix: Tensor

    def row_sums(self):
        return self.matrix.data.sum(axis=-1)


def _check_bilinear(kind: SimilarityKind, bilinear_form: Optional[Tensor], d_k: int):
    if kind is SimilarityKind.BILINEAR:
        if bilinear_form is None:
            raise ConfigurationError("bilinear similarity needs a bilinear form")
        if bilinear_form.shape != (d_k, d_k):
            raise ConfigurationError(f"bilinear form must be {d_k}x{d_k}, got {bilinear_form.shape}")
    elif bilinear_form is not None:
        raise ConfigurationError(f"{kind.value} similarity does not take a bilinear form")


def raw_scores(
    q: Tensor,
    k: Tensor,
    kind: SimilarityKind = DEFAULT_SIMILARITY,
    bilinear_form: Optional[Tensor] = None,
    eps: float = ops.DEFAULT_NORM_EPS,
) -> Tensor:
    """
    Pre-softmax score matrix.

    All three kinds divide by sqrt(d_k):

    - DOT_PRODUCT: Q K^T / sqrt(d_k)
    - BILINEAR: Q W K^T / sqrt(d_k)
    - COSINE: Q K^T / (|q_i| |k_j| sqrt(d_k)), row norms floored at ``eps``

    Args:
        q: Queries, shape (..., L_q, d_k).
        k: Keys, shape (..., L_k, d_k).
        kind: Similarity function.
        bilinear_form: (d_k, d_k) matrix, required for BILINEAR and rejected otherwise.
        eps: Norm floor for COSINE.

    Returns:
        Tensor of shape (..., L_q, L_k).
    """
    if q.shape[-1] != k.shape[-1]:
        raise DimensionError(f"queries and keys must share d_k: {q.shape} vs {k.shape}")
    d_k = q.shape[-1]
    _check_bilinear(kind, bilinear_form, d_k)
    scale = 1.0 / math.sqrt(d_k)

    if kind is SimilarityKind.BILINEAR:
        dots = ops.matmul(ops.matmul(q, bilinear_form), ops.transpose(k))
    else:
        dots = ops.matmul(q, ops.transpose(k))
    if kind is SimilarityKind.COSINE:
        # Pairwise product of per-row norms, shape (..., L_q, L_k).
        norms = ops.matmul(ops.row_l2_norms(q, eps), ops.transpose(ops.row_l2_norms(k, eps)))
        dots = ops.div(dots, norms)
    return ops.mul(dots, scale)


def scaled_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    kind: SimilarityKind = DEFAULT_SIMILARITY,
    bilinear_form: Optional[Tensor] = None,
    eps: float = ops.DEFAULT_NORM_EPS,
) -> tuple[Tensor, AttentionWeights]:
    """
    softmax(raw_scores) applied to the values.

    Returns:
        (output of shape (..., L_q, d_v), the attention weights)

    Raises:
        DimensionError: If keys and values have different lengths.
    """
    if k.shape[-2] != v.shape[-2]:
        raise DimensionError(f"keys and values must have the same length: {k.shape} vs {v.shape}")
    weights = ops.softmax_rows(raw_scores(q, k, kind, bilinear_form, eps))
    return ops.matmul(weights, v), AttentionWeights(weights)
