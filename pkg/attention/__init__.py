"""Similarity functions and gated multi-head attention."""

from attention.similarity import (
    DEFAULT_SIMILARITY, AttentionWeights, SimilarityKind, raw_scores, scaled_attention,
)
from attention.gdl import (
    GDLAttentionParams, HeadParams, effective_head_count, gate_values, gdl_attention,
    head_outputs, init_gdl_parameters,
)

__all__ = [
    'SimilarityKind', 'DEFAULT_SIMILARITY', 'AttentionWeights', 'raw_scores', 'scaled_attention',
    'HeadParams', 'GDLAttentionParams', 'init_gdl_parameters', 'gate_values', 'head_outputs',
    'gdl_attention', 'effective_head_count',
]
