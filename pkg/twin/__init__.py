"""Twin-branch GDLAttention encoder for window classification."""

from twin.config import (
    CONFIG_SUFFIX, FusionKind, SplitStrategy, TwinModelConfig, config_path_for,
    load_model_config, save_model_config,
)
from twin.params import (
    BRANCHES, BranchParams, EncoderBlockParams, TwinModelParams, check_parameters,
    expected_shapes, init_parameters,
)
from twin.checkpoint import load_checkpoint, save_checkpoint
from twin.model import (
    effective_heads, embed, encode_branch, encoder_block, forward, forward_batch, gate_summary,
    pooled_branches, positional_encoding, predict, predict_batch, split_input,
)

__all__ = [
    'TwinModelConfig', 'SplitStrategy', 'FusionKind', 'CONFIG_SUFFIX', 'config_path_for',
    'save_model_config', 'load_model_config',
    'BRANCHES', 'TwinModelParams', 'BranchParams', 'EncoderBlockParams', 'init_parameters',
    'expected_shapes', 'check_parameters',
    'positional_encoding', 'split_input', 'embed', 'encoder_block', 'encode_branch',
    'pooled_branches', 'forward', 'forward_batch', 'predict', 'predict_batch',
    'gate_summary', 'effective_heads', 'save_checkpoint', 'load_checkpoint',
]
