"""Dense float64 tensors with reverse-mode differentiation."""

from numeric.errors import (
    ConfigurationError, ContractError, DeterminismError, DimensionError, GDLError,
    LabelIndexError, NonFiniteError, ParseError, TrainingDivergedError,
)
from numeric.tensor import Tensor
from numeric.ops import (
    add, concat, cross_entropy, div, layer_norm, matmul, mean, mul, relu,
    row_l2_norms, sigmoid, softmax_rows, sub, transpose,
)
from numeric.parameters import ParameterSet, load_parameters, save_parameters
from numeric.gradients import GradReport, backward, finite_diff_check

__all__ = [
    'Tensor', 'ParameterSet', 'GradReport',
    'add', 'sub', 'mul', 'div', 'matmul', 'transpose', 'mean', 'concat', 'relu',
    'softmax_rows', 'sigmoid', 'row_l2_norms', 'layer_norm', 'cross_entropy',
    'backward', 'finite_diff_check', 'save_parameters', 'load_parameters',
    'GDLError', 'DimensionError', 'ContractError', 'ConfigurationError', 'ParseError',
    'LabelIndexError', 'NonFiniteError', 'DeterminismError', 'TrainingDivergedError',
]
