"""Reverse-mode gradients and the finite-difference oracle."""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from numeric.errors import ContractError, DeterminismError
from numeric.parameters import ParameterSet
from numeric.tensor import Tensor, check_finite

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
RELATIVE_ERROR_FLOOR = 1e-8


def _topological_order(root: Tensor) -> list[Tensor]:
    """Grad-enabled nodes reachable from ``root``, parents before children."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, params: ParameterSet) -> dict[str, Tensor]:
    """
    Gradient of a scalar loss with respect to every parameter.

    Gradients from several uses of the same tensor are summed. Parameters
    that the loss does not depend on get zeros of matching shape.

    Args:
        loss: Single-element Tensor built from ``params`` by tracked operations.
        params: The parameters to differentiate against.

    Returns:
        Mapping from parameter name to a gradient Tensor (not grad-enabled).

    Raises:
        ContractError: If ``loss`` has more than one element.
    """
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

    grads: dict[int, np.ndarray] = {}
    if loss.requires_grad:
        grads[id(loss)] = np.ones(loss.shape)
        for node in reversed(_topological_order(loss)):
            if node.backward_fn is None:
                continue
            upstream = grads.pop(id(node), None)
            if upstream is None:
                continue
            for parent, grad in zip(node.parents, node.backward_fn(upstream)):
                if grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + grad if key in grads else np.array(grad, dtype=np.float64)

    result = {}
    for name, tensor in params.items():
        grad = grads.get(id(tensor))
        if grad is None:
            grad = np.zeros(tensor.shape)
        result[name] = Tensor(check_finite(grad.reshape(tensor.shape), f'gradient of {name}'))
    return result


@dataclass
class GradReport:
    """Outcome of comparing analytic gradients with central differences.

    Attributes:
        per_parameter: Maximum relative error for each parameter.
        max_relative_error: Maximum over all parameters.
        tolerance: Threshold the check was run with.
        passed: ``max_relative_error < tolerance``.
    """
    per_parameter: dict[str, float] = field(default_factory=dict)
    max_relative_error: float = 0.0
    tolerance: float = DEFAULT_TOLERANCE
    passed: bool = True

    @property
    def worst_parameter(self):
        if not self.per_parameter:
            return None
        return max(self.per_parameter, key=self.per_parameter.get)

    def to_dict(self) -> dict:
        return {
            'per_parameter': dict(self.per_parameter),
            'max_relative_error': self.max_relative_error,
            'tolerance': self.tolerance,
            'passed': self.passed,
        }


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - b| / max(|a|, |b|, 1e-8), elementwise."""
    denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), RELATIVE_ERROR_FLOOR)
    return np.abs(analytic - numeric) / denominator


def finite_diff_check(
    f: Callable[[ParameterSet], Tensor],
    params: ParameterSet,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> GradReport:
    """
    Check ``backward`` against central finite differences, one coordinate at a time.

    Args:
        f: Deterministic function from parameters to a scalar Tensor.
        params: Point at which gradients are compared.
        step: Perturbation size for (f(p + step*e_i) - f(p - step*e_i)) / (2*step).
        tolerance: A check passes when every relative error is below this.

    Returns:
        GradReport with per-parameter maxima.

    Raises:
        ContractError: If ``step`` is not positive.
        DeterminismError: If two evaluations of ``f`` at ``params`` differ.
    """
    if step <= 0:
        raise ContractError(f"step must be positive, got {step}")
    loss = f(params)
    repeat = f(params)
    if loss.item() != repeat.item():
        raise DeterminismError(f"f is not deterministic: {loss.item()!r} != {repeat.item()!r}")
    analytic = backward(loss, params)

    per_parameter = {}
    for name, tensor in params.items():
        base = tensor.numpy()
        flat = base.reshape(-1)
        numeric = np.empty(flat.size)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            plus = f(params.replace({name: base})).item()
            flat[i] = original - step
            minus = f(params.replace({name: base})).item()
            flat[i] = original
            numeric[i] = (plus - minus) / (2.0 * step)
        errors = relative_error(analytic[name].data.reshape(-1), numeric)
        per_parameter[name] = float(errors.max())
        logger.debug("gradcheck %s: max relative error %.3e", name, per_parameter[name])

    worst = max(per_parameter.values(), default=0.0)
    return GradReport(per_parameter=per_parameter, max_relative_error=worst,
                      tolerance=tolerance, passed=worst < tolerance)
