"""Differentiable tensor operations.

Every function takes Tensors (plain numbers and arrays are wrapped as
constants), returns a new Tensor, and records a backward function when any
input requires gradients. Row-wise operations act on the last axis and
matrix products follow ``numpy.matmul`` broadcasting, so a leading batch axis
is allowed everywhere; the 2-D case is the plain matrix case.
"""

import math
from typing import Optional, Sequence

import numpy as np
from scipy import special

from numeric.errors import ContractError, DimensionError, LabelIndexError
from numeric.tensor import Tensor, check_finite

DEFAULT_NORM_EPS = 1e-12
SIGMOID_LOW = np.finfo(np.float64).tiny
SIGMOID_HIGH = np.nextafter(1.0, 0.0)


def as_tensor(value) -> Tensor:
    """Wrap numbers and arrays as constant tensors; Tensors pass through."""
    return value if isinstance(value, Tensor) else Tensor(value)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes that broadcasting added or stretched to reach ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _swap_last(array: np.ndarray) -> np.ndarray:
    return np.swapaxes(array, -1, -2)


# --- Elementwise arithmetic ---

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), backward, 'add')


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), backward, 'sub')


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), backward, 'mul')


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = check_finite(a.data / b.data, 'div')

    def backward(g):
        return unbroadcast(g / b.data, a.shape), unbroadcast(-g * out / b.data, b.shape)

    return Tensor.from_op(out, (a, b), backward, 'div')


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor.from_op(-a.data, (a,), lambda g: (-g,), 'neg')


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0

    def backward(g):
        return (g * mask,)

    return Tensor.from_op(np.where(mask, a.data, 0.0), (a,), backward, 'relu')


# --- Structural ---

def matmul(a, b) -> Tensor:
    """
    Matrix product of the last two axes, broadcasting any leading axes.

    Args:
        a: Tensor of shape (..., m, k).
        b: Tensor of shape (..., k, n).

    Returns:
        Tensor of shape (..., m, n).

    Raises:
        DimensionError: If either operand has fewer than two axes or the inner dimensions differ.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        grad_a = unbroadcast(g @ _swap_last(b.data), a.shape) if a.requires_grad else None
        grad_b = unbroadcast(_swap_last(a.data) @ g, b.shape) if b.requires_grad else None
        return grad_a, grad_b

    return Tensor.from_op(np.matmul(a.data, b.data), (a, b), backward, 'matmul')


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim < 2:
        raise DimensionError(f"transpose needs at least 2 axes, got shape {a.shape}")
    return Tensor.from_op(_swap_last(a.data), (a,), lambda g: (_swap_last(g),), 'transpose')


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    return Tensor.from_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), 'reshape')


def index(a, key) -> Tensor:
    """Basic or advanced indexing; gradients scatter back into the source shape."""
    a = as_tensor(a)
    parts = key if isinstance(key, tuple) else (key,)
    basic = all(p is Ellipsis or p is None or isinstance(p, (int, np.integer, slice)) for p in parts)

    def backward(g):
        grad = np.zeros(a.shape)
        if basic:
            # Basic indexing never repeats an element.
            grad[key] += g
        else:
            np.add.at(grad, key, g)
        return (grad,)

    return Tensor.from_op(np.asarray(a.data[key]), (a,), backward, 'index')


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor.from_op(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward, 'concat')


def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001 - mirrors numpy naming
    a = as_tensor(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor.from_op(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), backward, 'sum')


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = math.prod(a.shape[ax] for ax in axes)
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# --- Numerically sensitive row-wise operations ---

def softmax_rows(x) -> Tensor:
    """
    Softmax over the last axis.

    ``scipy.special.softmax`` subtracts the row maximum before exponentiating,
    so rows like [1000, 1000] do not overflow.
    """
    x = as_tensor(x)
    out = special.softmax(x.data, axis=-1)

    def backward(g):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return Tensor.from_op(out, (x,), backward, 'softmax_rows')


def sigmoid(x) -> Tensor:
    """
    Elementwise logistic function 1 / (1 + e^-x).

    Outputs are clipped to the open interval (0, 1): a gate never closes or
    opens completely.
    """
    x = as_tensor(x)
    out = np.clip(special.expit(x.data), SIGMOID_LOW, SIGMOID_HIGH)

    def backward(g):
        return (g * out * (1.0 - out),)

    return Tensor.from_op(out, (x,), backward, 'sigmoid')


def row_l2_norms(x, eps: float = DEFAULT_NORM_EPS) -> Tensor:
    """
    Euclidean norm of every row, floored at ``eps``.

    Args:
        x: Tensor of shape (..., m, n).
        eps: Positive floor so that dividing by the result is always defined.

    Returns:
        Tensor of shape (..., m, 1).
    """
    if eps <= 0:
        raise ContractError(f"eps must be positive, got {eps}")
    x = as_tensor(x)
    norms = np.sqrt(np.sum(x.data * x.data, axis=-1, keepdims=True))
    above = norms > eps
    out = np.where(above, norms, eps)

    def backward(g):
        # Zero gradient on the floor.
        scale = np.divide(g, norms, out=np.zeros_like(norms), where=above)
        return (x.data * scale,)

    return Tensor.from_op(out, (x,), backward, 'row_l2_norms')


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """
    Normalize each row to zero mean and unit variance, then scale and shift.

    Variance uses denominator n (population variance).

    Args:
        x: Tensor of shape (..., m, n).
        gain: Tensor of shape (n,).
        bias: Tensor of shape (n,).
        eps: Added to the variance before the square root.
    """
    if eps <= 0:
        raise ContractError(f"eps must be positive, got {eps}")
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    n = x.shape[-1]
    if gain.shape != (n,) or bias.shape != (n,):
        raise DimensionError(f"layer_norm gain/bias must have shape ({n},), got {gain.shape} and {bias.shape}")
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normalized = centered * inv_std

    def backward(g):
        grad_norm = g * gain.data
        grad_x = inv_std / n * (
            n * grad_norm
            - grad_norm.sum(axis=-1, keepdims=True)
            - normalized * (grad_norm * normalized).sum(axis=-1, keepdims=True)
        )
        grad_gain = unbroadcast(g * normalized, gain.shape)
        grad_bias = unbroadcast(g, bias.shape)
        return grad_x, grad_gain, grad_bias

    return Tensor.from_op(normalized * gain.data + bias.data, (x, gain, bias), backward, 'layer_norm')


def cross_entropy(logits, labels, class_weights: Optional[np.ndarray] = None) -> Tensor:
    """
    Mean negative log-likelihood of ``labels`` under ``softmax(logits)``.

    Computed in log space via log-softmax. With ``class_weights`` the mean is
    weighted: sum(w[y_b] * loss_b) / sum(w[y_b]).

    Args:
        logits: Tensor of shape (B, C).
        labels: Integer array of length B with values in [0, C).
        class_weights: Optional non-negative array of length C.

    Returns:
        Scalar Tensor.

    Raises:
        LabelIndexError: Naming the first batch position with an out-of-range label.
    """
    logits = as_tensor(logits)
    if logits.ndim != 2:
        raise DimensionError(f"cross_entropy expects logits of shape (B, C), got {logits.shape}")
    batch, n_classes = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise DimensionError(f"expected {batch} labels, got array of shape {labels.shape}")
    bad = np.flatnonzero((labels < 0) | (labels >= n_classes))
    if bad.size:
        position = int(bad[0])
        raise LabelIndexError(f"label {labels[position]} at batch position {position} is outside [0, {n_classes})")
    labels = labels.astype(np.int64)

    if class_weights is None:
        weights = np.ones(batch)
    else:
        class_weights = np.asarray(class_weights, dtype=np.float64)
        if class_weights.shape != (n_classes,):
            raise DimensionError(f"class_weights must have shape ({n_classes},), got {class_weights.shape}")
        weights = class_weights[labels]
    total_weight = weights.sum()
    if total_weight <= 0:
        raise ContractError("cross_entropy weights sum to zero for this batch")
    weights = weights / total_weight

    log_probs = special.log_softmax(logits.data, axis=-1)
    rows = np.arange(batch)
    loss = -np.sum(weights * log_probs[rows, labels])

    def backward(g):
        grad = np.exp(log_probs)
        grad[rows, labels] -= 1.0
        return (grad * (weights * g)[:, None],)

    return Tensor.from_op(np.asarray(loss), (logits,), backward, 'cross_entropy')
