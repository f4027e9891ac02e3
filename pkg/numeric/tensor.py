"""Immutable 64-bit tensor with reverse-mode tape recording."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from numeric.errors import DimensionError, NonFiniteError

# Maps the upstream gradient to one gradient (or None) per parent.
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def check_finite(array: np.ndarray, op: str) -> np.ndarray:
    """Raise NonFiniteError if ``array`` holds NaN or Inf, else return it."""
    if not np.isfinite(array).all():
        raise NonFiniteError(f"{op} produced non-finite values")
    return array


class Tensor:
    """
    Dense real-valued n-dimensional array with optional gradient participation.

    Values are stored as a read-only float64 ndarray in row-major order, so a
    Tensor never changes after construction. Tensors produced by operations on
    grad-enabled inputs remember their parents and a backward function; the
    graph is walked by ``numeric.gradients.backward``.

    Args:
        data: Anything ``numpy.array`` accepts.
        requires_grad: Whether gradients should flow to this tensor.
    """

    __slots__ = ('_data', '_requires_grad', '_parents', '_backward', '_op')

    def __init__(self, data, requires_grad: bool = False):
        array = np.array(data, dtype=np.float64)
        self._init(array, requires_grad, (), None, 'leaf')

    def _init(self, array: np.ndarray, requires_grad: bool, parents: tuple, backward: Optional[BackwardFn], op: str):
        if any(extent <= 0 for extent in array.shape):
            raise DimensionError(f"tensor extents must be positive, got shape {array.shape}")
        check_finite(array, op)
        array.setflags(write=False)
        self._data = array
        self._requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self._op = op

    @classmethod
    def from_op(cls, array: np.ndarray, parents: Sequence['Tensor'], backward: BackwardFn, op: str) -> 'Tensor':
        """Create the result of an operation, recording it on the tape if any parent needs gradients."""
        out = cls.__new__(cls)
        array = np.asarray(array, dtype=np.float64)
        if not array.flags.owndata or not array.flags.writeable:
            array = array.copy()
        requires_grad = any(p.requires_grad for p in parents)
        if requires_grad:
            out._init(array, True, tuple(parents), backward, op)
        else:
            out._init(array, False, (), None, op)
        return out

    # --- Introspection ---

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the values."""
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def requires_grad(self) -> bool:
        return self._requires_grad

    @property
    def parents(self) -> tuple['Tensor', ...]:
        return self._parents

    @property
    def backward_fn(self) -> Optional[BackwardFn]:
        return self._backward

    @property
    def op(self) -> str:
        return self._op

    def numpy(self) -> np.ndarray:
        """Writable copy of the values."""
        return self._data.copy()

    def item(self) -> float:
        if self._data.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self._data.reshape(()))

    def detach(self) -> 'Tensor':
        """Same values, cut from the graph."""
        return Tensor(self._data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op!r}, requires_grad={self._requires_grad})"

    # --- Operators (implemented in numeric.ops) ---

    def __add__(self, other):
        from numeric import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from numeric import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from numeric import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from numeric import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from numeric import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from numeric import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from numeric import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from numeric import ops
        return ops.div(other, self)

    def __neg__(self):
        from numeric import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from numeric import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from numeric import ops
        return ops.index(self, index)

    @property
    def T(self) -> 'Tensor':
        """Swap the last two axes."""
        from numeric import ops
        return ops.transpose(self)

    def sum(self, axis=None, keepdims: bool = False) -> 'Tensor':
        from numeric import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> 'Tensor':
        from numeric import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> 'Tensor':
        from numeric import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)
