"""Named parameter collections and their binary file format."""

import logging
import struct
from collections.abc import Mapping
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from numeric.errors import ContractError, DimensionError
from numeric.tensor import Tensor

logger = logging.getLogger(__name__)

# File layout, documented in docs/formats.md.
MAGIC = b'GDLP'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<4sII')      # magic, version, parameter count
_NAME_LENGTH = struct.Struct('<H')
_NDIM = struct.Struct('<B')
_EXTENT = struct.Struct('<I')
_VALUE_DTYPE = np.dtype('<f8')


class ParameterSet(Mapping):
    """
    Named map from parameter path to grad-enabled Tensor.

    Iteration is sorted by name. A ParameterSet is never modified in place;
    ``replace`` returns a new set sharing the untouched tensors.

    Args:
        tensors: Mapping from name to Tensor or array-like.
    """

    def __init__(self, tensors: Mapping[str, Union[Tensor, np.ndarray]]):
        entries = {}
        for name, value in tensors.items():
            if not isinstance(name, str) or not name:
                raise ContractError(f"parameter names must be non-empty strings, got {name!r}")
            if isinstance(value, Tensor) and value.requires_grad and not value.parents:
                entries[name] = value
            else:
                data = value.data if isinstance(value, Tensor) else value
                entries[name] = Tensor(data, requires_grad=True)
        self._tensors = dict(sorted(entries.items()))

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._tensors[name]
        except KeyError:
            raise KeyError(f"unknown parameter {name!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def __repr__(self):
        return f"ParameterSet({len(self)} tensors, {self.num_values} values)"

    @property
    def num_values(self) -> int:
        """Total number of scalar values across all tensors."""
        return sum(t.size for t in self._tensors.values())

    def replace(self, updates: Mapping[str, np.ndarray]) -> 'ParameterSet':
        """Return a new set with the named tensors' values swapped.

        Args:
            updates: Mapping from existing parameter name to new values of the same shape.

        Raises:
            ContractError: If a name is not in the set.
            DimensionError: If a new value changes a parameter's shape.
        """
        merged = dict(self._tensors)
        for name, values in updates.items():
            if name not in merged:
                raise ContractError(f"cannot replace unknown parameter {name!r}")
            values = np.asarray(values, dtype=np.float64)
            if values.shape != merged[name].shape:
                raise DimensionError(f"parameter {name!r} has shape {merged[name].shape}, "
                                     f"replacement has shape {values.shape}")
            merged[name] = Tensor(values, requires_grad=True)
        return ParameterSet(merged)

    def with_prefix(self, prefix: str) -> dict[str, Tensor]:
        """All tensors whose name starts with ``prefix + '.'``, keyed by the remainder."""
        start = prefix + '.'
        return {name[len(start):]: t for name, t in self._tensors.items() if name.startswith(start)}

    def norms(self) -> dict[str, float]:
        """L2 norm of each parameter."""
        return {name: float(np.linalg.norm(t.data)) for name, t in self._tensors.items()}

    def to_arrays(self) -> dict[str, np.ndarray]:
        """Writable copies of all values."""
        return {name: t.numpy() for name, t in self._tensors.items()}

    def equals(self, other: 'ParameterSet') -> bool:
        """Bitwise equality of names, shapes and values."""
        if list(self) != list(other):
            return False
        return all(np.array_equal(self[name].data, other[name].data) for name in self)


def parameters_to_bytes(params: ParameterSet) -> bytes:
    """Encode a ParameterSet in the versioned binary layout."""
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, len(params))]
    for name, tensor in params.items():
        encoded = name.encode('utf-8')
        chunks.append(_NAME_LENGTH.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_NDIM.pack(tensor.ndim))
        chunks.extend(_EXTENT.pack(extent) for extent in tensor.shape)
        chunks.append(tensor.data.astype(_VALUE_DTYPE).tobytes(order='C'))
    return b''.join(chunks)


def parameters_from_bytes(payload: bytes) -> ParameterSet:
    """Decode the binary layout written by ``parameters_to_bytes``.

    Raises:
        ContractError: On a bad magic tag, unsupported version, or truncated payload.
    """
    try:
        magic, version, count = _HEADER.unpack_from(payload, 0)
        if magic != MAGIC:
            raise ContractError(f"not a parameter file (magic {magic!r})")
        if version != FORMAT_VERSION:
            raise ContractError(f"unsupported parameter file version {version}")
        offset = _HEADER.size
        tensors = {}
        for _ in range(count):
            (name_length,) = _NAME_LENGTH.unpack_from(payload, offset)
            offset += _NAME_LENGTH.size
            name = payload[offset:offset + name_length].decode('utf-8')
            offset += name_length
            (ndim,) = _NDIM.unpack_from(payload, offset)
            offset += _NDIM.size
            shape = tuple(_EXTENT.unpack_from(payload, offset + i * _EXTENT.size)[0] for i in range(ndim))
            offset += ndim * _EXTENT.size
            count_values = int(np.prod(shape, dtype=np.int64))
            if offset + count_values * _VALUE_DTYPE.itemsize > len(payload):
                raise ContractError(f"parameter file truncated inside {name!r}")
            values = np.frombuffer(payload, dtype=_VALUE_DTYPE, count=count_values, offset=offset)
            offset += count_values * _VALUE_DTYPE.itemsize
            if name in tensors:
                raise ContractError(f"duplicate parameter {name!r} in file")
            tensors[name] = values.reshape(shape).astype(np.float64)
    except struct.error as exc:
        raise ContractError(f"parameter file truncated: {exc}") from exc
    if offset != len(payload):
        raise ContractError(f"{len(payload) - offset} trailing bytes after last parameter")
    return ParameterSet(tensors)


def save_parameters(params: ParameterSet, path: Union[str, Path]):
    """Write ``params`` to ``path`` in the binary layout."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(parameters_to_bytes(params))
    logger.debug("wrote %d parameters to %s", len(params), path)


def load_parameters(path: Union[str, Path]) -> ParameterSet:
    """Read a ParameterSet written by ``save_parameters``."""
    return parameters_from_bytes(Path(path).read_bytes())
