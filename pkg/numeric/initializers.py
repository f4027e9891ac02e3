"""Weight initialization helpers."""

import math

import numpy as np


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform in +/- sqrt(6 / (fan_in + fan_out)), shape (fan_in, fan_out)."""
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def zeros(*shape: int) -> np.ndarray:
    """Zero-filled float64 array; used for biases and gate logits."""
    return np.zeros(shape)


def ones(*shape: int) -> np.ndarray:
    """One-filled float64 array; used for layer-norm gains."""
    return np.ones(shape)


def identity(n: int) -> np.ndarray:
    """(n, n) identity; the starting point of a bilinear similarity form."""
    return np.eye(n)
