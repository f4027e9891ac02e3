"""Gradient-descent optimizers over immutable ParameterSets."""

from abc import ABC, abstractmethod
from typing import Mapping

import numpy as np

from numeric.errors import ConfigurationError, ContractError
from numeric.parameters import ParameterSet
from numeric.tensor import Tensor
from trainer.config import OptimizerKind, TrainConfig


class BaseOptimizer(ABC):
    """
    Abstract base class for optimizers.

    ``step`` never modifies its input; it returns a new ParameterSet with
    every parameter updated from its gradient.

    Args:
        learning_rate: Step size, >= 0.
    """

    def __init__(self, learning_rate: float):
        if learning_rate < 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {learning_rate}")
        self.learning_rate = learning_rate
        self.steps = 0

    def step(self, params: ParameterSet, grads: Mapping[str, Tensor]) -> ParameterSet:
        missing = sorted(set(params) - set(grads))
        if missing:
            raise ContractError(f"no gradient for parameters: {missing[:5]}")
        self.steps += 1
        return params.replace({
            name: self._update(name, params[name].data, grads[name].data) for name in params
        })

    @abstractmethod
    def _update(self, name: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """New value of one parameter."""
        pass


class SGD(BaseOptimizer):
    """Plain gradient descent: w <- w - lr * g."""

    def _update(self, name: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return value - self.learning_rate * grad


class Adam(BaseOptimizer):
    """Adam with bias-corrected first and second moment estimates."""

    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def _update(self, name: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        m = self.beta1 * self._m.get(name, np.zeros_like(grad)) + (1.0 - self.beta1) * grad
        v = self.beta2 * self._v.get(name, np.zeros_like(grad)) + (1.0 - self.beta2) * grad * grad
        self._m[name], self._v[name] = m, v
        m_hat = m / (1.0 - self.beta1 ** self.steps)
        v_hat = v / (1.0 - self.beta2 ** self.steps)
        return value - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(config: TrainConfig) -> BaseOptimizer:
    if config.optimizer is OptimizerKind.SGD:
        return SGD(config.learning_rate)
    elif config.optimizer is OptimizerKind.ADAM:
        return Adam(config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    raise ConfigurationError(f"unknown optimizer {config.optimizer!r}")
