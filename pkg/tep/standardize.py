"""Per-feature standardization fitted on training runs."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from numeric.errors import ConfigurationError, ContractError, DimensionError
from tep.constants import STD_FLOOR
from tep.runs import RawRun


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Feature means and population standard deviations (floored at 1e-8)."""
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        stds = np.array(self.stds, dtype=np.float64)
        if means.ndim != 1 or means.shape != stds.shape:
            raise DimensionError(f"means and stds must be matching vectors, got {means.shape} and {stds.shape}")
        if np.any(stds < STD_FLOOR):
            raise ContractError(f"standard deviations must be >= {STD_FLOOR}")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'stds', stds)

    @property
    def n_features(self) -> int:
        return self.means.shape[0]

    def transform(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape[-1] != self.n_features:
            raise DimensionError(f"standardizer fitted on {self.n_features} features, got {samples.shape[-1]}")
        return (samples - self.means) / self.stds

    def to_dict(self) -> dict:
        # Python floats repr round-trip exactly through JSON.
        return {'means': self.means.tolist(), 'stds': self.stds.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> 'Standardizer':
        """
        Raises:
            ConfigurationError: If ``means`` or ``stds`` is missing or not a numeric vector.
        """
        try:
            means = np.asarray(data['means'], dtype=np.float64)
            stds = np.asarray(data['stds'], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed standardizer: {exc!r}") from exc
        return cls(means=means, stds=stds)


def fit_standardizer(runs: Sequence[RawRun]) -> Standardizer:
    """
    Pool every sample of ``runs`` and fit per-feature mean and std.

    Raises:
        ContractError: With no runs or fewer than 2 pooled samples.
    """
    if not runs:
        raise ContractError("fit_standardizer needs at least one run")
    pooled = np.concatenate([run.samples for run in runs], axis=0)
    if pooled.shape[0] < 2:
        raise ContractError(f"fit_standardizer needs at least 2 samples, got {pooled.shape[0]}")
    return Standardizer(means=pooled.mean(axis=0), stds=np.maximum(pooled.std(axis=0), STD_FLOOR))


def apply(standardizer: Standardizer, run: RawRun) -> RawRun:
    """The run with x -> (x - mean) / std applied to every sample."""
    return run.with_samples(standardizer.transform(run.samples))
