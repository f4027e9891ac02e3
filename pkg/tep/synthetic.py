"""Desk-scale synthetic stand-ins for TEP fault archetypes."""

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np

from numeric.errors import ConfigurationError
from tep.runs import RawRun
from tep.standardize import fit_standardizer
from tep.windows import WindowedDataset, build_dataset

logger = logging.getLogger(__name__)


class Archetype(Enum):
    """Signal added to a class's feature subset once the fault is active."""
    NORMAL = 'normal'
    STEP = 'step'                # constant shift
    DRIFT = 'drift'              # linear ramp, `magnitude` per window length
    OSCILLATION = 'oscillation'  # sinusoid of amplitude `magnitude`
    OVERLAP = 'overlap'          # small shift below the noise level on a shared subset


@dataclass(frozen=True)
class ClassArchetype:
    kind: Archetype
    magnitude: float = 0.0

    def to_dict(self) -> dict:
        return {'kind': self.kind.value, 'magnitude': self.magnitude}

    @classmethod
    def from_dict(cls, data: dict) -> 'ClassArchetype':
        unknown = sorted(set(data) - {'kind', 'magnitude'})
        if unknown:
            raise ConfigurationError(f"unknown archetype keys: {', '.join(unknown)}")
        try:
            kind = Archetype(data['kind'])
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"invalid archetype kind {data.get('kind')!r}") from exc
        return cls(kind=kind, magnitude=float(data.get('magnitude', 0.0)))


@dataclass(frozen=True)
class SyntheticSpec:
    """
    Recipe for a synthetic dataset. Class ``i`` follows ``archetypes[i]``.

    Training runs carry their class from sample 0; test runs of faulty
    classes switch on at ``test_onset``, so class 0 must be NORMAL whenever
    test_onset > 0.
    """
    archetypes: tuple[ClassArchetype, ...]
    runs_per_class: int = 12
    n_samples: int = 100
    n_features: int = 8
    noise_std: float = 1.0
    seed: int = 0
    window_len: int = 20
    stride: int = 5
    test_runs_per_class: int = 4
    test_onset: int = 40
    features_per_class: int = 2
    period: float = 10.0

    def __post_init__(self):
        archetypes = tuple(a if isinstance(a, ClassArchetype) else ClassArchetype.from_dict(a)
                           for a in self.archetypes)
        object.__setattr__(self, 'archetypes', archetypes)
        if len(archetypes) < 2:
            raise ConfigurationError(f"a synthetic dataset needs at least 2 classes, got {len(archetypes)}")
        for name in ('runs_per_class', 'n_samples', 'n_features', 'window_len', 'stride',
                     'test_runs_per_class', 'features_per_class'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be non-negative, got {self.seed}")
        if not self.noise_std > 0 or not self.period > 0:
            raise ConfigurationError("noise_std and period must be positive")
        if self.window_len > self.n_samples:
            raise ConfigurationError(f"window_len {self.window_len} exceeds n_samples {self.n_samples}")
        if self.features_per_class > self.n_features:
            raise ConfigurationError(f"features_per_class {self.features_per_class} exceeds n_features")
        if not 0 <= self.test_onset < self.n_samples:
            raise ConfigurationError(f"test_onset must be in [0, {self.n_samples}), got {self.test_onset}")
        for i, archetype in enumerate(archetypes):
            if archetype.kind is Archetype.NORMAL and i != 0:
                raise ConfigurationError(f"only class 0 may be normal, class {i} is")
            if archetype.kind is Archetype.OVERLAP and not abs(archetype.magnitude) < self.noise_std:
                raise ConfigurationError(f"overlap class {i} needs |magnitude| < noise_std, "
                                         f"got {archetype.magnitude}")
        if self.test_onset > 0 and archetypes[0].kind is not Archetype.NORMAL:
            raise ConfigurationError("test runs with an onset need class 0 to be normal")

    @property
    def n_classes(self) -> int:
        return len(self.archetypes)

    def class_names(self) -> dict[int, str]:
        return {
            i: 'Normal' if a.kind is Archetype.NORMAL else f'{a.kind.value.capitalize()} {i}'
            for i, a in enumerate(self.archetypes)
        }

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data['archetypes'] = [a.to_dict() for a in self.archetypes]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'SyntheticSpec':
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown synthetic spec keys: {', '.join(unknown)}")
        if 'archetypes' not in data:
            raise ConfigurationError("synthetic spec needs an 'archetypes' list")
        values = dict(data)
        values['archetypes'] = tuple(ClassArchetype.from_dict(a) for a in data['archetypes'])
        return cls(**values)


class SyntheticPreset(Enum):
    """Ready-made synthetic recipes."""
    FOUR_CLASS = 'four_class'   # Normal, Step, Drift, Oscillation at 3x noise
    OVERLAP = 'overlap'         # FOUR_CLASS plus three overlapping low-SNR classes


def synthetic_preset(preset: SyntheticPreset, seed: int = 0) -> SyntheticSpec:
    """Build the spec for a preset recipe."""
    separable = (
        ClassArchetype(Archetype.NORMAL),
        ClassArchetype(Archetype.STEP, 3.0),
        ClassArchetype(Archetype.DRIFT, 3.0),
        ClassArchetype(Archetype.OSCILLATION, 3.0),
    )
    if preset == SyntheticPreset.FOUR_CLASS:
        return SyntheticSpec(archetypes=separable, seed=seed)
    elif preset == SyntheticPreset.OVERLAP:
        overlap = tuple(ClassArchetype(Archetype.OVERLAP, m) for m in (0.3, 0.4, 0.5))
        return SyntheticSpec(archetypes=separable + overlap, seed=seed)
    raise ConfigurationError(f"unknown synthetic preset {preset!r}")


def _feature_subsets(spec: SyntheticSpec, rng: np.random.Generator) -> list[np.ndarray]:
    """Affected features per class; every overlap class gets the same subset."""
    shared = rng.choice(spec.n_features, spec.features_per_class, replace=False)
    subsets = []
    for archetype in spec.archetypes:
        if archetype.kind is Archetype.OVERLAP:
            subsets.append(shared)
        else:
            subsets.append(rng.choice(spec.n_features, spec.features_per_class, replace=False))
    return subsets


def fault_signal(archetype: ClassArchetype, n_samples: int, onset: int, window_len: int,
                 period: float) -> np.ndarray:
    """Length-T signal that is zero before ``onset``."""
    t = np.arange(n_samples, dtype=np.float64)
    elapsed = t - onset
    active = elapsed >= 0
    if archetype.kind is Archetype.NORMAL:
        signal = np.zeros(n_samples)
    elif archetype.kind in (Archetype.STEP, Archetype.OVERLAP):
        signal = np.full(n_samples, archetype.magnitude)
    elif archetype.kind is Archetype.DRIFT:
        signal = archetype.magnitude * elapsed / window_len
    else:
        signal = archetype.magnitude * np.sin(2.0 * math.pi * elapsed / period)
    return np.where(active, signal, 0.0)


def generate_runs(spec: SyntheticSpec) -> tuple[list[RawRun], list[RawRun]]:
    """Raw (train, test) runs; every random draw comes from one seeded generator."""
    rng = np.random.default_rng(spec.seed)
    subsets = _feature_subsets(spec, rng)
    parts = []
    for split, n_runs in (('train', spec.runs_per_class), ('test', spec.test_runs_per_class)):
        runs = []
        for code, archetype in enumerate(spec.archetypes):
            onset = spec.test_onset if split == 'test' and archetype.kind is not Archetype.NORMAL else 0
            signal = fault_signal(archetype, spec.n_samples, onset, spec.window_len, spec.period)
            for r in range(n_runs):
                samples = rng.normal(0.0, spec.noise_std, size=(spec.n_samples, spec.n_features))
                samples[:, subsets[code]] += signal[:, None]
                runs.append(RawRun(samples, code, onset, f'{split}_c{code:02d}_r{r:03d}'))
        parts.append(runs)
    return parts[0], parts[1]


def synthesize(spec: SyntheticSpec) -> tuple[WindowedDataset, WindowedDataset]:
    """
    Generate (train, test) datasets for ``spec``.

    The standardizer is fitted on the training runs only and applied to
    both parts. Identical specs give identical datasets.
    """
    train_runs, test_runs = generate_runs(spec)
    standardizer = fit_standardizer(train_runs)
    codes = tuple(range(spec.n_classes))
    names = spec.class_names()
    train = build_dataset(train_runs, spec.window_len, spec.stride, codes, standardizer, class_names=names)
    test = build_dataset(test_runs, spec.window_len, spec.stride, codes, standardizer, class_names=names)
    logger.info("synthesized %d train and %d test windows over %d classes", len(train), len(test), spec.n_classes)
    return train, test


def load_synthetic_spec(path: Union[str, Path]) -> SyntheticSpec:
    with open(path, 'r') as f:
        return SyntheticSpec.from_dict(json.load(f))


def save_synthetic_spec(spec: SyntheticSpec, path: Union[str, Path]):
    with open(path, 'w') as f:
        json.dump(spec.to_dict(), f, indent=2)
