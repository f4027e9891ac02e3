"""Windowed datasets: windowing, labeling, class filtering, splitting and caching."""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from numeric.errors import ConfigurationError, ContractError, DimensionError
from tep.constants import NORMAL_CLASS, class_name
from tep.runs import RawRun, load_run, write_run
from tep.standardize import Standardizer, apply

logger = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
MANIFEST_FILE = 'manifest.csv'
METADATA_FILE = 'dataset.json'
RUNS_DIR = 'runs'


class Labeling(Enum):
    """How a window gets its label."""
    START_INDEX = 'start_index'  # faulty iff the window starts at or after the onset
    RUN_CLASS = 'run_class'      # every window carries the run's class


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """
    Standardized windows with dense integer labels.

    Labels index ``class_codes``: label ``i`` is original class
    ``class_codes[i]`` (the TEP fault number for corpus data) and is shown as
    ``class_names[i]``. Each window remembers the run and start index it
    was cut from so the dataset can be cached and rebuilt exactly.

    Attributes:
        windows: (N, W, n_features) read-only array.
        labels: (N,) int64 labels in [0, n_classes).
        class_names: Label -> display name for every label in the roster.
        class_codes: Original class code per label.
        run_names: Source run of each window.
        starts: Start sample of each window within its run.
        runs: Raw (unstandardized) source runs by name.
        standardizer: Transform applied to the raw runs, if any.
    """
    windows: np.ndarray
    labels: np.ndarray
    class_names: Mapping[int, str]
    class_codes: tuple[int, ...]
    run_names: tuple[str, ...]
    starts: np.ndarray
    runs: Mapping[str, RawRun] = field(default_factory=dict)
    standardizer: Optional[Standardizer] = None

    def __post_init__(self):
        windows = np.array(self.windows, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        starts = np.array(self.starts, dtype=np.int64).reshape(-1)
        if windows.ndim != 3:
            raise DimensionError(f"windows must have shape (N, W, n_features), got {windows.shape}")
        n = windows.shape[0]
        if labels.shape[0] != n or starts.shape[0] != n or len(self.run_names) != n:
            raise DimensionError(f"{n} windows but {labels.shape[0]} labels, {starts.shape[0]} starts "
                                 f"and {len(self.run_names)} run names")
        codes = tuple(int(c) for c in self.class_codes)
        if not codes or len(set(codes)) != len(codes):
            raise ContractError(f"class codes must be non-empty and unique, got {codes}")
        names = {int(k): str(v) for k, v in self.class_names.items()}
        if sorted(names) != list(range(len(codes))):
            raise ContractError(f"class_names must name labels 0..{len(codes) - 1}, got {sorted(names)}")
        if n and (labels.min() < 0 or labels.max() >= len(codes)):
            raise ContractError(f"labels must lie in [0, {len(codes)})")
        for array in (windows, labels, starts):
            array.setflags(write=False)
        object.__setattr__(self, 'windows', windows)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'starts', starts)
        object.__setattr__(self, 'class_codes', codes)
        object.__setattr__(self, 'class_names', names)
        object.__setattr__(self, 'run_names', tuple(self.run_names))
        object.__setattr__(self, 'runs', dict(self.runs))

    def __len__(self) -> int:
        return self.windows.shape[0]

    @property
    def window_len(self) -> int:
        return self.windows.shape[1]

    @property
    def n_features(self) -> int:
        return self.windows.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_codes)

    def class_counts(self) -> np.ndarray:
        """Windows per label, length n_classes."""
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices: Sequence[int]) -> 'WindowedDataset':
        indices = np.asarray(indices, dtype=np.int64)
        run_names = tuple(self.run_names[i] for i in indices)
        return dataclasses.replace(
            self,
            windows=self.windows[indices],
            labels=self.labels[indices],
            run_names=run_names,
            starts=self.starts[indices],
            runs={name: self.runs[name] for name in dict.fromkeys(run_names) if name in self.runs},
        )

    @classmethod
    def concat(cls, parts: Sequence['WindowedDataset']) -> 'WindowedDataset':
        """Join datasets that share window shape, class roster and standardizer."""
        if not parts:
            raise ContractError("concat needs at least one dataset")
        first = parts[0]
        runs = {}
        for part in parts:
            if part.windows.shape[1:] != first.windows.shape[1:]:
                raise DimensionError(f"window shapes differ: {part.windows.shape[1:]} vs {first.windows.shape[1:]}")
            if part.class_codes != first.class_codes or part.class_names != first.class_names:
                raise ContractError("datasets with different class rosters cannot be joined")
            if part.standardizer is not first.standardizer:
                raise ContractError("datasets with different standardizers cannot be joined")
            for name, run in part.runs.items():
                if runs.setdefault(name, run) is not run:
                    raise ContractError(f"two different runs are named {name!r}")
        return cls(
            windows=np.concatenate([p.windows for p in parts], axis=0),
            labels=np.concatenate([p.labels for p in parts]),
            class_names=first.class_names,
            class_codes=first.class_codes,
            run_names=tuple(name for p in parts for name in p.run_names),
            starts=np.concatenate([p.starts for p in parts]),
            runs=runs,
            standardizer=first.standardizer,
        )


def _roster_names(codes: Sequence[int], names: Optional[Mapping[int, str]]) -> dict[int, str]:
    """Label -> name for a roster of class codes."""
    names = names or {}
    return {label: names[code] if code in names else class_name(code) for label, code in enumerate(codes)}


def make_windows(
    run: RawRun,
    window_len: int,
    stride: int,
    labeling: Labeling = Labeling.START_INDEX,
    class_codes: Optional[Sequence[int]] = None,
    class_names: Optional[Mapping[int, str]] = None,
) -> WindowedDataset:
    """
    Cut ``run`` into windows starting at 0, stride, 2*stride, ...

    Under START_INDEX labeling a window carries the run's class iff its
    start index is at least ``run.onset_index``; earlier windows are normal.
    The default roster is ``0..run.fault_class`` so labels equal class codes.

    Args:
        run: Source run, already standardized if standardization is wanted.
        window_len: Samples per window (W).
        stride: Distance between consecutive window starts.
        labeling: Labeling rule.
        class_codes: Class roster; labels are indices into it.
        class_names: Optional class code -> display name.

    Returns:
        A dataset with floor((T - W) / stride) + 1 windows.

    Raises:
        ContractError: If W > T, W < 1 or stride < 1, or the run's class is
            not in the roster.
    """
    if window_len < 1 or stride < 1:
        raise ContractError(f"window length and stride must be >= 1, got {window_len} and {stride}")
    if window_len > run.n_samples:
        raise ContractError(f"window length {window_len} exceeds run {run.name!r} length {run.n_samples}")
    codes = tuple(range(run.fault_class + 1)) if class_codes is None else tuple(class_codes)
    label_of = {code: label for label, code in enumerate(codes)}
    if run.fault_class not in label_of:
        raise ContractError(f"class {run.fault_class} of run {run.name!r} is not in the roster {codes}")

    starts = np.arange(0, run.n_samples - window_len + 1, stride)
    windows = np.stack([run.samples[s:s + window_len] for s in starts])
    fault_label = label_of[run.fault_class]
    if labeling is Labeling.RUN_CLASS or run.fault_class == NORMAL_CLASS:
        labels = np.full(starts.shape, fault_label)
    else:
        if NORMAL_CLASS not in label_of and np.any(starts < run.onset_index):
            raise ContractError(f"run {run.name!r} has pre-onset windows but the roster has no normal class")
        labels = np.where(starts >= run.onset_index, fault_label, label_of.get(NORMAL_CLASS, 0))
    return WindowedDataset(
        windows=windows,
        labels=labels,
        class_names=_roster_names(codes, class_names),
        class_codes=codes,
        run_names=(run.name,) * len(starts),
        starts=starts,
        runs={run.name: run},
    )


def build_dataset(
    runs: Sequence[RawRun],
    window_len: int,
    stride: int,
    class_codes: Sequence[int],
    standardizer: Optional[Standardizer] = None,
    labeling: Labeling = Labeling.START_INDEX,
    class_names: Optional[Mapping[int, str]] = None,
) -> WindowedDataset:
    """Standardize every run, window it, and join the pieces.

    The dataset keeps the raw runs and the standardizer so that
    ``save_dataset`` can store sources rather than windows.
    """
    if not runs:
        raise ContractError("build_dataset needs at least one run")
    names = [run.name for run in runs]
    if len(set(names)) != len(names):
        raise ContractError("run names must be unique within a dataset")
    parts = []
    for run in runs:
        source = run if standardizer is None else apply(standardizer, run)
        parts.append(make_windows(source, window_len, stride, labeling, class_codes, class_names))
    joined = WindowedDataset.concat(parts)
    return dataclasses.replace(joined, runs={run.name: run for run in runs}, standardizer=standardizer)


def exclude_classes(ds: WindowedDataset, classes: Iterable[int]) -> WindowedDataset:
    """
    Drop every window whose class code is in ``classes`` and renumber the rest.

    The remaining class codes keep their order and get dense labels
    0..C'-1; ``class_names`` and ``class_codes`` follow the new numbering.

    Raises:
        ContractError: If nothing would remain.
    """
    excluded = set(int(c) for c in classes)
    if not excluded:
        return ds
    unknown = excluded - set(ds.class_codes)
    if unknown:
        logger.warning("excluded classes %s are not in the roster %s", sorted(unknown), ds.class_codes)
    kept_labels = [label for label, code in enumerate(ds.class_codes) if code not in excluded]
    keep = np.isin(ds.labels, kept_labels)
    if not kept_labels or not np.any(keep):
        raise ContractError(f"excluding classes {sorted(excluded)} leaves an empty dataset")
    remap = np.full(ds.n_classes, -1, dtype=np.int64)
    remap[kept_labels] = np.arange(len(kept_labels))
    subset = ds.subset(np.flatnonzero(keep))
    return dataclasses.replace(
        subset,
        labels=remap[subset.labels],
        class_codes=tuple(ds.class_codes[label] for label in kept_labels),
        class_names={new: ds.class_names[old] for new, old in enumerate(kept_labels)},
    )


def train_val_split(ds: WindowedDataset, fraction: float, seed: int) -> tuple[WindowedDataset, WindowedDataset]:
    """
    Stratified split; ``fraction`` of each class goes to the first part.

    Per class the training count is round(fraction * n), clamped so both
    parts receive at least one window. Both parts keep the original window
    order.

    Raises:
        ContractError: If fraction is outside (0, 1) or a present class has fewer than 2 windows.
    """
    if not 0.0 < fraction < 1.0:
        raise ContractError(f"split fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for label in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == label)
        if members.size == 0:
            continue
        if members.size < 2:
            raise ContractError(f"class {ds.class_names[label]!r} has {members.size} window; a split needs 2")
        n_train = min(max(int(np.floor(fraction * members.size + 0.5)), 1), members.size - 1)
        shuffled = rng.permutation(members)
        train_idx.append(shuffled[:n_train])
        val_idx.append(shuffled[n_train:])
    return ds.subset(np.sort(np.concatenate(train_idx))), ds.subset(np.sort(np.concatenate(val_idx)))


# --- Dataset cache ---

def save_dataset(ds: WindowedDataset, directory: Union[str, Path]):
    """
    Store a dataset as its source runs plus a window manifest.

    Layout::

        directory/dataset.json    window length, roster, standardizer
        directory/manifest.csv    run, start, label per window
        directory/runs/<run>.csv  raw runs as written by write_run
    """
    directory = Path(directory)
    missing = sorted(set(ds.run_names) - set(ds.runs))
    if missing:
        raise ContractError(f"dataset does not carry its source runs: {missing[:3]}")
    (directory / RUNS_DIR).mkdir(parents=True, exist_ok=True)
    for name in dict.fromkeys(ds.run_names):
        write_run(ds.runs[name], directory / RUNS_DIR / f'{name}.csv')
    pd.DataFrame({'run': list(ds.run_names), 'start': ds.starts, 'label': ds.labels}).to_csv(
        directory / MANIFEST_FILE, index=False)
    metadata = {
        'format_version': DATASET_FORMAT_VERSION,
        'window_len': ds.window_len,
        'n_features': ds.n_features,
        'class_codes': list(ds.class_codes),
        'class_names': [ds.class_names[label] for label in range(ds.n_classes)],
        'standardizer': None if ds.standardizer is None else ds.standardizer.to_dict(),
    }
    with open(directory / METADATA_FILE, 'w') as f:
        json.dump(metadata, f, indent=2)
    logger.info("saved %d windows from %d runs to %s", len(ds), len(ds.runs), directory)


def load_dataset(directory: Union[str, Path]) -> WindowedDataset:
    """Rebuild a dataset written by ``save_dataset``; windows are bit-identical."""
    directory = Path(directory)
    with open(directory / METADATA_FILE, 'r') as f:
        metadata = json.load(f)
    expected = {'format_version', 'window_len', 'n_features', 'class_codes', 'class_names', 'standardizer'}
    if not isinstance(metadata, dict) or set(metadata) != expected:
        found = sorted(metadata) if isinstance(metadata, dict) else type(metadata).__name__
        raise ConfigurationError(f"{directory / METADATA_FILE}: expected keys {sorted(expected)}, got {found}")
    if metadata['format_version'] != DATASET_FORMAT_VERSION:
        raise ConfigurationError(f"unsupported dataset format version {metadata['format_version']}")
    try:
        window_len = int(metadata['window_len'])
        n_features = int(metadata['n_features'])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{directory / METADATA_FILE}: {exc}") from exc
    if not isinstance(metadata['standardizer'], (dict, type(None))):
        raise ConfigurationError(f"{directory / METADATA_FILE}: standardizer must be an object or null")
    standardizer = None if metadata['standardizer'] is None else Standardizer.from_dict(metadata['standardizer'])
    manifest = pd.read_csv(directory / MANIFEST_FILE, dtype={'run': str, 'start': np.int64, 'label': np.int64},
                           keep_default_na=False)

    raw_runs, sources = {}, {}
    for name in dict.fromkeys(manifest['run']):
        raw = load_run(directory / RUNS_DIR / f'{name}.csv', n_features=n_features, name=name)
        raw_runs[name] = raw
        sources[name] = raw.samples if standardizer is None else apply(standardizer, raw).samples
    run_names = tuple(manifest['run'])
    starts = manifest['start'].to_numpy()
    windows = np.stack([sources[name][s:s + window_len] for name, s in zip(run_names, starts)])
    return WindowedDataset(
        windows=windows,
        labels=manifest['label'].to_numpy(),
        class_names=dict(enumerate(metadata['class_names'])),
        class_codes=tuple(metadata['class_codes']),
        run_names=run_names,
        starts=starts,
        runs=raw_runs,
        standardizer=standardizer,
    )
