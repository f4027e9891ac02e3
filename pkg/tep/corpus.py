"""Ingest of a TEP corpus directory in the classic dXX.dat / dXX_te.dat layout."""

import logging
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from numeric.errors import ContractError
from tep.constants import (
    DEFAULT_CLASSES, DEFAULT_ONSET, DEFAULT_STRIDE, DEFAULT_WINDOW, N_FEATURES, NORMAL_CLASS,
    TEST_FILE_TEMPLATE, TRAIN_FILE_TEMPLATE,
)
from tep.runs import RawRun, load_run
from tep.standardize import fit_standardizer
from tep.synthetic import Archetype, ClassArchetype, fault_signal
from tep.windows import Labeling, WindowedDataset, build_dataset

logger = logging.getLogger(__name__)


def corpus_files(directory: Union[str, Path], fault_class: int) -> tuple[Path, Path]:
    directory = Path(directory)
    return (directory / TRAIN_FILE_TEMPLATE.format(fault_class),
            directory / TEST_FILE_TEMPLATE.format(fault_class))


def load_tep_corpus(
    directory: Union[str, Path],
    classes: Sequence[int] = DEFAULT_CLASSES,
    window_len: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
    onset: int = DEFAULT_ONSET,
    n_features: int = N_FEATURES,
    labeling: Labeling = Labeling.START_INDEX,
) -> tuple[WindowedDataset, WindowedDataset]:
    """
    Load training and test runs for ``classes`` and window them.

    Training runs carry their class from sample 0; faulty test runs switch
    on at ``onset``. The standardizer is fitted on the training runs only.

    Returns:
        (train, test) datasets whose labels index the sorted class roster.

    Raises:
        FileNotFoundError: If a run file is missing.
        ContractError: If the roster is empty or a test run is shorter than the onset.
    """
    codes = tuple(sorted(set(int(c) for c in classes)))
    if not codes:
        raise ContractError("load_tep_corpus needs at least one class")
    train_runs, test_runs = [], []
    for code in codes:
        train_path, test_path = corpus_files(directory, code)
        train_runs.append(load_run(train_path, code, 0, n_features, name=f'train_d{code:02d}'))
        test_run = load_run(test_path, code, 0, n_features, name=f'test_d{code:02d}')
        if code != NORMAL_CLASS:
            if onset > test_run.n_samples:
                raise ContractError(f"{test_path}: onset {onset} is past the end of a {test_run.n_samples}-sample run")
            test_run = RawRun(test_run.samples, code, onset, test_run.name)
        test_runs.append(test_run)
        logger.debug("loaded class %d: %d train / %d test samples", code, train_runs[-1].n_samples,
                     test_run.n_samples)

    standardizer = fit_standardizer(train_runs)
    train = build_dataset(train_runs, window_len, stride, codes, standardizer, labeling)
    test = build_dataset(test_runs, window_len, stride, codes, standardizer, labeling)
    logger.info("loaded TEP corpus from %s: %d classes, %d train / %d test windows",
                directory, len(codes), len(train), len(test))
    return train, test


def write_dat(samples: np.ndarray, path: Union[str, Path], transpose: bool = False):
    """Whitespace matrix in the classic run-file style."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, samples.T if transpose else samples, fmt='%15.8e')


def write_standin_corpus(
    directory: Union[str, Path],
    classes: Sequence[int] = tuple(range(22)),
    n_train: int = 120,
    n_test: int = 200,
    onset: int = DEFAULT_ONSET,
    n_features: int = N_FEATURES,
    seed: int = 0,
):
    """
    Write a format-identical stand-in corpus.

    Each fault shifts three class-specific variables by 2 noise units after
    its onset. The normal training run is stored transposed (variables x
    samples) like the distributed d00.dat.
    """
    rng = np.random.default_rng(seed)
    for code in sorted(set(classes)):
        features = rng.choice(n_features, 3, replace=False)
        archetype = ClassArchetype(Archetype.NORMAL if code == NORMAL_CLASS else Archetype.STEP, 2.0)
        for length, run_onset, path in zip(
            (n_train, n_test), (0, 0 if code == NORMAL_CLASS else onset), corpus_files(directory, code)
        ):
            samples = rng.normal(size=(length, n_features))
            samples[:, features] += fault_signal(archetype, length, run_onset, 1, 1.0)[:, None]
            write_dat(samples, path, transpose=(code == NORMAL_CLASS and path.name == TRAIN_FILE_TEMPLATE.format(0)))
