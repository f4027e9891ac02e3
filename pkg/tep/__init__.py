"""Tennessee Eastman Process data: run files, windowing, labeling and synthetic stand-ins."""

from tep.constants import (
    DEFAULT_CLASSES, DEFAULT_ONSET, DEFAULT_STRIDE, DEFAULT_WINDOW, INCIPIENT_FAULTS, N_FEATURES,
    NORMAL_CLASS, SAMPLE_MINUTES, class_name,
)
from tep.runs import RawRun, load_run, write_run
from tep.standardize import Standardizer, apply, fit_standardizer
from tep.windows import (
    Labeling, WindowedDataset, build_dataset, exclude_classes, load_dataset, make_windows,
    save_dataset, train_val_split,
)
from tep.synthetic import (
    Archetype, ClassArchetype, SyntheticPreset, SyntheticSpec, generate_runs, load_synthetic_spec,
    save_synthetic_spec, synthesize, synthetic_preset,
)
from tep.corpus import load_tep_corpus, write_standin_corpus

__all__ = [
    'N_FEATURES', 'SAMPLE_MINUTES', 'DEFAULT_ONSET', 'DEFAULT_WINDOW', 'DEFAULT_STRIDE',
    'DEFAULT_CLASSES', 'INCIPIENT_FAULTS', 'NORMAL_CLASS', 'class_name',
    'RawRun', 'load_run', 'write_run',
    'Standardizer', 'fit_standardizer', 'apply',
    'Labeling', 'WindowedDataset', 'make_windows', 'build_dataset', 'exclude_classes',
    'train_val_split', 'save_dataset', 'load_dataset',
    'Archetype', 'ClassArchetype', 'SyntheticSpec', 'SyntheticPreset', 'synthetic_preset',
    'generate_runs', 'synthesize', 'load_synthetic_spec', 'save_synthetic_spec',
    'load_tep_corpus', 'write_standin_corpus',
]
