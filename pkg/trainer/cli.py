"""Command-line surface: synth, ingest, train, eval, gradcheck, report.

Exit codes: 0 on success, 1 for invalid input, configuration or contract
errors (and failed gradient checks), 2 for I/O errors.
"""

import argparse
import dataclasses
import hashlib
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from attention.similarity import SimilarityKind
from metrics.published import write_comparison_csv
from metrics.report import load_report_json, render_table, save_report_json, write_report_csv
from numeric.errors import GDLError
from numeric.gradients import finite_diff_check
from tep.constants import DEFAULT_CLASSES, DEFAULT_ONSET, DEFAULT_STRIDE, DEFAULT_WINDOW, N_FEATURES
from tep.corpus import load_tep_corpus
from tep.synthetic import SyntheticPreset, load_synthetic_spec, save_synthetic_spec, synthesize, synthetic_preset
from tep.windows import (
    METADATA_FILE, MANIFEST_FILE, Labeling, WindowedDataset, exclude_classes, load_dataset, save_dataset,
    train_val_split,
)
from trainer.config import ClassWeighting, OptimizerKind, TrainConfig, load_train_config
from trainer.loop import batch_loss, evaluate, train
from twin.checkpoint import load_checkpoint, save_checkpoint
from twin.config import TwinModelConfig, load_model_config
from twin.params import init_parameters

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = 'GDL_LOG_LEVEL'
TRAIN_SPLIT = 'train'
TEST_SPLIT = 'test'
HISTORY_FILE = 'history.json'
REPORT_JSON_FILE = 'report.json'
REPORT_CSV_FILE = 'report.csv'

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class UsageError(Exception):
    """Raised by the argument parser instead of exiting."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def dataset_id(directory: Path) -> str:
    """Content hash of a cached dataset's metadata and manifest."""
    digest = hashlib.sha256()
    for name in (METADATA_FILE, MANIFEST_FILE):
        digest.update((directory / name).read_bytes())
    return digest.hexdigest()[:16]


# --- Subcommands ---

def cmd_synth(args) -> int:
    spec = load_synthetic_spec(args.spec) if args.spec else synthetic_preset(SyntheticPreset(args.preset))
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    train_ds, test_ds = synthesize(spec)
    out = Path(args.out)
    save_dataset(train_ds, out / TRAIN_SPLIT)
    save_dataset(test_ds, out / TEST_SPLIT)
    save_synthetic_spec(spec, out / 'spec.json')
    print(f"wrote {len(train_ds)} train and {len(test_ds)} test windows ({spec.n_classes} classes) to {out}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    train_ds, test_ds = load_tep_corpus(
        args.tep_dir,
        classes=args.classes,
        window_len=args.window,
        stride=args.stride,
        onset=args.onset,
        n_features=args.features,
        labeling=Labeling(args.labeling),
    )
    if args.exclude:
        train_ds = exclude_classes(train_ds, args.exclude)
        test_ds = exclude_classes(test_ds, args.exclude)
    out = Path(args.out)
    save_dataset(train_ds, out / TRAIN_SPLIT)
    save_dataset(test_ds, out / TEST_SPLIT)
    print(f"wrote {len(train_ds)} train and {len(test_ds)} test windows ({train_ds.n_classes} classes) to {out}")
    return EXIT_OK


def _load_split(root: str, split: str, exclude: Optional[list[int]]) -> tuple[WindowedDataset, Path]:
    directory = Path(root) / split
    ds = load_dataset(directory)
    if exclude:
        ds = exclude_classes(ds, exclude)
    return ds, directory


def _train_config(args) -> TrainConfig:
    cfg = load_train_config(args.train_config) if args.train_config else TrainConfig()
    overrides = {
        'epochs': args.epochs,
        'learning_rate': args.lr,
        'batch_size': args.batch_size,
        'seed': args.seed,
        'early_stop_patience': args.patience,
        'optimizer': OptimizerKind(args.optimizer) if args.optimizer else None,
        'class_weights': ClassWeighting(args.class_weights) if args.class_weights else None,
    }
    return cfg.replace(**{k: v for k, v in overrides.items() if v is not None})


def cmd_train(args) -> int:
    train_ds, _ = _load_split(args.data, TRAIN_SPLIT, args.exclude)
    if args.model_config:
        config = load_model_config(args.model_config)
    else:
        config = TwinModelConfig(n_features=train_ds.n_features, window_len=train_ds.window_len,
                                 n_classes=train_ds.n_classes)
    checkpoint = Path(args.checkpoint)
    cfg = _train_config(args).replace(checkpoint_path=str(checkpoint))
    fit_ds, val_ds = train_val_split(train_ds, 1.0 - cfg.val_fraction, cfg.seed)

    params, history = train(init_parameters(config, cfg.seed), config, fit_ds, val_ds, cfg)
    save_checkpoint(params, config, checkpoint)
    history_path = Path(args.history) if args.history else checkpoint.parent / HISTORY_FILE
    history.save(history_path)
    best = history.best
    print(f"trained {len(history)} epochs; best epoch {history.best_epoch} "
          f"(val macro F1 {best.val_macro_f1:.4f}); checkpoint {checkpoint}, history {history_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    params, config = load_checkpoint(args.checkpoint)
    ds, directory = _load_split(args.data, args.split, args.exclude)
    rep = evaluate(params, config, ds, args.batch_size, args.workers,
                   metadata={'dataset_id': dataset_id(directory), 'split': args.split})
    out = Path(args.checkpoint).parent
    json_path = Path(args.report_json) if args.report_json else out / REPORT_JSON_FILE
    csv_path = Path(args.report_csv) if args.report_csv else out / REPORT_CSV_FILE
    save_report_json(rep, json_path)
    write_report_csv(rep, csv_path)
    print(render_table(rep), end='')
    print(f"report: {json_path}, {csv_path}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    config = load_model_config(args.model_config) if args.model_config else TwinModelConfig.tiny()
    if args.similarity:
        config = dataclasses.replace(config, similarity=SimilarityKind(args.similarity))
    rng = np.random.default_rng(args.seed)
    windows = rng.normal(size=(args.windows, config.window_len, config.n_features))
    labels = rng.integers(0, config.n_classes, size=args.windows)
    params = init_parameters(config, args.seed)
    # Open the gates partway so gate gradients are not all identical.
    params = params.replace({
        name: rng.normal(scale=0.5, size=params[name].shape) for name in params if name.endswith('gate_logits')
    })

    result = finite_diff_check(lambda p: batch_loss(p, config, windows, labels), params,
                               step=args.step, tolerance=args.tolerance)
    width = max(len(name) for name in result.per_parameter)
    for name, error in result.per_parameter.items():
        print(f"{name:<{width}}  {error:.3e}")
    print(f"max relative error {result.max_relative_error:.3e} "
          f"({'PASS' if result.passed else 'FAIL'}, tolerance {result.tolerance:g})")
    return EXIT_OK if result.passed else EXIT_INVALID


def cmd_report(args) -> int:
    rep = load_report_json(args.report)
    print(render_table(rep), end='')
    if args.csv:
        write_report_csv(rep, args.csv)
    if args.compare:
        write_comparison_csv(rep, args.compare)
    return EXIT_OK


# --- Parser ---

def _add_data_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--window', type=int, default=DEFAULT_WINDOW, help='samples per window')
    parser.add_argument('--stride', type=int, default=DEFAULT_STRIDE, help='samples between window starts')
    parser.add_argument('--onset', type=int, default=DEFAULT_ONSET, help='fault onset sample in test runs')
    parser.add_argument('--features', type=int, default=N_FEATURES, help='process variables per sample')
    parser.add_argument('--classes', type=_int_list, default=list(DEFAULT_CLASSES),
                        help='comma-separated class roster (default 0-20)')


def _add_exclude(parser: argparse.ArgumentParser):
    parser.add_argument('--exclude', type=_int_list, default=None, help='comma-separated classes to drop, e.g. 3,9,15')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='gdl', description='Twin GDLAttention fault classifier toolkit.')
    parser.add_argument('--log-level', default=None, help=f'logging level (default ${LOG_LEVEL_ENV} or WARNING)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', help='generate a synthetic dataset')
    source = p.add_mutually_exclusive_group()
    source.add_argument('--spec', help='synthetic spec JSON')
    source.add_argument('--preset', choices=[s.value for s in SyntheticPreset], default=SyntheticPreset.FOUR_CLASS.value)
    p.add_argument('--seed', type=int, default=None, help='override the spec seed')
    p.add_argument('--out', required=True, help='output dataset root')
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser('ingest', help='window a TEP corpus directory (dXX.dat / dXX_te.dat)')
    p.add_argument('--tep-dir', required=True)
    p.add_argument('--out', required=True, help='output dataset root')
    p.add_argument('--labeling', choices=[m.value for m in Labeling], default=Labeling.START_INDEX.value)
    _add_data_flags(p)
    _add_exclude(p)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser('train', help='train a model on <data>/train')
    p.add_argument('--data', required=True, help='dataset root written by synth or ingest')
    p.add_argument('--checkpoint', required=True, help='parameter file to write (config goes beside it)')
    p.add_argument('--model-config', help='key-value model config')
    p.add_argument('--train-config', help='train config JSON')
    p.add_argument('--history', help='history JSON path (default: beside the checkpoint)')
    p.add_argument('--epochs', type=int)
    p.add_argument('--lr', type=float)
    p.add_argument('--batch-size', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--patience', type=int)
    p.add_argument('--optimizer', choices=[o.value for o in OptimizerKind])
    p.add_argument('--class-weights', choices=[w.value for w in ClassWeighting])
    _add_exclude(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser('eval', help='evaluate a checkpoint and write report JSON/CSV')
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--data', required=True, help='dataset root')
    p.add_argument('--split', choices=[TRAIN_SPLIT, TEST_SPLIT], default=TEST_SPLIT)
    p.add_argument('--report-json')
    p.add_argument('--report-csv')
    p.add_argument('--batch-size', type=int, default=256)
    p.add_argument('--workers', type=int, default=1)
    _add_exclude(p)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser('gradcheck', help='compare backward() with central finite differences')
    p.add_argument('--model-config', help='key-value model config (default: tiny)')
    p.add_argument('--similarity', choices=[s.value for s in SimilarityKind])
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--windows', type=int, default=2, help='batch size of the checked loss')
    p.add_argument('--step', type=float, default=1e-5)
    p.add_argument('--tolerance', type=float, default=1e-4)
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser('report', help='render a report JSON as a text table')
    p.add_argument('report', help='report JSON')
    p.add_argument('--csv', help='also write the per-class CSV here')
    p.add_argument('--compare', help='write measured vs published metrics (percent) as CSV here')
    p.set_defaults(handler=cmd_report)
    return parser


def configure_logging(level: Optional[str]):
    name = (level or os.environ.get(LOG_LEVEL_ENV) or 'WARNING').upper()
    if not isinstance(logging.getLevelName(name), int):
        raise UsageError(f"unknown log level {name!r}")
    logging.basicConfig(level=name, format='%(asctime)s %(levelname)s %(name)s: %(message)s',
                        stream=sys.stderr, force=True)


def cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.log_level)
        return args.handler(args)
    except SystemExit as exc:
        # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(parser.format_usage(), end='', file=sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GDLError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
