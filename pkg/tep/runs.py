"""Raw process runs and the run-file reader/writer.

Two on-disk layouts are accepted:

- the classic ``.dat`` whitespace matrix (no header), which for the normal
  training run is stored as 52 x 500 and gets transposed on load;
- CSV with a header ``var_1,...,var_n[,fault[,onset]]`` as written by
  ``write_run``.
"""

import io
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from numeric.errors import ContractError, DimensionError, ParseError
from tep.constants import N_FEATURES, NORMAL_CLASS

logger = logging.getLogger(__name__)

FAULT_COLUMN = 'fault'
ONSET_COLUMN = 'onset'
FLOAT_FORMAT = '%.17g'


@dataclass(frozen=True, eq=False)
class RawRun:
    """
    One recorded process run.

    Attributes:
        samples: (T, n_features) float64 array, read-only.
        fault_class: 0 for normal operation, otherwise the fault number.
        onset_index: First sample where the fault is active; 0 for normal runs.
        name: Identifier used in dataset manifests.
    """
    samples: np.ndarray
    fault_class: int
    onset_index: int = 0
    name: str = ''

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise DimensionError(f"run samples must be a non-empty T x n matrix, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ContractError(f"run {self.name!r} contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        if self.fault_class < 0:
            raise ContractError(f"fault_class must be >= 0, got {self.fault_class}")
        if not 0 <= self.onset_index <= self.n_samples:
            raise ContractError(f"onset_index {self.onset_index} outside [0, {self.n_samples}]")
        if self.fault_class == NORMAL_CLASS and self.onset_index != 0:
            raise ContractError(f"normal run {self.name!r} must have onset_index 0, got {self.onset_index}")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples: np.ndarray) -> 'RawRun':
        return RawRun(samples, self.fault_class, self.onset_index, self.name)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_cells(text: str, path: Path) -> tuple[Optional[list[str]], np.ndarray, list[int]]:
    """Tokenize into (header or None, object array of cells, source line per row)."""
    numbered = [(i, line) for i, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not numbered:
        raise ContractError(f"{path}: run file is empty")
    sep = ',' if ',' in numbered[0][1] else r'\s+'
    first_tokens = [t for t in re.split(sep, numbered[0][1].strip()) if t]
    header = None
    if not all(_is_number(t.strip()) for t in first_tokens):
        header = [t.strip() for t in first_tokens]
        numbered = numbered[1:]
    if not numbered:
        raise ContractError(f"{path}: run file has a header but no samples")
    line_numbers = [i for i, _ in numbered]
    body = '\n'.join(line for _, line in numbered)
    try:
        frame = pd.read_csv(io.StringIO(body), sep=sep, header=None, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        match = re.search(r'Expected (\d+) fields in line (\d+)', str(exc))
        if match:
            expected, row = int(match.group(1)), int(match.group(2))
            raise ParseError(f"{path}: too many values in row", line_numbers[row - 1], expected + 1) from exc
        raise ParseError(f"{path}: {exc}", line_numbers[0], 1) from exc
    return header, frame.to_numpy(dtype=object), line_numbers


def _to_float(cells: np.ndarray, line_numbers: list[int], path: Path) -> np.ndarray:
    try:
        values = cells.astype(np.float64)
    except (TypeError, ValueError):
        values = None
    if values is None or not np.all(np.isfinite(values)):
        for r, row in enumerate(cells):
            for c, cell in enumerate(row):
                if not isinstance(cell, str) or not cell.strip():
                    raise ParseError(f"{path}: missing value", line_numbers[r], c + 1)
                if not _is_number(cell) or not np.isfinite(float(cell)):
                    raise ParseError(f"{path}: non-numeric value {cell!r}", line_numbers[r], c + 1)
    return values


def _single_value(column: np.ndarray, label: str, path: Path) -> int:
    unique = np.unique(column)
    if unique.size != 1 or unique[0] != int(unique[0]):
        raise ContractError(f"{path}: {label} column must hold one integer value, found {unique.tolist()[:5]}")
    return int(unique[0])


def load_run(
    path: Union[str, Path],
    fault_class: Optional[int] = None,
    onset_index: Optional[int] = None,
    n_features: int = N_FEATURES,
    name: Optional[str] = None,
) -> RawRun:
    """
    Read one run file.

    A first line that does not parse as numbers is a header. Header files
    may carry ``fault`` and ``onset`` columns, used when the matching
    argument is None. A headerless matrix of shape (n_features, T) with
    T > n_features is transposed.

    Args:
        path: Run file.
        fault_class: Class of the run; required unless the file has a fault column.
        onset_index: Fault onset sample; defaults to the file's onset column, else 0.
        n_features: Expected number of process variables.
        name: Manifest identifier; defaults to the file stem.

    Raises:
        ParseError: On a missing or non-numeric cell.
        DimensionError: If the feature count is not ``n_features``.
    """
    path = Path(path)
    header, cells, line_numbers = _read_cells(path.read_text(encoding='utf-8'), path)
    values = _to_float(cells, line_numbers, path)

    if header is not None:
        lowered = [h.lower() for h in header]
        if len(lowered) != values.shape[1]:
            raise DimensionError(f"{path}: header has {len(lowered)} columns, rows have {values.shape[1]}")
        keep = [i for i, h in enumerate(lowered) if h not in (FAULT_COLUMN, ONSET_COLUMN)]
        if FAULT_COLUMN in lowered and fault_class is None:
            fault_class = _single_value(values[:, lowered.index(FAULT_COLUMN)], FAULT_COLUMN, path)
        if ONSET_COLUMN in lowered and onset_index is None:
            onset_index = _single_value(values[:, lowered.index(ONSET_COLUMN)], ONSET_COLUMN, path)
        values = values[:, keep]
    elif values.shape[0] == n_features and values.shape[1] > n_features:
        logger.debug("%s: transposing %s matrix to samples x features", path, values.shape)
        values = values.T

    if values.shape[1] != n_features:
        raise DimensionError(f"{path}: expected {n_features} features, found {values.shape[1]}")
    if fault_class is None:
        raise ContractError(f"{path}: fault class not given and the file has no fault column")
    return RawRun(values, fault_class, 0 if onset_index is None else onset_index,
                  path.stem if name is None else name)


def write_run(run: RawRun, path: Union[str, Path]):
    """CSV with header var_1..var_n,fault,onset; values at 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(run.samples, columns=[f'var_{i + 1}' for i in range(run.n_features)])
    frame[FAULT_COLUMN] = run.fault_class
    frame[ONSET_COLUMN] = run.onset_index
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
