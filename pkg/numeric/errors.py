"""Exception hierarchy shared by every package in the toolkit."""


class GDLError(Exception):
    """Base class for all domain errors raised by this toolkit."""


class DimensionError(GDLError, ValueError):
    """Raised when tensor or dataset shapes do not agree."""


class ContractError(GDLError, ValueError):
    """Raised when a documented precondition is violated."""


class ConfigurationError(GDLError, ValueError):
    """Raised for invalid or unknown configuration values."""


class ParseError(GDLError, ValueError):
    """Raised when a run file contains a non-numeric cell.

    Args:
        message: Description of the problem.
        line: 1-based line number in the source file.
        column: 1-based column number in the source file.
    """

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class LabelIndexError(GDLError, IndexError):
    """Raised when a class label or prediction is outside [0, C)."""


class NonFiniteError(GDLError, ArithmeticError):
    """Raised when an operation produces NaN or Inf from finite inputs."""


class DeterminismError(GDLError, RuntimeError):
    """Raised when a function expected to be deterministic is not."""


class TrainingDivergedError(GDLError, ArithmeticError):
    """Raised when the training loss becomes non-finite.

    Args:
        epoch: 0-based epoch index.
        batch: 0-based batch index within the epoch.
        parameter_norms: L2 norm of every parameter at the time of failure.
    """

    def __init__(self, epoch: int, batch: int, parameter_norms: dict[str, float]):
        worst = sorted(parameter_norms.items(), key=lambda kv: -kv[1])[:5]
        dump = ', '.join(f'{name}={norm:.4g}' for name, norm in worst)
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}; largest parameter norms: {dump}")
        self.epoch = epoch
        self.batch = batch
        self.parameter_norms = parameter_norms
