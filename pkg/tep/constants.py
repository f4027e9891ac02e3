"""Tennessee Eastman Process dataset constants."""

from numeric.errors import ContractError

N_FEATURES = 52             # 41 measured variables + 11 manipulated variables
SAMPLE_MINUTES = 3
ONSET_HOURS = 8
DEFAULT_ONSET = ONSET_HOURS * 60 // SAMPLE_MINUTES  # 160 samples

NORMAL_CLASS = 0
MAX_FAULT_CLASS = 21
# Normal + faults 1..20; class 21 is loadable on request.
DEFAULT_CLASSES = tuple(range(0, 21))
INCIPIENT_FAULTS = frozenset({3, 9, 15})

DEFAULT_WINDOW = 20
DEFAULT_STRIDE = 5

STD_FLOOR = 1e-8

# Classic file naming: d05.dat is the fault-5 training run, d05_te.dat its test run.
TRAIN_FILE_TEMPLATE = 'd{:02d}.dat'
TEST_FILE_TEMPLATE = 'd{:02d}_te.dat'


def class_name(fault_class: int) -> str:
    """
    Raises:
        ContractError: If ``fault_class`` is not a TEP class 0..21.
    """
    if not NORMAL_CLASS <= fault_class <= MAX_FAULT_CLASS:
        raise ContractError(f"TEP classes are {NORMAL_CLASS}..{MAX_FAULT_CLASS}, got {fault_class}")
    return 'Normal' if fault_class == NORMAL_CLASS else f'Fault {fault_class}'
