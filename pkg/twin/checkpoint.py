"""Checkpoint = ParameterSet file plus the model config stored beside it."""

import logging
from pathlib import Path
from typing import Union

from numeric.parameters import ParameterSet, load_parameters, save_parameters
from twin.config import TwinModelConfig, config_path_for, load_model_config, save_model_config
from twin.params import check_parameters

logger = logging.getLogger(__name__)


def save_checkpoint(params: ParameterSet, config: TwinModelConfig, path: Union[str, Path]):
    check_parameters(params, config)
    save_parameters(params, path)
    save_model_config(config, config_path_for(path))
    logger.debug("saved checkpoint %s (config %s)", path, config.config_hash()[:12])


def load_checkpoint(path: Union[str, Path]) -> tuple[ParameterSet, TwinModelConfig]:
    """
    Raises:
        FileNotFoundError: If the parameter file or its config is missing.
        ContractError, DimensionError: If they do not belong together.
    """
    config = load_model_config(config_path_for(path))
    params = load_parameters(path)
    check_parameters(params, config)
    return params, config
