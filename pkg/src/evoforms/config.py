# Copyright 2025 evoforms developers
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
#  under the License.

"""Engine configuration read from the packaged or a user YAML file."""

import logging
import pathlib
import typing

import pydantic
import yaml

from evoforms.exceptions import ConfigurationError


logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = pathlib.Path(__file__).with_name("engine.yaml")


class EngineConfig(pydantic.BaseModel):
    """Tunables of the engine.

    Attributes:
        seed (int): Seed of the is_zero sampler.
        samples (int): Evaluation points per probabilistic zero test.
        tolerance (float): Relative magnitude below which a sampled
            value counts as zero.
        max_resample (int): Multiples of samples attempted before a
            zero test gives up with INDETERMINATE.
        max_dimension (int): Largest accepted chart dimension.
        max_search_dimension (int): Largest chart dimension accepted by
            pseudostructure_search.
        accept_probable (bool): Whether PROBABLE-zero evidence may make
            a relation IDENTICAL.
        workers (int): Threads used by pseudostructure_search.
        log_level (str): Level passed to logging.basicConfig by the CLI.
    """

    model_config = pydantic.ConfigDict(validate_assignment=True, frozen=False)
    seed: int = pydantic.Field(20240601, ge=0, lt=1 << 64)
    samples: int = pydantic.Field(32, ge=32)
    tolerance: float = pydantic.Field(1.0e-9, gt=0.0, lt=1.0)
    max_resample: int = pydantic.Field(4, ge=1)
    max_dimension: int = pydantic.Field(8, ge=1, le=8)
    max_search_dimension: int = pydantic.Field(6, ge=1, le=6)
    accept_probable: bool = False
    workers: int = pydantic.Field(1, ge=1)
    log_level: typing.Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"


DEFAULT_CONFIG = EngineConfig()


def _get_value_from_data(data: dict, key: str, types: tuple, default=None) -> typing.Any:
    """Retrieve the value of key from data.

    Returns the element of the dictionary data if the value for the key
    matches the type specified by types. A bool never matches int.

    Args:
        data (dict): The dictionary data to be checked.
        key (str): The name of the key to retrieve.
        types (tuple[type]): The accepted types.
        default (Any): The data to return if no match is found.
            If omitted, None.

    Returns:
        The value for key in the dictionary data, or default.

    Raises:
        None
    """
    if key not in data:
        return default
    value = data[key]
    if isinstance(value, bool) and bool not in types:
        logger.warning("Invalid type for %s: %r", key, value)
        return default
    if not isinstance(value, types):
        logger.warning("Invalid type for %s: %r", key, value)
        return default
    return value


def config_from_specific_data(specific_data: dict | None) -> EngineConfig:
    """Build an EngineConfig from the specific_data mapping.

    Values of the wrong type or out of range are logged and replaced by
    their defaults.

    Args:
        specific_data (dict | None): The specific_data mapping of the
            configuration file.

    Returns:
        The validated configuration.

    Raises:
        None
    """
    if specific_data is None:
        return EngineConfig()
    lookups: dict[str, tuple] = {
        "seed": (int,),
        "samples": (int,),
        "tolerance": (int, float),
        "max_resample": (int,),
        "max_dimension": (int,),
        "max_search_dimension": (int,),
        "accept_probable": (bool,),
        "workers": (int,),
        "log_level": (str,),
    }
    values = {}
    for key, types in lookups.items():
        value = _get_value_from_data(specific_data, key, types)
        if value is not None:
            values[key] = value

    config = EngineConfig()
    for key, value in values.items():
        try:
            setattr(config, key, value)
        except pydantic.ValidationError:
            logger.warning("Invalid specific_data value %s=%r, using %r", key, value, getattr(config, key))
    return config


def load_config(path: str | pathlib.Path | None = None) -> EngineConfig:
    """Read an engine configuration file.

    Args:
        path (str | Path | None): YAML file to read. If omitted, the
            packaged engine.yaml.

    Returns:
        The validated configuration.

    Raises:
        ConfigurationError: The file cannot be read or is not a YAML
            mapping.
    """
    path = pathlib.Path(path) if path is not None else DEFAULT_CONFIG_PATH
    logger.debug("entry: load_config(%s)", path)
    try:
        with open(path, encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
    except (OSError, yaml.YAMLError) as err:
        raise ConfigurationError(f"cannot read configuration {path}", additional_message=str(err)) from err
    if not isinstance(data, dict):
        raise ConfigurationError(f"configuration {path} is not a mapping")
    specific_data = _get_value_from_data(data, "specific_data", (dict,))
    if specific_data is None:
        logger.warning("No specific_data in %s, using defaults", path)
    return config_from_specific_data(specific_data)
