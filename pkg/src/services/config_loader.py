"""
Configuration file loading and command-line override merging

The configuration file is a flat YAML mapping, one ``key: value`` per line with
``#`` comments. Lists are written ``[a, b, c]`` or as a comma-separated string.
Command-line flags win over file values.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from ..models.run_config import GENERATOR_KEYS, RunConfig
from ..utils.constants import CONFIG_KEYS, VALIDATION_MESSAGES
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

FLOAT_KEYS = {"xi_t", "xi_d", "tau", "tau1", "weight_cap", "weight_cap_quantile", *GENERATOR_KEYS}
INT_KEYS = {"seed", "reps", "threads", "n", "truth_m", "rep_index"}
BOOL_KEYS = {"ipcw", "report"}
PATH_KEYS = {"input", "out"}
STRING_KEYS = {"command", "mode", "preset"}


def parse_times(value: Any) -> tuple:
    """Evaluation times from a YAML list or a comma-separated string"""
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",") if item.strip()]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    try:
        return tuple(float(item) for item in items)
    except (TypeError, ValueError):
        raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key="times", value=value))


def coerce_value(key: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if key == "times":
            return parse_times(value)
        if key in FLOAT_KEYS:
            if isinstance(value, bool):
                raise TypeError(key)
            return float(value)
        if key in INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError(key)
            return int(value)
        if key in BOOL_KEYS:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("true", "yes", "1"):
                return True
            if str(value).lower() in ("false", "no", "0"):
                return False
            raise TypeError(key)
        if key in PATH_KEYS:
            return Path(str(value))
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key=key, value=value))


def load_config_file(path: Path) -> Dict[str, Any]:
    """Read and type-check a flat configuration mapping"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Configuration file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Configuration file {path} is not valid: {e}") from e

    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"Configuration file {path} must be a mapping of keys to values")

    values = {}
    for key, value in raw.items():
        key = str(key)
        if key not in CONFIG_KEYS:
            raise ConfigError(VALIDATION_MESSAGES["unknown_config_key"].format(key=key))
        if isinstance(value, dict):
            raise ConfigError(VALIDATION_MESSAGES["bad_config_value"].format(key=key, value=value))
        values[key] = coerce_value(key, value)
    logger.debug("Loaded %d configuration keys from %s", len(values), path)
    return values


def merge_settings(file_values: Mapping[str, Any], flag_values: Mapping[str, Any]) -> Dict[str, Any]:
    """File values overridden by every flag the user actually set"""
    merged = dict(file_values)
    for key, value in flag_values.items():
        if value is not None:
            merged[key] = coerce_value(key, value) if key in CONFIG_KEYS else value
    return merged


def build_run_config(command: str, flag_values: Mapping[str, Any], config_path: Optional[Path] = None) -> RunConfig:
    file_values = load_config_file(config_path) if config_path is not None else {}
    file_command = file_values.pop("command", None)
    if file_command is not None and file_command != command:
        logger.warning("Configuration file names command '%s'; running '%s'", file_command, command)

    merged = merge_settings(file_values, flag_values)
    generator = {key: merged.pop(key) for key in GENERATOR_KEYS if key in merged}
    known = {
        "input", "out", "mode", "xi_t", "xi_d", "tau", "tau1", "times", "seed", "reps",
        "threads", "preset", "n", "truth_m", "rep_index", "ipcw", "weight_cap",
        "weight_cap_quantile", "report",
    }
    kwargs = {key: value for key, value in merged.items() if key in known and value is not None}
    return RunConfig(command=command, config=config_path, generator=generator, **kwargs)
