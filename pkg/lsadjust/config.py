import json
import os
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel

from .errors import ConfigError

# Worker count for study replications and multi-chain fits
WORKERS = int(os.getenv("LSADJUST_WORKERS", str(os.cpu_count() or 1)))

LOG_LEVEL = os.getenv("LSADJUST_LOG_LEVEL", "INFO")

# Directory holding the published s50 files (used by the s50 command defaults and the data tests)
S50_DIR = os.getenv("LSADJUST_S50_DIR")

# File names of the s50 distribution
S50_NETWORK_FILES = ("s50-network1.dat", "s50-network2.dat", "s50-network3.dat")
S50_ATTRIBUTE_FILES = {
    "alcohol": "s50-alcohol.dat",
    "smoke": "s50-smoke.dat",
    "drug": "s50-drugs.dat",
    "sport": "s50-sport.dat",
}

CONFIG_SECTIONS = ("mcmc", "sim", "study", "influence", "lsm")

M = TypeVar("M", bound=BaseModel)


def load_config_file(path: Path | None) -> dict[str, dict[str, Any]]:
    """Read a JSON config file with one object per section. Missing path -> empty config."""
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"Config file '{path}' not found", kind="missing_file")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file '{path}' is not valid JSON: {e}")

    if not isinstance(data, dict):
        raise ConfigError(f"Config file '{path}' must contain a JSON object")
    unknown = sorted(set(data) - set(CONFIG_SECTIONS))
    if unknown:
        raise ConfigError(f"Unknown config sections: {', '.join(unknown)}")
    return data


def resolve(default: M, section: dict[str, Any] | None, overrides: dict[str, Any]) -> M:
    """
    Merge settings with flag > config file > default precedence.

    `overrides` holds parsed flags; a value of None means the flag was not given.
    """
    data = default.model_dump()
    data.update(section or {})
    data.update({key: value for key, value in overrides.items() if value is not None})
    return type(default).model_validate(data)
