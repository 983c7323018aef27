"""TOML configuration with environment-variable overrides.

Unknown keys are rejected outright so a typo never silently falls back to a
default. Every known key's default is in DEFAULTS below. Environment
variables override file values using the pattern DRKIT_<SECTION>_<KEY>.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Optional, Union

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

DEFAULTS: dict[str, dict[str, Any]] = {
    "model": {
        "base_url": "",  # empty means no live backend; offline clients only
        "name": "",
        "temperature": 0.0,
    },
    "budgets": {
        "max_turns": 30,
        "max_tokens_per_turn": 16384,
        "tool_call_budget": 100,
        "total_token_budget": 1_000_000,
    },
    "retrieval": {
        "corpus": "",
        "authority_file": "",
        "cache_capacity": 4096,
        "k": 10,
    },
    "synthesis": {
        "seed_degree_min": 3,
        "seed_degree_max": 10,
        "node_min": 10,
        "node_max": 40,
        "supernode_threshold": 1000,
        "consistency_threshold": 0.8,
    },
    "judge": {
        "backend": "lexical",  # lexical | http
    },
    "service": {
        "host": "127.0.0.1",
        "port": 8000,
        "data_dir": "./review-data",
        "lease_seconds": 1800,
    },
}


class ConfigError(ValueError):
    pass


def load_config(path: Union[str, Path, None] = None, env: Optional[dict] = None) -> dict:
    """Merged configuration: defaults < file < environment."""
    merged = {section: dict(values) for section, values in DEFAULTS.items()}
    if path is not None:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        for section, values in raw.items():
            if section not in merged:
                raise ConfigError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"section {section!r} must be a table")
            for key, value in values.items():
                if key not in merged[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                merged[section][key] = _coerce(merged[section][key], value, f"{section}.{key}")
    environment = os.environ if env is None else env
    for section, values in merged.items():
        for key in values:
            env_key = f"DRKIT_{section.upper()}_{key.upper()}"
            if env_key in environment:
                values[key] = _coerce(values[key], environment[env_key], f"{section}.{key}")
    return merged


def _coerce(default: Any, value: Any, where: str) -> Any:
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        return str(value).lower() in ("1", "true", "yes")
    if isinstance(default, int) and not isinstance(default, bool):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where} must be a number, got {value!r}")
    return str(value)
