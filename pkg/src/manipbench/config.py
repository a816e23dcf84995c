"""Key-value configuration files with environment-variable overrides.

Format: one ``key = value`` per line, ``#`` comments. Keys are dotted
(``llm.endpoint``). Environment variables named MANIPBENCH_<KEY> with dots
replaced by underscores override file values, so credentials stay out of
checked-in files.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

ENV_PREFIX = "MANIPBENCH_"


class ConfigError(ValueError):
    """Unreadable or malformed configuration."""


def load_config(path: Optional[str | Path]) -> dict[str, str]:
    values: dict[str, str] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        for line_no, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{p}:{line_no}: expected key = value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def config_get(values: dict[str, str], key: str, default: Optional[str] = None) -> Optional[str]:
    env_key = ENV_PREFIX + key.upper().replace(".", "_")
    if env_key in os.environ:
        return os.environ[env_key]
    return values.get(key, default)
