from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import tomllib
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import numpy as np
import yaml
from pydantic_core import to_json

from squid_modes.config_loader import get_settings, set_setting
from squid_modes.log import get_logger


def update_settings_from_args(args: List[str]) -> List[str]:
    """
    Update the settings of the Dynaconf object from dotted overrides in the argument list.

    Args:
        args: A list of arguments passed to the command.
        Example args: ['--gate.delta_MHz=12', '--circuit.tones=[{omega_d_GHz: 3.0, dEJ_over_EJ0: 0.2}]']

    Returns:
        The arguments that are not dotted overrides, in their original form, for the command's own parser.
    """
    other_args = []
    if args:
        for arg in args:
            stripped = arg.strip()
            if stripped.startswith('--') and '=' in stripped:
                key, value = stripped[2:].split('=', 1)
                if '.' in key:
                    key, value = _fix_key_value(key, value)
                    set_setting(key, value)
                    get_logger().info(f'Updated setting {key} to: "{value}"')
                    continue
            other_args.append(arg)
    return other_args


def _fix_key_value(key: str, value: str):
    key = key.strip()
    value = value.strip()
    try:
        value = yaml.safe_load(value)
    except Exception as e:
        get_logger().debug(f"Failed to parse YAML for config override {key}={value}", exc_info=e)
    return key, value


def get_version() -> str:
    # First check pyproject.toml if running directly out of repository
    if os.path.exists("pyproject.toml"):
        with open("pyproject.toml", "rb") as f:
            data = tomllib.load(f)
        if data.get("project", {}).get("name") == "squid-modes" and "version" in data["project"]:
            return data["project"]["version"]

    # Otherwise get the installed pip package version
    try:
        return version('squid-modes')
    except PackageNotFoundError:
        get_logger().warning("Unable to find package named 'squid-modes'")
        return "unknown"


def get_max_workers() -> int:
    """Worker cap from SQUIDMODES_THREADS, then config.max_workers, then the CPU count."""
    value = os.environ.get("SQUIDMODES_THREADS") or get_settings().get("config.max_workers", 0)
    try:
        workers = int(value)
    except (TypeError, ValueError):
        get_logger().warning(f"Ignoring invalid worker count '{value}'")
        workers = 0
    return workers if workers > 0 else (os.cpu_count() or 1)


def format_number(value: Any, digits: int | None = None) -> str:
    """Locale-independent text for a CSV cell; floats use repr-style exponent notation."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        digits = digits or get_settings().get("config.csv_significant_digits", 12)
        return f"{value:.{digits}g}"
    return str(value)


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows to path atomically with LF line endings."""
    path = Path(path)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(value) for value in row])
    _write_atomic(path, buffer.getvalue())
    get_logger().debug(f"Wrote {path}")
    return path


def _array_fallback(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def write_json(path: str | Path, data: Any) -> Path:
    """Write data to path atomically as JSON with sorted keys; models go through pydantic, non-finite floats become null."""
    path = Path(path)
    jsonable = json.loads(to_json(data, fallback=_array_fallback))
    _write_atomic(path, json.dumps(jsonable, indent=2, sort_keys=True) + "\n")
    get_logger().debug(f"Wrote {path}")
    return path
