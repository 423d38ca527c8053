import copy
import json
import tomllib
from os.path import abspath, dirname, join
from pathlib import Path
from typing import Any, Optional

import yaml
from dynaconf import Dynaconf

SQUID_MODES_TOML_KEY = 'squid-modes'

current_dir = dirname(abspath(__file__))
# lists such as circuit.tones and gate.qubits are replaced, never appended to
global_settings = Dynaconf(
    envvar_prefix=False,
    merge_enabled=False,
    settings_files=[join(current_dir, f) for f in [
        "settings/configuration.toml",
    ]]
)


def get_settings():
    """
    Retrieves the current settings.

    Returns:
        Dynaconf: The process-wide settings object.
    """
    return global_settings


def _section_dict(section: str) -> dict:
    value = get_settings().get(section)
    if value is None:
        return {}
    if hasattr(value, "to_dict"):
        return copy.deepcopy(value.to_dict())
    return copy.deepcopy(dict(value))


def set_setting(key: str, value: Any):
    """
    Set `section.name` to value, replacing the previous value wholesale.

    The leaf name is matched case-insensitively against the existing keys of the section so that
    `gate.omega_ghz` and `gate.Omega_GHz` address the same entry.
    """
    section, _, name = key.partition('.')
    if not name:
        get_settings().set(section.upper(), value)
        return
    if '.' in name:
        head, _, rest = name.partition('.')
        data = _section_dict(section)
        nested = _match_key(data, head)
        inner = data.get(nested, {}) if isinstance(data.get(nested), dict) else {}
        inner[_match_key(inner, rest)] = value
        data[nested] = inner
    else:
        data = _section_dict(section)
        data[_match_key(data, name)] = value
    get_settings().set(section.upper(), data)


def _match_key(data: dict, name: str) -> str:
    for existing in data:
        if existing.lower() == name.lower():
            return existing
    return name


def apply_config(data: dict):
    for section, values in data.items():
        if isinstance(values, dict):
            for name, value in values.items():
                set_setting(f"{section}.{name}", value)
        else:
            set_setting(section, values)


def preset_path(name: str) -> Path:
    path = Path(current_dir) / "settings" / "presets" / f"{name}.toml"
    if not path.is_file():
        available = sorted(p.stem for p in path.parent.glob("*.toml"))
        raise FileNotFoundError(f"Unknown preset '{name}'. Available presets: {', '.join(available)}")
    return path


def _read_config(path: Path) -> dict:
    suffix = path.suffix.lower()
    if suffix == ".toml":
        with open(path, "rb") as f:
            return tomllib.load(f)
    if suffix in (".yaml", ".yml"):
        return yaml.safe_load(path.read_text()) or {}
    if suffix == ".json":
        return json.loads(path.read_text())
    raise ValueError(f"Unsupported configuration format: {path.suffix}")


def load_config_file(path: str | Path) -> Optional[list]:
    """
    Apply a user configuration file (TOML, YAML or JSON) over the current settings.

    A run manifest written by a previous run is recognised by its `command` and `config` keys; its
    config snapshot is applied and its command returned so that the run can be replayed.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Configuration file not found: {path}")
    data = _read_config(path)
    if not isinstance(data, dict):
        raise ValueError(f"Configuration file {path} must contain a table at the top level")
    if "command" in data and "config" in data:
        apply_config(data["config"])
        return data["command"]
    apply_config(data)
    return None


def settings_snapshot() -> dict:
    """Plain-dict copy of every configuration section, as recorded in run manifests."""
    sections = ("config", "circuit", "solver", "validation", "modes", "sweep", "coupling", "transmon", "gate", "oracle")
    return {section: _section_dict(section) for section in sections}


# Add local configuration from pyproject.toml of the project the tool is run in
def _find_repository_root() -> Optional[Path]:
    """
    Identify project root directory by recursively searching for the .git directory in the parent directories.
    """
    cwd = Path.cwd().resolve()
    no_way_up = False
    while not no_way_up:
        no_way_up = cwd == cwd.parent
        if (cwd / ".git").is_dir():
            return cwd
        cwd = cwd.parent
    return None


def _find_pyproject() -> Optional[Path]:
    repo_root = _find_repository_root()
    if repo_root:
        pyproject = repo_root / "pyproject.toml"
        return pyproject if pyproject.is_file() else None
    return None


pyproject_path = _find_pyproject()
if pyproject_path is not None:
    with open(pyproject_path, "rb") as _f:
        _local = tomllib.load(_f).get("tool", {}).get(SQUID_MODES_TOML_KEY)
    if isinstance(_local, dict):
        apply_config(_local)
