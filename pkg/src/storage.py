"""
Run config and report files for Punctual.
"""

import yaml
from pathlib import Path
from typing import Dict, Any

from .config import get_fixtures_path, validate_run_config
from .errors import ConfigError


def load_run_config(path: str | Path) -> Dict[str, Any]:
    """
    Load and validate a run config from a YAML file.

    The directory of the file is remembered under `_base` so that
    adversary and oracle references resolve relative to it.
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")

    with open(config_path, 'r') as f:
        try:
            config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {config_path}: {e}") from e

    return parse_run_config(config, base=config_path.parent)


def parse_run_config(config: Dict[str, Any], base: Path | None = None) -> Dict[str, Any]:
    """Validate an already-parsed config mapping."""
    is_valid, error = validate_run_config(config)
    if not is_valid:
        raise ConfigError(error)
    config = dict(config)
    config['_base'] = str(base) if base is not None else "."
    return config


def resolve_reference(reference: str, base: str | Path = ".") -> Path:
    """
    Find a referenced file next to the config, then in the fixtures directory.
    """
    candidate = Path(base) / reference
    if candidate.exists():
        return candidate
    fallback = get_fixtures_path() / reference
    if fallback.exists():
        return fallback
    raise ConfigError(f"referenced file not found: {reference}")


def save_report(report: Dict[str, Any], path: str | Path):
    """Save a verification report to a YAML file."""
    report_path = Path(path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with open(report_path, 'w') as f:
        yaml.dump(report, f, default_flow_style=False, sort_keys=False)


def load_report(path: str | Path) -> Dict[str, Any]:
    """Load a verification report written by save_report."""
    with open(path, 'r') as f:
        return yaml.safe_load(f) or {}
