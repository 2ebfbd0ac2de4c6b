"""
Configuration management for Punctual.
"""

import os
from pathlib import Path
from typing import Any, Dict
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

ENGINES = ("poset-diag", "modal-diag", "rpo-ptime", "rpo-punctual", "succ-diag", "prefix-copy")


def get_fixtures_path() -> Path:
    """
    Get the directory holding shipped fixture configs and adversary programs.

    Returns path from PUNCTUAL_FIXTURES_DIR env var, or ./fixtures if not set.
    """
    fixtures_env = os.getenv("PUNCTUAL_FIXTURES_DIR", "")
    if fixtures_env:
        return Path(fixtures_env).expanduser().resolve()
    else:
        return Path(__file__).resolve().parent.parent / "fixtures"


def get_trace_path() -> Path:
    """Get the default directory for trace files."""
    return Path(os.getenv("PUNCTUAL_TRACE_DIR", "traces"))


def get_node_budget() -> int:
    """
    Get the largest structure an engine may build.

    Exceeding it is an error, never a silent truncation.
    """
    return int(os.getenv("PUNCTUAL_NODE_BUDGET", "100000"))


def get_fuel_base() -> int:
    """Get the base of the default fuel policy, base * (s + 1) ** 2."""
    return int(os.getenv("PUNCTUAL_FUEL_BASE", "1000"))


def get_oracle_steps() -> int:
    """Get l, the number of oracle steps a copier runs per stage."""
    return int(os.getenv("PUNCTUAL_ORACLE_STEPS", "4"))


def get_witness_bound() -> str:
    """
    Get how the alert strategy sizes its witness family.

    Options: "card" (card of D_s) and "cycle-atoms" (number of installed cycle atoms).
    Defaults to "card".
    """
    return os.getenv("PUNCTUAL_WITNESS_BOUND", "card")


def get_log_level() -> str:
    """Get the logging level name for engine modules."""
    return os.getenv("PUNCTUAL_LOG_LEVEL", "WARNING").upper()


def get_verbose() -> bool:
    """
    Get whether the CLI prints per-stage progress.

    Returns True if PUNCTUAL_VERBOSE is set to "true" or "1".
    """
    value = os.getenv("PUNCTUAL_VERBOSE", "false").lower()
    return value in ("true", "1", "yes")


def fuel_policy(stage: int, base: int | None = None) -> int:
    """Step budget granted to one adversary query at the given stage."""
    if base is None:
        base = get_fuel_base()
    return base * (stage + 1) ** 2


def validate_run_config(config: Dict[str, Any]) -> tuple[bool, str]:
    """
    Validate a loaded run config.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(config, dict):
        return False, "run config must be a mapping"

    engine = config.get("engine")
    if engine not in ENGINES:
        return False, f"unknown engine {engine!r}; expected one of {', '.join(ENGINES)}"

    horizon = config.get("horizon")
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        return False, "horizon must be an integer >= 1"

    if engine in ("rpo-ptime", "rpo-punctual", "prefix-copy") and not config.get("oracle"):
        return False, f"engine {engine} needs an oracle"

    if engine == "rpo-punctual":
        case = config.get("case")
        if case not in ("A", "B"):
            return False, "rpo-punctual needs case: A or case: B"
        data = config.get("case_data") or {}
        needed = ("a",) if case == "A" else ("a", "u0", "u1")
        missing = [key for key in needed if key not in data]
        if missing:
            return False, f"case {case} needs case_data keys {', '.join(missing)}"

    witness_bound = config.get("witness_bound", get_witness_bound())
    if witness_bound not in ("card", "cycle-atoms"):
        return False, f"unknown witness_bound {witness_bound!r}"

    return True, ""
