"""
Status constants and helpers for runs, requirements and verification checks.
"""

from datetime import datetime
from typing import Dict, Any


class ExitStatus:
    """Process exit codes of the CLI."""
    CLEAN = 0
    BREACH = 2
    CONFIG_ERROR = 3


class CheckStatus:
    """Status for individual verification checks."""
    PENDING = "pending"
    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"


class RequirementState:
    """Lifecycle of a modal requirement."""
    INACTIVE = "inactive"
    ALERT = "alert"
    ACTIVE = "active"
    DEACTIVATED = "deactivated"


class Event:
    """Trace events of the modal diagonalizer."""
    MONITOR = "monitor"
    ALERT = "alert"
    ACTIVE = "active"
    DEACTIVATE = "deactivate"
    FORBID = "forbid"
    CYCLE = "cycle"
    PROMOTE = "promote"


class Certificate:
    """Tags of non-isomorphism certificates across engines."""
    NOT_POSET_TREE = "not-poset-tree"
    LEVEL_ABSENT = "level-absent"
    FRAGMENT_MISMATCH = "fragment-mismatch"
    BLOCKED_DEFICIT = "blocked-deficit"
    DISQUALIFIED = "disqualified"
    UNDECIDED = "undecided"
    FORBIDDEN_PRIME = "forbidden-prime"
    ACTIVE_OPEN = "active-open"
    NOT_SUCCESSOR_TREE = "not-successor-tree"
    FULLNESS_FLIP = "fullness-flip"
    DEACTIVATED = "deactivated"


class Reason:
    """Deactivation reasons of modal requirements."""
    MONITOR_A = "a"
    MONITOR_B = "b"
    MONITOR_C = "c"
    MONITOR_D = "d"
    NON_INJECTIVE = "i.a"
    BAD_ORBIT = "i.b"
    COUNTING = "i.e"
    ORBIT_OBSTRUCTION = "ii.a"
    FORBID = "forbid"
    P2_VIOLATION = "P.2-violation"
    DISQUALIFIED = "disqualified"


def init_run_report(engine: str, horizon: int, source: str = "") -> Dict[str, Any]:
    """
    Initialize a verification report for one trace.

    Args:
        engine: Engine that produced the trace
        horizon: Horizon of the run
        source: Trace file the report was built from

    Returns:
        Initialized report dictionary
    """
    return {
        'engine': engine,
        'horizon': horizon,
        'source': source,
        'status': CheckStatus.PENDING,
        'created_at': datetime.now().isoformat(),
        'updated_at': datetime.now().isoformat(),
        'checks': {},
        'certificates': {},
        'summary': {}
    }


def record_check(
    report: Dict[str, Any],
    check_name: str,
    passed: bool,
    detail: str = None
) -> Dict[str, Any]:
    """
    Record the outcome of a verification check.

    A single failed check marks the whole report failed.

    Args:
        report: Report dictionary
        check_name: Name of the invariant suite
        passed: Whether the check held
        detail: Optional detail (first violation, counts)

    Returns:
        Updated report dictionary
    """
    report['updated_at'] = datetime.now().isoformat()

    status = CheckStatus.PASSED if passed else CheckStatus.FAILED
    check = report['checks'].setdefault(check_name, {})
    check['status'] = status
    check['checked_at'] = datetime.now().isoformat()

    if detail:
        check['detail'] = detail

    if not passed:
        report['status'] = CheckStatus.FAILED
    elif report['status'] == CheckStatus.PENDING:
        report['status'] = CheckStatus.PASSED

    return report
