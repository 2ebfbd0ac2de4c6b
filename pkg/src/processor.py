"""
Run and verify orchestration: loads adversaries and oracles named in a run
config, drives the selected engine, and replays traces through the
verification suites of their engine.
"""

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from . import modal_diag, poset_diag, prefix_copy, rpo_copy, succ_diag
from .adversary import ModalAdversary, SuccessorAdversary, load_program
from .config import get_trace_path, get_verbose, get_witness_bound
from .errors import ConfigError, InvariantBreach, PunctualError, StructureError
from .fixtures import build_fixture, program_oracle
from .profile import StepProfile, step_profile
from .status import CheckStatus, ExitStatus, init_run_report, record_check
from .storage import load_run_config, parse_run_config, resolve_reference, save_report
from .structures import serialize
from .trace import StageTrace

FIXTURE_PREFIX = "fixture:"

# which fixture registry an engine draws its adversaries from
ADVERSARY_KINDS = {
    "poset-diag": "poset",
    "modal-diag": "modal",
    "succ-diag": "succ",
}
STRUCTURE_ADVERSARIES = {"modal": ModalAdversary, "succ": SuccessorAdversary}


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def load_adversary(entry: Any, kind: str, base: str = "."):
    """
    Turn one `adversaries:` entry into an adversary.

    Accepted forms: `fixture:<spec>`, a path to a DSL program (poset
    adversaries only), or a mapping `{name, symbols: {symbol: path}}` for
    structure adversaries.
    """
    if isinstance(entry, str) and entry.startswith(FIXTURE_PREFIX):
        return build_fixture(kind, entry[len(FIXTURE_PREFIX):])
    if isinstance(entry, str):
        if kind != "poset":
            raise ConfigError(f"{kind} adversaries need one program per symbol, got the single file {entry}")
        return load_program(resolve_reference(entry, base))
    if isinstance(entry, dict) and kind in STRUCTURE_ADVERSARIES:
        name = entry.get("name") or "adversary"
        symbols = entry.get("symbols") or {}
        if not isinstance(symbols, dict):
            raise ConfigError(f"adversary {name}: symbols must map symbol names to program files")
        programs = {symbol: load_program(resolve_reference(path, base)) for symbol, path in symbols.items()}
        return STRUCTURE_ADVERSARIES[kind](name, programs)
    raise ConfigError(f"cannot read adversary entry {entry!r}")


def load_adversaries(config: Dict[str, Any]) -> List[Any]:
    kind = ADVERSARY_KINDS[config["engine"]]
    entries = config.get("adversaries") or []
    if not isinstance(entries, list):
        raise ConfigError("adversaries must be a list")
    return [load_adversary(entry, kind, config.get("_base", ".")) for entry in entries]


def load_oracle(config: Dict[str, Any]) -> Tuple[Any, str]:
    """The oracle iterator of a copy config and the name recorded in the trace."""
    entry = config["oracle"]
    if not isinstance(entry, str):
        raise ConfigError(f"oracle must be a string, got {entry!r}")
    if entry.startswith(FIXTURE_PREFIX):
        spec = entry[len(FIXTURE_PREFIX):]
        return build_fixture("oracle", spec), spec.split(":", 1)[0]
    program = load_program(resolve_reference(entry, config.get("_base", ".")))
    return program_oracle(program), program.name


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    trace: StageTrace
    structure: Any
    state: Any


def run_engine(config: Dict[str, Any]) -> RunResult:
    """
    Execute the engine a validated config selects.

    Raises:
        ConfigError: unreadable adversaries, oracles or engine options
        InvariantBreach: a construction invariant failed
        StructureError: the node budget was exceeded
    """
    engine = config["engine"]
    horizon = config["horizon"]
    fuel_base = config.get("fuel_base")
    steps = config.get("oracle_steps")

    if engine == "poset-diag":
        state = poset_diag.run_construction(load_adversaries(config), horizon, fuel_base)
        return RunResult(state.trace, state.tree, state)
    if engine == "modal-diag":
        witness_bound = config.get("witness_bound", get_witness_bound())
        state = modal_diag.run_modal_diagonalizer(load_adversaries(config), horizon, fuel_base, witness_bound)
        return RunResult(state.trace, None, state)
    if engine == "succ-diag":
        state = succ_diag.run_successor_diagonalizer(load_adversaries(config), horizon, fuel_base)
        return RunResult(state.trace, state.tree(), state)

    oracle, name = load_oracle(config)
    if engine == "rpo-ptime":
        state = rpo_copy.ptime_rpo_copy(oracle, horizon, steps, name)
    elif engine == "rpo-punctual":
        state = rpo_copy.punctual_rpo_copy(oracle, config["case"], config["case_data"], horizon, steps, name)
    elif engine == "prefix-copy":
        state = prefix_copy.prefix_tree_copy(
            oracle, horizon,
            mode=config.get("mode", "branch"),
            presentation=config.get("presentation", "plain"),
            hub=config.get("hub"),
            steps=steps,
            name=name,
        )
    else:
        raise ConfigError(f"unknown engine {engine!r}")
    return RunResult(state.trace, state.image(), state)


def _output_path(config: Dict[str, Any], key: str, fallback: Optional[Path] = None) -> Optional[Path]:
    value = config.get(key)
    return fallback if value is None else Path(value)


def run(config_path: str, horizon: Optional[int] = None, out: Optional[str] = None) -> Tuple[int, str]:
    """
    Run one config and write its trace.

    Args:
        config_path: YAML run config
        horizon: Overrides the config's horizon
        out: Overrides the config's output path

    Returns:
        Tuple of (exit status, message)
    """
    try:
        config = load_run_config(config_path)
        if horizon is not None:
            config = parse_run_config({**config, "horizon": horizon}, base=Path(config["_base"]))
        default = get_trace_path() / f"{Path(config_path).stem}.trace"
        trace_path = Path(out) if out else _output_path(config, "out", default)

        print(f"🔄 Running {config['engine']} to horizon {config['horizon']}")
        result = run_engine(config)
        result.trace.save(trace_path)
        print(f"💾 Trace written to {trace_path} ({len(result.trace)} records)")

        export = _output_path(config, "export")
        if export is not None:
            if result.structure is None:
                raise ConfigError(f"{config['engine']} builds no finite structure to export")
            export.parent.mkdir(parents=True, exist_ok=True)
            export.write_text(serialize(result.structure))
            print(f"💾 Structure written to {export}")
    except ConfigError as e:
        print(f"❌ Config error: {e}", file=sys.stderr)
        return ExitStatus.CONFIG_ERROR, f"❌ Config error: {e}"
    except (InvariantBreach, StructureError) as e:
        print(f"❌ Run failed: {e}", file=sys.stderr)
        return ExitStatus.BREACH, f"❌ Run failed: {e}"
    return ExitStatus.CLEAN, f"✅ {config['engine']} finished at horizon {config['horizon']}: {trace_path}"


# ---------------------------------------------------------------------------
# Verifying
# ---------------------------------------------------------------------------

def _certificates(trace: StageTrace) -> Dict[str, str]:
    names = trace.header.items("adversaries") if "adversaries" in trace.header else ()
    certificates = {}
    for i, name in enumerate(names):
        if trace.engine == poset_diag.ENGINE:
            text = poset_diag.non_iso_certificate(trace, i).describe()
        else:
            certify = modal_diag.modal_certificate if trace.engine == modal_diag.ENGINE else succ_diag.succ_certificate
            tag, stage, detail = certify(trace, i)
            where = f" at stage {stage}" if stage is not None else ""
            text = f"R{i}: {tag}{where}" + (f" ({detail})" if detail else "")
        certificates[f"R{i}:{name}"] = text
    return certificates


def _suites(trace: StageTrace) -> List[Tuple[str, bool, str]]:
    engine = trace.engine
    if engine == poset_diag.ENGINE:
        return poset_diag.verify_poset_trace(trace)
    if engine == modal_diag.ENGINE:
        return modal_diag.verify_modal_trace(trace)
    if engine in (rpo_copy.ENGINE_PTIME, rpo_copy.ENGINE_PUNCTUAL):
        return rpo_copy.verify_copy_trace(trace)
    if engine == succ_diag.ENGINE:
        return succ_diag.verify_succ_trace(trace)
    if engine == prefix_copy.ENGINE:
        return prefix_copy.verify_prefix_trace(trace)
    raise ConfigError(f"trace of unknown engine {engine!r}")


def verify_trace(
    trace: StageTrace,
    config: Optional[Dict[str, Any]] = None,
    source: str = ""
) -> Tuple[Dict[str, Any], Optional[StepProfile]]:
    """
    Replay every invariant suite of the trace's engine.

    With the run config at hand, modal traces also get their decisions
    re-derived against fresh adversaries.

    Returns:
        Tuple of (report, step profile or None)
    """
    report = init_run_report(trace.engine, trace.horizon, source)
    checks = list(_suites(trace))
    if config is not None and trace.engine == modal_diag.ENGINE:
        checks += modal_diag.replay_deactivations(trace, load_adversaries(config), config.get("fuel_base"))

    profile = None
    if "query" in trace.header:
        profile = step_profile(trace)
        checks += list(profile.checks)
        report['summary']['profile'] = {
            'degree': profile.degree,
            'slope': round(profile.slope, 3),
            'constant': round(profile.constant, 3),
            'rows': len(profile.rows),
            'fit': profile.describe(),
        }

    for name, passed, detail in checks:
        record_check(report, name, passed, detail)
        if get_verbose():
            print(f"{'✅' if passed else '❌'} {name}" + (f": {detail}" if detail else ""))

    report['certificates'] = _certificates(trace)
    report['summary']['records'] = len(trace)
    report['summary']['failed'] = [name for name, passed, _ in checks if not passed]
    if report['status'] == CheckStatus.PENDING:
        report['status'] = CheckStatus.PASSED
    return report, profile


def verify(trace_path: str, out: Optional[str] = None, config_path: Optional[str] = None) -> Tuple[int, Dict[str, Any]]:
    """
    Verify a trace file and write the report (and step profile CSV).

    Returns:
        Tuple of (exit status, report); the report carries an `error` entry
        when the trace or config could not be read.
    """
    try:
        trace = StageTrace.load(trace_path)
        config = load_run_config(config_path) if config_path else None
        report, profile = verify_trace(trace, config, str(trace_path))
    except ConfigError as e:
        print(f"❌ Cannot verify {trace_path}: {e}", file=sys.stderr)
        return ExitStatus.CONFIG_ERROR, {'error': str(e)}
    except PunctualError as e:
        print(f"❌ Verification of {trace_path} broke: {e}", file=sys.stderr)
        return ExitStatus.BREACH, {'error': str(e)}

    report_path = Path(out) if out else Path(trace_path).with_suffix(".report.yaml")
    save_report(report, report_path)
    print(f"💾 Report written to {report_path}")
    if profile is not None:
        csv_path = report_path.with_suffix(".csv")
        csv_path.write_text(profile.csv())
        report['summary']['profile']['csv'] = str(csv_path)
        print(f"📈 Step profile: {profile.describe()} ({csv_path})")

    status = ExitStatus.CLEAN if report['status'] == CheckStatus.PASSED else ExitStatus.BREACH
    return status, report


def run_and_verify(config: Dict[str, Any]) -> Tuple[StageTrace, Dict[str, Any], Optional[StepProfile]]:
    """Run an already-parsed config and verify its trace in memory."""
    result = run_engine(config)
    report, profile = verify_trace(result.trace, config)
    return result.trace, report, profile

