"""
Tests for the trace format, run config loading and report bookkeeping.
"""

import pytest

from src.config import get_fixtures_path, validate_run_config
from src.errors import ConfigError, InvariantBreach
from src.status import CheckStatus, init_run_report, record_check
from src.storage import load_report, load_run_config, resolve_reference, save_report
from src.trace import StageTrace, TraceRecord, format_value


def sample_trace() -> StageTrace:
    trace = StageTrace("poset-diag", 3, adversaries=["mirror1", "chain"])
    trace.append(stage=1, kind="exp", j=1, leaf=0, length=1)
    trace.append(stage=2, kind="strat", req=0, verdict="not-ready", node=[], clause=None)
    trace.append(stage=2, kind="tree", size=5, blocked={7, 3})
    return trace


def test_value_formatting():
    assert format_value(None) == "-"
    assert format_value(True) == "true"
    assert format_value([3, 1]) == "3,1"
    assert format_value({3, 1}) == "1,3"
    assert format_value(()) == "-"
    with pytest.raises(ValueError):
        format_value("two words")
    with pytest.raises(ValueError):
        format_value("")


def test_records_keep_field_order_and_typed_access():
    trace = sample_trace()
    assert trace.header.render() == "engine=poset-diag horizon=3 adversaries=mirror1,chain"
    assert trace.header.items("adversaries") == ("mirror1", "chain")
    tree = trace.last(kind="tree")
    assert tree.render() == "stage=2 kind=tree size=5 blocked=3,7"
    assert tree.as_ints("blocked") == (3, 7)
    assert tree.stage == 2
    strat = trace.select(kind="strat")[0]
    assert strat.get("clause") is None
    assert strat.as_ints("node") == ()
    assert strat.as_int("missing", 4) == 4


def test_select_and_stages():
    trace = sample_trace()
    assert len(trace.select(stage=2)) == 2
    assert trace.select(kind="alert") == []
    assert trace.last(kind="alert") is None
    assert trace.stages() == [1, 2]


def test_rendered_trace_parses_back(tmp_path):
    trace = sample_trace()
    path = trace.save(tmp_path / "nested" / "run.trace")
    loaded = StageTrace.load(path)
    assert loaded.engine == "poset-diag" and loaded.horizon == 3
    assert list(loaded) == list(trace)
    assert loaded.render() == trace.render()
    assert loaded.meta()["adversaries"] == "mirror1,chain"


@pytest.mark.parametrize("text", [
    "",
    "horizon=3\n",
    "engine=x horizon=three\n",
    "engine=x horizon=3\nstage=one kind=tree\n",
    "engine=x horizon=3\nstage=1 kind\n",
])
def test_corrupt_traces_are_config_errors(text):
    with pytest.raises(ConfigError):
        StageTrace.parse(text)


def test_missing_trace_file(tmp_path):
    with pytest.raises(ConfigError):
        StageTrace.load(tmp_path / "absent.trace")


def test_record_parse_rejects_empty_values():
    with pytest.raises(ConfigError, match="line 4"):
        TraceRecord.parse("stage= kind=tree", 4)


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("config, fragment", [
    ({"engine": "lattice-diag", "horizon": 3}, "unknown engine"),
    ({"engine": "poset-diag", "horizon": 0}, "horizon"),
    ({"engine": "poset-diag", "horizon": True}, "horizon"),
    ({"engine": "rpo-ptime", "horizon": 3}, "oracle"),
    ({"engine": "rpo-punctual", "horizon": 3, "oracle": "fixture:chain"}, "case"),
    ({"engine": "rpo-punctual", "horizon": 3, "oracle": "fixture:chain", "case": "B", "case_data": {"a": 0}}, "u0"),
    ({"engine": "modal-diag", "horizon": 3, "witness_bound": "huge"}, "witness_bound"),
])
def test_invalid_run_configs(config, fragment):
    valid, error = validate_run_config(config)
    assert not valid
    assert fragment in error


def test_every_shipped_config_validates():
    configs = sorted(get_fixtures_path().glob("*.yaml"))
    assert configs
    for path in configs:
        config = load_run_config(path)
        assert config["_base"] == str(path.parent)


def test_config_loading_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "nope.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("engine: [poset-diag\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_run_config(broken)


def test_references_fall_back_to_fixtures(tmp_path):
    assert resolve_reference("chain.adv", tmp_path) == get_fixtures_path() / "chain.adv"
    local = tmp_path / "chain.adv"
    local.write_text("ret 1\n")
    assert resolve_reference("chain.adv", tmp_path) == local
    with pytest.raises(ConfigError):
        resolve_reference("nowhere.adv", tmp_path)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def test_one_failed_check_fails_the_report(tmp_path):
    report = init_run_report("poset-diag", 3, "run.trace")
    assert report["status"] == CheckStatus.PENDING
    record_check(report, "unique branching", True)
    assert report["status"] == CheckStatus.PASSED
    record_check(report, "blocking discipline", False, "two blocked nodes on level 1")
    record_check(report, "height", True)
    assert report["status"] == CheckStatus.FAILED
    assert report["checks"]["blocking discipline"]["detail"] == "two blocked nodes on level 1"

    path = tmp_path / "run.report.yaml"
    save_report(report, path)
    assert load_report(path)["checks"]["height"]["status"] == CheckStatus.PASSED


def test_invariant_breach_message():
    breach = InvariantBreach("property #", "a 3-cycle is already installed", 4)
    assert str(breach) == "property # at stage 4: a 3-cycle is already installed"
    assert breach.invariant == "property #" and breach.stage == 4
