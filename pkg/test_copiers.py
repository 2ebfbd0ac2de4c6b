"""
Tests for the copy engines: r.p.o. copies on strings and on numbers, the
prefix-tree copier, the successor diagonalizer and step profiles.
"""

import pytest

from src.adversary import load_program
from src.config import get_fixtures_path
from src.errors import ConfigError, InvariantBreach, StructureError
from src.fixtures import build_fixture, program_oracle
from src.prefix_copy import prefix_tree_copy, verify_prefix_trace
from src.processor import run_engine
from src.profile import fit_degree, relation_query, step_profile, step_table
from src.rpo_copy import (
    IntervalOrderCopier,
    OracleNormalizer,
    Reveal,
    ptime_rpo_copy,
    punctual_rpo_copy,
    verify_copy_trace,
)
from src.status import Certificate
from src.storage import load_run_config
from src.structures import isomorphic
from src.succ_diag import run_successor_diagonalizer, succ_certificate, verify_succ_trace
from src.trace import StageTrace

FIXTURES = get_fixtures_path()


def checks(results):
    return {name: passed for name, passed, _ in results}


def run_config(name: str):
    return run_engine(load_run_config(FIXTURES / name))


# ---------------------------------------------------------------------------
# Oracle normal form
# ---------------------------------------------------------------------------

def test_normalizer_waits_for_the_parent():
    source = OracleNormalizer([Reveal(1, 0), Reveal(0, None)], steps_per_stage=1)
    assert source.pull() is None
    assert source.pull() == Reveal(0, None)
    assert source.pull() == Reveal(1, 0)
    assert source.order == [0, 1]
    assert source.drained
    assert 1 in source and len(source) == 2


@pytest.mark.parametrize("reveals", [
    [Reveal(0, None), Reveal(0, None)],
    [Reveal(0, None), Reveal(1, None)],
])
def test_normalizer_rejects_repeats_and_second_roots(reveals):
    source = OracleNormalizer(reveals, steps_per_stage=2)
    with pytest.raises(InvariantBreach, match="oracle normal form"):
        source.pull()


def test_normalizer_needs_full_sibling_facts():
    source = OracleNormalizer([Reveal(0, None), Reveal(1, 0), Reveal(2, 0)], steps_per_stage=1)
    source.pull()
    source.pull()
    with pytest.raises(InvariantBreach, match="siblings are"):
        source.pull()


def test_normalizer_needs_a_step():
    with pytest.raises(ConfigError):
        OracleNormalizer([], steps_per_stage=0)


# ---------------------------------------------------------------------------
# Copies on binary strings
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("spec", ["chain", "binary-growth", "comb"])
def test_string_copies_verify(spec):
    state = ptime_rpo_copy(build_fixture("oracle", spec), 60, steps=4, name=spec)
    assert all(checks(verify_copy_trace(state.trace)).values())
    assert state.checkpoints
    assert isomorphic(state.image(), state.fragment()) is not None


def test_chain_copy_triggers_on_the_first_grandchild():
    state = ptime_rpo_copy(build_fixture("oracle", "chain"), 12, steps=4)
    trigger = state.trace.select(kind="trigger")[0]
    assert (trigger.as_int("a"), trigger.as_int("b"), trigger.as_int("c")) == (0, 1, 2)
    assert state.trace.select(kind="node", label="root")[0].as_int("size") == 0
    assert state.trace.header.get("query") == "length"


def test_string_copy_of_a_program_oracle():
    program = load_program(FIXTURES / "oracle-chain.adv")
    state = ptime_rpo_copy(program_oracle(program), 40, steps=4, name=program.name)
    results = checks(verify_copy_trace(state.trace))
    assert results["reservoir neutrality"] and results["domain coverage"]
    assert all(results.values())


def test_broom_config_verifies():
    result = run_config("rpo-ptime-broom.yaml")
    assert result.trace.header.get("oracle") == "oracle-broom"
    assert all(checks(verify_copy_trace(result.trace)).values())


def test_tampered_edge_breaks_copy_soundness():
    trace = ptime_rpo_copy(build_fixture("oracle", "chain"), 12, steps=4).trace
    edge = trace.select(kind="edge")[0]
    text = trace.render().replace(edge.render(), edge.render().replace(f"parent={edge['parent']}", "parent=^"))
    results = checks(verify_copy_trace(StageTrace.parse(text)))
    assert not results["copy soundness"]


# ---------------------------------------------------------------------------
# Copies on natural numbers
# ---------------------------------------------------------------------------

def test_grandchild_case_hangs_spares_below_a():
    state = punctual_rpo_copy(build_fixture("oracle", "star-of-paths"), "A", {"a": 0}, 60, steps=4)
    assert state.trace.select(kind="connect")
    assert state.checkpoints
    assert all(checks(verify_copy_trace(state.trace)).values())


@pytest.mark.parametrize("horizon", [10, 20, 40, 60])
@pytest.mark.parametrize("pattern", ["omega", "zigzag"])
def test_interval_case_verifies(pattern, horizon):
    oracle = build_fixture("oracle", f"interval:pattern={pattern}")
    state = punctual_rpo_copy(oracle, "B", {"a": 0, "u0": 1, "u1": 2}, horizon, steps=4)
    results = checks(verify_copy_trace(state.trace))
    assert "domain coverage" not in results
    assert all(results.values())
    assert len(state.spares) == horizon


@pytest.mark.parametrize("pattern", ["omega", "zigzag"])
def test_interval_spares_follow_the_element_order(pattern):
    oracle = build_fixture("oracle", f"interval:pattern={pattern}")
    state = punctual_rpo_copy(oracle, "B", {"a": 0, "u0": 1, "u1": 2}, 40, steps=4)
    copier = state.order_copier
    matched = [d for d in copier.order if d in copier.match]
    assert len(matched) >= 2
    for i, x in enumerate(matched):
        for y in matched[i + 1:]:
            assert state.source.is_less(copier.match[x], copier.match[y])
    assert all(copier.before(x, p) for x in matched for p in copier.pending)


def test_interval_copier_keeps_waiting_spares_at_the_right_end():
    copier = IntervalOrderCopier(lambda x, y: x < y)
    assert copier.add_spare(100) is None
    assert copier.add_spare(101) is None
    assert copier.offer(5) == 100
    assert copier.offer(3) is None
    assert copier.add_spare(102) == 3
    assert copier.order == [102, 100, 101]
    assert copier.offer(4) is None
    assert copier.add_spare(103) == 4
    assert copier.order == [102, 103, 100, 101]
    assert copier.offer(9) == 101
    assert copier.before(100, 101) and copier.pending == []


@pytest.mark.parametrize("case, data", [
    ("C", {"a": 0}),
    ("A", {}),
    ("B", {"a": 0, "u0": 1}),
])
def test_case_data_errors(case, data):
    with pytest.raises(ConfigError):
        punctual_rpo_copy(build_fixture("oracle", "chain"), case, data, 5)


# ---------------------------------------------------------------------------
# Prefix trees
# ---------------------------------------------------------------------------

def test_branch_copy_flushes_the_queue():
    state = prefix_tree_copy(build_fixture("oracle", "prefix-branch"), 100, mode="branch", steps=4)
    assert state.flushes >= 1
    assert checks(verify_prefix_trace(state.trace)) == {
        "W discipline": True,
        "embedding consistency": True,
        "negative consistency": True,
        "final fragment": True,
    }
    assert isomorphic(state.image(), state.fragment()) is not None


def test_hub_copy_uses_placeholders():
    result = run_config("prefix-hub.yaml")
    assert result.trace.select(kind="node", label="placeholder")
    assert all(checks(verify_prefix_trace(result.trace)).values())


def test_ptime_presentation_writes_strings():
    state = prefix_tree_copy(build_fixture("oracle", "prefix-branch"), 30, presentation="ptime", steps=4)
    assert all("string" in r for r in state.trace.select(kind="node"))
    assert all(checks(verify_prefix_trace(state.trace)).values())


def test_prefix_copy_options():
    with pytest.raises(ConfigError, match="hub"):
        prefix_tree_copy(build_fixture("oracle", "hub"), 10, mode="hub")
    with pytest.raises(ConfigError):
        prefix_tree_copy(build_fixture("oracle", "hub"), 10, mode="star")
    with pytest.raises(ValueError):
        prefix_tree_copy(build_fixture("oracle", "hub"), 0)


# ---------------------------------------------------------------------------
# Successor trees
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def succ_state():
    return run_config("succ-corpus.yaml").state


def test_successor_layers_follow_the_verdicts(succ_state):
    assert [len(layer) for layer in succ_state.layers] == [1, 1, 2, 4, 8, 16, 32]
    assert succ_state.next_id == 65


@pytest.mark.parametrize("req, expected", [
    (0, (Certificate.FULLNESS_FLIP, 1, "depth=1 ours=not-full")),
    (1, (Certificate.NOT_SUCCESSOR_TREE, 2, "injectivity")),
    (2, (Certificate.FRAGMENT_MISMATCH, 3, "depth<=2")),
    (3, (Certificate.FRAGMENT_MISMATCH, 4, "depth<=3")),
])
def test_successor_certificates(succ_state, req, expected):
    assert succ_certificate(succ_state.trace, req) == expected


def test_successor_trace_verifies(succ_state):
    assert checks(verify_succ_trace(succ_state.trace)) == {
        "replay": True,
        "layer counts": True,
        "fullness flip": True,
        "successor tree": True,
    }


def test_unflipped_verdict_is_caught():
    trace = run_successor_diagonalizer([build_fixture("succ", "full-binary")], 2).trace
    text = trace.render().replace("verdict=flip", "verdict=full")
    results = checks(verify_succ_trace(StageTrace.parse(text)))
    assert not results["fullness flip"]
    assert results["layer counts"]


def test_successor_budget_and_horizon():
    with pytest.raises(StructureError, match="node budget"):
        run_successor_diagonalizer([], 6, budget=20)
    with pytest.raises(ValueError):
        run_successor_diagonalizer([], 0)


# ---------------------------------------------------------------------------
# Step profiles
# ---------------------------------------------------------------------------

def test_fit_degree_of_a_quadratic_table():
    degree, slope, constant = fit_degree([(1, 1), (2, 4), (4, 16), (8, 64)])
    assert degree == 2
    assert slope == pytest.approx(2.0)
    assert constant == pytest.approx(1.0)


def test_fit_degree_needs_two_points():
    assert fit_degree([(0, 3), (1, 5)]) == (0, 0.0, 5.0)


def test_intro_table_charges_each_size_its_latest_introduction():
    trace = StageTrace("prefix-copy", 2, query="intro")
    trace.append(stage=0, kind="node", id=0, size=0, label="tip")
    trace.append(stage=0, kind="stage", steps=3)
    trace.append(stage=1, kind="node", id=3, size=3, label="tip")
    trace.append(stage=1, kind="stage", steps=2)
    trace.append(stage=2, kind="node", id=1, size=1, label="inner")
    trace.append(stage=2, kind="stage", steps=4)
    assert step_table(trace) == [(0, 3), (1, 9), (3, 9)]


def test_step_table_needs_a_query_model():
    with pytest.raises(ConfigError, match="no step profile"):
        step_table(StageTrace("poset-diag", 3))


def test_string_copy_profile():
    trace = ptime_rpo_copy(build_fixture("oracle", "binary-growth"), 60, steps=4).trace
    profile = step_profile(trace)
    assert profile.rows
    assert profile.csv().startswith("n,steps\n")
    assert checks(profile.checks) == {"long-member discipline": True, "decided by length": True}
    assert profile.describe().startswith("cost <= ")


def test_long_chain_copy_keeps_checkpointing():
    state = ptime_rpo_copy(build_fixture("oracle", "chain"), 200, steps=4)
    assert len(state.checkpoints) >= 20
    profile = step_profile(state.trace)
    assert profile.degree <= 2


@pytest.fixture(scope="module")
def growth_trace():
    return ptime_rpo_copy(build_fixture("oracle", "binary-growth"), 60, steps=4).trace


def test_relation_queries_replay_up_to_the_longer_string(growth_trace):
    edge = growth_trace.select(kind="edge")[-1]
    answer = relation_query(growth_trace, edge["child"], edge["parent"])
    assert answer.relation == "parent"
    assert relation_query(growth_trace, edge["parent"], edge["child"]).relation == "child"

    sizes = {r["id"]: r.as_int("size") for r in growth_trace.select(kind="node")}
    assert answer.stage <= max(sizes[edge["child"]], sizes[edge["parent"]])
    replayed = [r for r in growth_trace.select(kind="stage") if r.stage <= answer.stage]
    assert answer.steps == sum(r.as_int("steps") for r in replayed)


def test_relation_queries_see_sibling_order(growth_trace):
    fact = growth_trace.select(kind="less")[0]
    assert relation_query(growth_trace, fact["x"], fact["y"]).relation == "less"
    assert relation_query(growth_trace, fact["y"], fact["x"]).relation == "greater"


def test_relation_query_needs_known_elements(growth_trace):
    with pytest.raises(ConfigError, match="never introduced"):
        relation_query(growth_trace, "not-a-string", "^")


@pytest.mark.parametrize("spec", ["chain", "binary-growth"])
def test_replayed_queries_stay_quadratic(spec):
    trace = ptime_rpo_copy(build_fixture("oracle", spec), 120, steps=4).trace
    rows = step_table(trace)
    assert len(rows) >= 5
    assert [steps for _, steps in rows] == sorted(steps for _, steps in rows)
    assert fit_degree(rows)[0] <= 2
