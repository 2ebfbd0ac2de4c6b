"""
Tests for the poset tree diagonalizer, its certificates and the lattice extension.
"""

import pytest

from src.adversary import load_program
from src.config import get_fixtures_path
from src.errors import StructureError
from src.fixtures import build_fixture
from src.poset_diag import (
    LatticeExtension,
    brute_force_join,
    join_meet,
    lattice_extension,
    new_state,
    non_iso_certificate,
    run_construction,
    run_stage,
    verify_poset_trace,
)
from src.status import Certificate
from src.structures import FinitePosetTree, branching_report
from src.trace import StageTrace


def corpus():
    specs = ["mirror:delay=1", "chain", "star"]
    adversaries = [build_fixture("poset", spec) for spec in specs]
    adversaries.append(load_program(get_fixtures_path() / "antichain.adv"))
    adversaries += [build_fixture("poset", "irreflexive"), build_fixture("poset", "slow")]
    adversaries.append(load_program(get_fixtures_path() / "chain.adv"))
    return adversaries


@pytest.fixture(scope="module")
def corpus_trace() -> StageTrace:
    return run_construction(corpus(), 9).trace


def test_first_expansionary_stage_branches_the_root():
    state = run_stage(new_state())
    assert state.stage == 1
    assert state.tree == FinitePosetTree(0, {1: 0, 2: 0})
    record = state.trace.last(kind="exp")
    assert record.render() == "stage=1 kind=exp j=1 leaf=0 length=1 chain=0 first=1 x=0"


def test_third_stage_gives_fresh_lengths():
    state = run_construction([], 3)
    tree = state.tree
    assert len(tree) == 8
    assert dict(tree.parent) == {1: 0, 2: 0, 3: 1, 4: 1, 5: 2, 6: 5, 7: 5}
    report = branching_report(tree)
    assert report.uniquely_branching
    assert report.lengths() == (1, 2, 3)


def test_horizon_must_be_positive():
    with pytest.raises(ValueError):
        run_construction([], 0)


def test_node_budget_stops_the_run():
    with pytest.raises(StructureError, match="node budget"):
        run_construction([], 9, budget=20)


def test_empty_run_verifies():
    trace = run_construction([], 7).trace
    assert all(passed for _, passed, _ in verify_poset_trace(trace))


def test_corpus_run_verifies(corpus_trace):
    results = {name: passed for name, passed, _ in verify_poset_trace(corpus_trace)}
    assert results == {
        "replay": True,
        "unique branching": True,
        "F discipline": True,
        "open leaf": True,
        "blocked-deficit persistence": True,
    }


def test_honest_mirror_is_blocked_below_level_one(corpus_trace):
    block = corpus_trace.select(kind="strat", req=0, move="block")
    assert [r.stage for r in block] == [6]
    assert block[0].as_int("node") == 1
    assert block[0].as_int("M") > block[0].as_int("N")

    certificate = non_iso_certificate(corpus_trace, 0)
    assert certificate.tag == Certificate.BLOCKED_DEFICIT
    assert certificate.stage == 8
    assert dict(certificate.detail)["node"] == "1"


def test_mirror_waits_for_a_stable_fragment(corpus_trace):
    reasons = [r.get("reason") for r in corpus_trace.select(kind="strat", req=0)]
    assert reasons[:2] == ["level-absent-theirs", "unstable"]


@pytest.mark.parametrize("req, tag, detail", [
    (1, Certificate.LEVEL_ABSENT, ("level", "2")),
    (2, Certificate.LEVEL_ABSENT, ("level", "3")),
    (3, Certificate.NOT_POSET_TREE, ("clause", "greatest_element")),
    (4, Certificate.NOT_POSET_TREE, ("clause", "reflexivity")),
    (5, Certificate.DISQUALIFIED, ("cell", "cell:0,0")),
    (6, Certificate.LEVEL_ABSENT, ("level", "7")),
])
def test_corpus_certificates(corpus_trace, req, tag, detail):
    certificate = non_iso_certificate(corpus_trace, req)
    assert certificate.tag == tag
    assert certificate.stage == 8
    assert detail in certificate.detail


def test_strategies_wait_for_their_stage(corpus_trace):
    first = corpus_trace.select(kind="strat", req=6)[0]
    assert first.stage == 6
    assert first.get("reason") == "previous"


def test_tampered_size_fails_replay():
    text = run_construction([], 3).trace.render()
    tampered = StageTrace.parse(text.replace("stage=3 kind=tree size=8", "stage=3 kind=tree size=9"))
    results = {name: passed for name, passed, _ in verify_poset_trace(tampered)}
    assert not results["replay"]
    assert results["unique branching"]


def test_blocking_the_root_breaks_f_discipline():
    trace = run_construction([], 3).trace
    trace.append(stage=4, kind="strat", req=0, move="block", node=0)
    trace.append(stage=4, kind="tree", size=8, blocked=[0])
    results = {name: passed for name, passed, _ in verify_poset_trace(trace)}
    assert results["replay"]
    assert not results["F discipline"]


def test_join_is_the_meeting_point_of_the_chains():
    tree = run_construction([], 3).tree
    assert join_meet(tree, 3, 4).join == 1
    assert join_meet(tree, 3, 6).join == 0
    assert join_meet(tree, 3, 1).reversed_meet == 1
    for x in tree.nodes:
        for y in tree.nodes:
            assert join_meet(tree, x, y).join == brute_force_join(tree, x, y)
    with pytest.raises(StructureError):
        join_meet(tree, 3, 99)


def test_lattice_extension_is_complemented():
    lattice = lattice_extension(run_construction([], 3))
    assert lattice.elements == tuple(range(9))
    assert lattice.top == 1
    assert lattice.complement(2) == 3
    assert lattice.meet(4, 5) == 0
    assert lattice.join(4, 5) == 2
    assert lattice.is_complemented()


def test_lattice_extension_needs_a_binary_root():
    with pytest.raises(StructureError):
        LatticeExtension(FinitePosetTree(0, {1: 0}))


@pytest.mark.parametrize("delay", [1, 2, 3, 4, 5])
def test_delayed_mirrors_are_blocked(delay):
    trace = run_construction([build_fixture("poset", f"mirror:delay={delay}")], 9).trace
    block = trace.select(kind="strat", req=0, move="block")
    assert [(r.stage, r.as_int("node")) for r in block] == [(6, 1)]
    certificate = non_iso_certificate(trace, 0)
    assert (certificate.tag, certificate.stage) == (Certificate.BLOCKED_DEFICIT, 8)
    assert all(passed for _, passed, _ in verify_poset_trace(trace))


def test_longer_delays_answer_later():
    def first_reason(delay):
        trace = run_construction([build_fixture("poset", f"mirror:delay={delay}")], 2, fuel_base=2).trace
        return trace.last(kind="strat", req=0)

    assert first_reason(1).get("reason") == "level-absent-theirs"
    late = first_reason(2)
    assert (late.get("reason"), late.get("clause")) == ("disqualified", "cell:0,3")
