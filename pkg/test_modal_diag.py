"""
Tests for the modal algebra diagonalizer.

The corpus below has one adversary per exit of the strategy; with the
cycle-atoms witness bound it runs to horizon 7 in well under a second.
"""

import pytest

from src.adversary import SignatureHandle, modal_probe
from src.errors import ConfigError, InvariantBreach
from src.fixtures import build_fixture, modal_algebra
from src.modal_diag import (
    MonitorHit,
    is_bad_size,
    iteration_depth,
    modal_certificate,
    monitoring_check,
    new_state,
    replay_deactivations,
    run_modal_diagonalizer,
    run_stage,
    stage_prime,
    verify_modal_trace,
)
from src.status import Certificate, Event, Reason, RequirementState
from src.trace import StageTrace

CORPUS = [
    "violate:condition=b",
    "violate:condition=a",
    "merge",
    "orbit:first=9",
    "mirror:delay=0",
    "orbit:first=21",
    "violate:condition=d",
    "violate:condition=c",
]


def adversaries(specs):
    return [build_fixture("modal", spec) for spec in specs]


@pytest.fixture(scope="module")
def corpus_trace() -> StageTrace:
    return run_modal_diagonalizer(adversaries(CORPUS), 7, witness_bound="cycle-atoms").trace


def checks(results):
    return {name: passed for name, passed, _ in results}


def test_stage_primes_and_depth():
    assert [stage_prime(s) for s in range(1, 6)] == [3, 5, 7, 11, 13]
    assert iteration_depth(3) == 105
    with pytest.raises(ValueError):
        stage_prime(0)


@pytest.mark.parametrize("n, forbidden, bad", [
    (1, set(), True),
    (4, set(), True),
    (9, set(), True),
    (15, set(), False),
    (15, {5}, True),
    (11, {7}, False),
])
def test_bad_orbit_sizes(n, forbidden, bad):
    assert is_bad_size(n, forbidden) == bad


def test_no_adversaries_installs_every_cycle():
    trace = run_modal_diagonalizer([], 15, witness_bound="cycle-atoms").trace
    cycles = trace.select(event=Event.CYCLE)
    assert [r.as_int("p") for r in cycles] == [stage_prime(s) for s in range(1, 16)]
    assert cycles[-1].as_int("p") == 53
    assert trace.select(event=Event.PROMOTE) == []
    assert all(checks(verify_modal_trace(trace)).values())


def test_cycle_records_name_their_atoms():
    trace = run_modal_diagonalizer([], 2, witness_bound="cycle-atoms").trace
    first, second = trace.select(event=Event.CYCLE)
    assert first.render() == "stage=1 req=- event=cycle detail=- p=3 u=0..1 v=0..0"
    assert (second.get("u"), second.get("v")) == ("2..4", "1..2")


def test_corpus_cycles_skip_the_forbidden_stage(corpus_trace):
    cycles = [(r.stage, r.as_int("p")) for r in corpus_trace.select(event=Event.CYCLE)]
    assert cycles == [(1, 3), (2, 5), (3, 7), (5, 13), (6, 17), (7, 19)]


@pytest.mark.parametrize("req, expected", [
    (0, (Certificate.DEACTIVATED, 1, Reason.MONITOR_B)),
    (1, (Certificate.DEACTIVATED, 1, Reason.MONITOR_A)),
    (2, (Certificate.DEACTIVATED, 2, Reason.NON_INJECTIVE)),
    (3, (Certificate.DEACTIVATED, 3, Reason.BAD_ORBIT)),
    (4, (Certificate.FORBIDDEN_PRIME, 4, "p=11 N=11")),
    (5, (Certificate.DEACTIVATED, 6, Reason.COUNTING)),
    (6, (Certificate.DEACTIVATED, 6, Reason.MONITOR_D)),
    (7, (Certificate.DEACTIVATED, 7, Reason.MONITOR_C)),
])
def test_corpus_certificates(corpus_trace, req, expected):
    assert modal_certificate(corpus_trace, req) == expected


def test_monitoring_hits_name_clause_and_witness(corpus_trace):
    hits = {r.as_int("req"): r for r in corpus_trace.select(event=Event.MONITOR)}
    assert sorted(hits) == [0, 1, 6, 7]
    assert (hits[0].get("clause"), hits[0].as_ints("witness")) == ("tops-meet", (1, 3))
    assert (hits[1].get("clause"), hits[1].as_ints("witness")) == ("complement", (3,))
    assert (hits[6].get("clause"), hits[6].as_ints("witness")) == ("top0", (4, 5))
    assert (hits[7].get("clause"), hits[7].as_ints("witness")) == ("top0-fixed-part", (5, 4))


def test_merge_alert_uses_the_atoms_as_witnesses(corpus_trace):
    alert = corpus_trace.last(event=Event.ALERT, req=2)
    assert alert.stage == 2
    assert alert.as_int("M") == 3
    assert alert.as_ints("witnesses") == (4, 6, 8, 10)
    assert alert.get("detail") == Reason.NON_INJECTIVE


def test_mirror_forbids_the_prime_of_its_orbit(corpus_trace):
    alert = corpus_trace.last(event=Event.ALERT, req=4)
    assert (alert.stage, alert.get("detail"), alert.as_int("witness"), alert.as_int("N")) == (4, "i.c", 30, 11)
    forbid = corpus_trace.last(event=Event.FORBID)
    assert (forbid.stage, forbid.as_int("p"), forbid.as_int("witness")) == (4, 11, 30)


def test_promotions_follow_deactivations(corpus_trace):
    promoted = [(r.stage, r.as_int("req")) for r in corpus_trace.select(event=Event.PROMOTE)]
    assert promoted == [(0, 0), (1, 2), (2, 3), (3, 4), (5, 5), (6, 7)]


def test_corpus_trace_verifies(corpus_trace):
    assert checks(verify_modal_trace(corpus_trace)) == {
        "replay": True,
        "property #": True,
        "property †": True,
        "alert uniqueness": True,
        "cycle density": True,
    }


def test_corpus_decisions_replay_against_fresh_adversaries(corpus_trace):
    results = checks(replay_deactivations(corpus_trace, adversaries(CORPUS)))
    assert results == {"deactivation soundness": True, "open orbits": True}


def test_replay_against_other_adversaries_fails(corpus_trace):
    swapped = adversaries(CORPUS[1:2] + CORPUS[:1] + CORPUS[2:])
    results = checks(replay_deactivations(corpus_trace, swapped))
    assert not results["deactivation soundness"]


def test_late_orbit_gets_active_then_forbids():
    trace = run_modal_diagonalizer(adversaries(["violate:condition=b", "orbit:first=21"]), 3,
                                   witness_bound="cycle-atoms").trace
    alert = trace.last(event=Event.ALERT, req=1)
    assert (alert.stage, alert.get("detail"), alert.as_int("witness")) == (2, "i.d", 4)
    assert modal_certificate(trace, 1) == (Certificate.FORBIDDEN_PRIME, 3, "p=7 N=21")
    assert [r.as_int("p") for r in trace.select(event=Event.CYCLE)] == [3, 5]
    assert all(checks(verify_modal_trace(trace)).values())


def test_shifting_modality_stays_active_on_an_open_orbit():
    state = run_modal_diagonalizer(adversaries(["shift"]), 4, witness_bound="cycle-atoms")
    assert state.requirements[0].state == RequirementState.ACTIVE
    active = state.trace.select(event=Event.ACTIVE, req=0)
    assert [r.stage for r in active] == [1, 2, 3, 4]
    assert all(r.get("detail") == "ii.b" for r in active)
    tag, stage, detail = modal_certificate(state.trace, 0)
    assert (tag, stage) == (Certificate.ACTIVE_OPEN, 4)
    assert detail.endswith("orbit open")
    assert checks(replay_deactivations(state.trace, adversaries(["shift"])))["open orbits"]


def test_card_witness_bound_counts_the_generated_subalgebra():
    state = run_modal_diagonalizer(adversaries(["merge"]), 1, witness_bound="card")
    assert state.trace.last(event=Event.ALERT).as_int("M") == 4
    assert state.witness_count_bound() == 32
    assert state.trace.header.get("witness_bound") == "card"


def test_slow_adversary_is_disqualified():
    state = run_modal_diagonalizer(adversaries(["mirror:delay=5"]), 1, fuel_base=1, witness_bound="cycle-atoms")
    ended = state.trace.last(event=Event.DEACTIVATE, req=0)
    assert ended.get("detail") == Reason.DISQUALIFIED
    assert ended.get("during") == "probe"
    assert modal_certificate(state.trace, 0)[0] == Certificate.DISQUALIFIED
    results = checks(replay_deactivations(state.trace, adversaries(["mirror:delay=5"]), fuel_base=1))
    assert results["deactivation soundness"]


def test_two_requirements_on_the_alert_is_a_breach():
    state = new_state(adversaries(["mirror:delay=0", "mirror:delay=0"]), 3, witness_bound="cycle-atoms")
    state.requirements[1].state = RequirementState.ALERT
    with pytest.raises(InvariantBreach, match="alert uniqueness"):
        run_stage(state)


def test_unknown_witness_bound_and_horizon():
    with pytest.raises(ConfigError):
        new_state([], 3, witness_bound="huge")
    with pytest.raises(ValueError):
        run_modal_diagonalizer([], 0)


def test_duplicated_prime_breaks_property_hash(corpus_trace):
    text = corpus_trace.render().replace("stage=5 req=- event=cycle detail=- p=13",
                                         "stage=5 req=- event=cycle detail=- p=11")
    results = checks(verify_modal_trace(StageTrace.parse(text)))
    assert not results["property #"]
    assert not results["replay"]


def split_block_algebra():
    """Subsets of {0, 1, 2, 3} as bitmasks, with join(14, 1) answered wrongly."""
    overrides = {
        "join": lambda x, y: 14 if (x, y) == (14, 1) else x | y,
        "meet": lambda x, y: x & y,
        "comp": lambda x: 15 ^ (x & 15),
        "f": lambda x: x,
        "zero": lambda: 0,
        "one": lambda: 15,
        "top0": lambda: 3,
        "top1": lambda: 12,
    }
    return modal_algebra("split-block", None, overrides=overrides)


def test_closure_keeps_the_blocks_of_every_refinement_round():
    view = modal_probe(SignatureHandle(split_block_algebra()), 2)
    assert view.probe == (0, 1, 2, 3, 12, 15)
    assert view.atoms == (1, 2, 12)
    assert view.products == (1, 2, 12, 14, 15)
    assert 14 in view.closure
    assert monitoring_check(view, 2) == MonitorHit(Reason.MONITOR_A, "complement", (14,))


def test_non_distributive_lattice_is_deactivated():
    trace = run_modal_diagonalizer(adversaries(["lantern"]), 4, witness_bound="cycle-atoms").trace
    hit = trace.last(event=Event.MONITOR, req=0)
    assert hit.stage == 4
    assert (hit.get("clause"), hit.as_ints("witness")) == ("distributivity", (1, 2, 4))
    assert modal_certificate(trace, 0) == (Certificate.DEACTIVATED, 4, Reason.MONITOR_A)
    assert [r.get("detail") for r in trace.select(event=Event.ALERT, req=0)] == ["deferred"] * 3
