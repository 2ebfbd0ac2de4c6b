"""
Tests for the register-machine DSL, fuel accounting and adversary views.
"""

import pytest

from src.adversary import (
    AdversaryHandle,
    ModalAdversary,
    OutOfFuel,
    ScriptedProgram,
    SignatureHandle,
    SuccessorAdversary,
    eval_program,
    load_program,
    modal_probe,
    parse_program,
    poset_approximation,
)
from src.config import fuel_policy, get_fixtures_path
from src.errors import ConfigError, ProgramLoadError
from src.fixtures import modal_mirror
from src.structures import FinitePosetTree, ViolationReport

FIXTURES = get_fixtures_path()


def test_chain_program_decides_the_descending_chain():
    program = load_program(FIXTURES / "chain.adv")
    assert program.name == "chain" and program.arity == 2
    assert program.evaluate((2, 1), 100).value == 1
    assert program.evaluate((1, 2), 100).value == 0
    assert program.evaluate((3, 3), 100).steps == 3


def test_repeat_charges_one_step_per_round():
    program = parse_program("set r 0\nrepeat 3\nadd r r 2\nend\nret r\n")
    outcome = program.evaluate((), 100)
    assert outcome.value == 6
    assert outcome.steps == 9


def test_budget_exhaustion_is_reported_not_raised():
    program = parse_program("set r 0\nrepeat 50\nadd r r 1\nend\nret r\n")
    outcome = eval_program(program, (), 10)
    assert outcome.out_of_fuel
    assert outcome.steps == 10


def test_program_without_return_yields_zero_and_sub_floors():
    assert parse_program("set r 5\n").evaluate((), 10).value == 0
    assert parse_program("sub r 2 7\nret r\n").evaluate((), 10).value == 0


@pytest.mark.parametrize("text, message", [
    ("L:\nif x0 goto L\nret 0\n", "backwards"),
    ("if x0 goto nowhere\nret 0\n", "unknown label"),
    ("end\n", "without"),
    ("repeat 2\nset r 1\n", "without"),
    ("arity 1\nadd r x0 x1\nret r\n", "arity"),
    ("set R 1\n", "bad register"),
    ("jump 3\n", "cannot parse"),
])
def test_malformed_programs_are_rejected(text, message):
    with pytest.raises(ProgramLoadError, match=message):
        parse_program(text)


def test_program_load_error_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_program(tmp_path / "missing.adv")


def test_handle_memoizes_and_charges_per_stage():
    program = ScriptedProgram("five", 1, lambda x: x + 1, cost=5)
    handle = AdversaryHandle(program, fuel_base=1)
    assert [handle.budget(s) for s in range(3)] == [1, 4, 9]

    assert handle.query((5,), 0) is None
    assert handle.query((5,), 1) is None
    assert handle.query((5,), 1) is None
    assert handle.query((5,), 2) == 6
    assert handle.query((5,), 0) == 6

    assert handle.stage_charge(0) == (1, 1)
    assert handle.stage_charge(1) == (1, 4)
    assert handle.stage_charge(2) == (1, 5)


def test_fuel_policy_is_quadratic_in_the_stage():
    assert fuel_policy(0, 7) == 7
    assert fuel_policy(3, 7) == 112


def test_structure_adversary_needs_every_symbol():
    unary = ScriptedProgram("s", 1, lambda k: 0)
    with pytest.raises(ProgramLoadError, match="lacks"):
        SuccessorAdversary("broken", {"s1": unary, "s2": unary})
    constant = ScriptedProgram("c", 0, lambda: 0)
    with pytest.raises(ProgramLoadError, match="arity"):
        SuccessorAdversary("broken", {"s1": unary, "s2": constant, "empty": constant, "root": constant})


def test_signature_handle_raises_out_of_fuel():
    adversary = modal_mirror(delay=5)
    handle = SignatureHandle(adversary, fuel_base=1)
    with pytest.raises(OutOfFuel):
        handle.call("join", (4, 6), 0)
    assert handle.call("join", (0, 3), 2) == 3


def test_chain_approximation_is_a_chain():
    handle = AdversaryHandle(load_program(FIXTURES / "chain.adv"))
    approximation = poset_approximation(handle, 3, 1)
    assert approximation.as_tree() == FinitePosetTree(0, {1: 0, 2: 1})
    assert approximation.restrict(2).as_tree() == FinitePosetTree(0, {1: 0})


def test_antichain_approximation_has_no_root():
    handle = AdversaryHandle(load_program(FIXTURES / "antichain.adv"))
    report = poset_approximation(handle, 3, 1).as_tree()
    assert isinstance(report, ViolationReport)
    assert report.clause == "greatest element"


def test_out_of_fuel_cell_is_named():
    handle = AdversaryHandle(ScriptedProgram("slow", 2, lambda x, y: 1, cost=10 ** 9))
    report = poset_approximation(handle, 2, 0)
    assert report.cell == (0, 0)


def test_modal_view_of_an_honest_algebra():
    adversary = modal_mirror()
    assert isinstance(adversary, ModalAdversary)
    view = modal_probe(SignatureHandle(adversary), 1)
    assert view.distinguished == (0, 3, 1, 2)
    assert view.probe == (0, 1, 2, 3)
    assert set(view.atoms) == {1, 2}
    assert view.leq(1, 3) and not view.leq(3, 1)
