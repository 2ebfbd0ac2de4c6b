"""
Tests for the scripted adversaries and oracles.
"""

from itertools import islice

import pytest

from src.adversary import load_program
from src.boolean import EMPTY, ONE, TOP0, TOP1, ZERO, AlgebraElement, FinCofSet, u, v
from src.config import get_fixtures_path
from src.errors import ConfigError
from src.fixtures import (
    LazyModality,
    ShiftModality,
    build_fixture,
    decode_element,
    encode_element,
    modal_violator,
    odd_primes,
    program_oracle,
)
from src.rpo_copy import Reveal


def reveals(oracle, n):
    return list(islice((r for r in oracle if r is not None), n))


def test_element_numbering_constants_and_atoms():
    assert [decode_element(n) for n in range(4)] == [ZERO, TOP0, TOP1, ONE]
    assert decode_element(4) == u(0)
    assert decode_element(6) == v(0)
    assert decode_element(8) == u(1)
    assert decode_element(5) == AlgebraElement(FinCofSet.cofinite_set([0]), EMPTY)
    assert decode_element(15) == u(0).join(v(0))


def test_element_numbering_is_a_bijection_on_an_initial_segment():
    decoded = [decode_element(n) for n in range(300)]
    assert len(set(decoded)) == 300
    assert all(encode_element(x) == n for n, x in enumerate(decoded))


def test_lazy_modality_installs_cycles_on_demand():
    modality = LazyModality(odd_primes())
    assert modality.image(("u", 2)) == v(1)
    assert modality.g[("u", 0)] == v(0)
    assert (modality.next_u, modality.next_v) == (5, 3)


def test_fixed_images_reserve_their_atoms():
    modality = LazyModality(odd_primes(), {("u", 0): u(0)})
    assert modality.image(("u", 0)) == u(0)
    assert modality.image(("u", 1)) == v(0)
    with pytest.raises(ValueError):
        LazyModality(odd_primes(), {("u", 3): u(3)}).image(("u", 1))


def test_shift_modality_never_returns():
    assert ShiftModality().image(("u", 4)) == v(4)
    assert ShiftModality().image(("v", 4)) == u(5)


def test_violators_break_one_condition_each():
    b = modal_violator("b")
    assert b.programs["top1"].evaluate((), 10).value == 3
    a = modal_violator("a")
    assert a.programs["comp"].evaluate((3,), 10).value == 3
    assert a.programs["comp"].evaluate((1,), 10).value == 2
    with pytest.raises(ConfigError):
        modal_violator("e")


def test_build_fixture_specs():
    assert build_fixture("modal", "mirror:delay=2").name == "mirror2"
    assert build_fixture("modal", "orbit:first=21").name == "orbit21"
    assert build_fixture("poset", "chain").evaluate((3, 1), 10).value == 1
    with pytest.raises(ConfigError, match="unknown"):
        build_fixture("poset", "lattice")
    with pytest.raises(ConfigError, match="unknown fixture kind"):
        build_fixture("graph", "chain")
    with pytest.raises(ConfigError, match="bad arguments"):
        build_fixture("poset", "chain:delay=1")


def test_poset_fixtures_answer_leq_queries():
    star = build_fixture("poset", "star")
    assert star.evaluate((4, 0), 10).value == 1
    assert star.evaluate((4, 3), 10).value == 0
    assert build_fixture("poset", "irreflexive").evaluate((2, 2), 10).value == 0
    assert build_fixture("poset", "slow").evaluate((0, 0), 10 ** 6).out_of_fuel


def test_honest_poset_mirror_copies_the_unblocked_tree():
    mirror = build_fixture("poset", "mirror")
    assert mirror.evaluate((1, 0), 10).value == 1
    assert mirror.evaluate((0, 1), 10).value == 0
    assert mirror.evaluate((1, 0), 10).steps == 3
    assert build_fixture("poset", "mirror:delay=5").evaluate((1, 0), 10).out_of_fuel
    assert build_fixture("poset", "mirror:delay=5").evaluate((1, 0), 100).steps == 24


def test_chain_oracle_paces_its_reveals():
    oracle = build_fixture("oracle", "chain")
    head = list(islice(oracle, 5))
    assert head == [Reveal(0, None), None, None, None, Reveal(1, 0)]


def test_star_of_paths_orders_children_of_the_root():
    found = reveals(build_fixture("oracle", "star-of-paths"), 4)
    assert found[1] == Reveal(1, 0)
    assert found[2] == Reveal(2, 1)
    assert found[3] == Reveal(3, 0, (1,), ())


def test_interval_oracle_fills_between_one_and_two():
    found = reveals(build_fixture("oracle", "interval"), 8)
    assert found[5] == Reveal(5, 0, (1,), (2,))
    assert found[6] == Reveal(6, 0, (1, 5), (2,))
    assert found[7] == Reveal(7, 0, (1, 5, 6, 2), ())
    with pytest.raises(ConfigError):
        next(build_fixture("oracle", "interval:pattern=spiral"))


def test_program_oracle_skips_missing_nodes():
    program = load_program(get_fixtures_path() / "oracle-broom.adv")
    found = reveals(program_oracle(program), 7)
    assert [(r.node, r.parent) for r in found] == [
        (0, None), (1, 0), (2, 0), (3, 2), (4, 2), (6, 4), (7, 6),
    ]


def test_program_oracle_needs_arity_one():
    program = load_program(get_fixtures_path() / "chain.adv")
    with pytest.raises(ConfigError):
        next(program_oracle(program))


def test_prefix_oracles():
    branch = reveals(build_fixture("oracle", "prefix-branch"), 6)
    assert branch == [(0,), (0, 1), (0, 1, 2), (0, 1, 3), (0, 1, 2, 4, 5), (0, 1, 2, 4, 6)]
    hub = reveals(build_fixture("oracle", "hub"), 7)
    assert hub == [(0,), (0, 1), (0, 1, 2), (0, 1, 3), (0, 1, 3, 4), (0, 1, 5), (0, 1, 5, 6)]
