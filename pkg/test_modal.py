"""
Tests for p-cycle installation and orbits of the modality.
"""

import pytest

from src.boolean import TOP0, ZERO, join_all, u, v
from src.errors import DeferError, InvariantBreach
from src.modal import (
    ModalityTable,
    add_p_cycle,
    apply_modality,
    classify_orbit,
    cycle_assignments,
    forward_orbit,
    straddled_primes,
)


@pytest.fixture
def three_five() -> ModalityTable:
    return add_p_cycle(add_p_cycle(ModalityTable(), 3), 5)


def test_three_cycle_uses_least_atoms():
    table = add_p_cycle(ModalityTable(), 3)
    record = table.cycles[0]
    assert record.u_indices == (0, 1) and record.v_indices == (0,)
    assert record.trace_line() == "cycle p=3 u=0..1 v=0..0"
    assert (table.next_u, table.next_v) == (2, 1)
    assert table.image(("u", 0)) == v(0)
    assert table.image(("v", 0)) == u(1)
    assert table.image(("u", 1)) == u(0)


def test_second_cycle_starts_at_next_free_indices(three_five):
    record = three_five.cycles[1]
    assert record.u_indices == (2, 3, 4) and record.v_indices == (1, 2)
    assert record.size == 5
    assert three_five.image(("u", 4)) == u(2)
    assert three_five.primes() == (3, 5)
    assert three_five.default_cutoff() == 16


def test_cycle_installation_rejects_bad_primes():
    table = add_p_cycle(ModalityTable(), 3)
    with pytest.raises(InvariantBreach):
        add_p_cycle(table, 3)
    for p in (2, 4, 9):
        with pytest.raises(ValueError):
            add_p_cycle(table, p)


def test_modality_on_special_elements(three_five):
    assert apply_modality(three_five, ZERO) == ZERO
    assert apply_modality(three_five, TOP0).left.is_full()
    assert apply_modality(three_five, u(0).join(v(0))) == v(0).join(u(1))
    with pytest.raises(DeferError):
        apply_modality(three_five, u(10))


def test_atom_orbit_has_cycle_length(three_five):
    orbit = forward_orbit(three_five, u(0))
    assert orbit.status == "closed"
    assert orbit.values == (u(0), v(0), u(1))
    assert orbit.loop_start == 0


def test_orbit_of_a_join_has_lcm_length(three_five):
    found = classify_orbit(three_five, u(0).join(u(2)))
    assert found.case == "cycle"
    assert found.n == 15
    assert found.primes == (3, 5)


def test_orbit_classification_cases(three_five):
    assert classify_orbit(three_five, TOP0).case == "nonFrechet"
    fixed = ModalityTable(cycle_assignments(1, 7, 0))
    assert classify_orbit(fixed, u(7)).case == "fixed"
    assert classify_orbit(three_five, u(0), cutoff=2).case == "indeterminate"
    with pytest.raises(ValueError):
        classify_orbit(three_five, ZERO)


def test_straddled_primes(three_five):
    assert straddled_primes(three_five, u(0)) == (3,)
    assert straddled_primes(three_five, join_all([u(0), v(0), u(1)])) == ()
    assert straddled_primes(three_five, u(0).join(v(2))) == (3, 5)
