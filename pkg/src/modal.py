"""
The modality F_[g] on B(N) x B(N): p-cycle installation, forward orbits
and orbit classification.
"""

import logging
from dataclasses import dataclass, field
from math import prod
from types import MappingProxyType
from typing import Dict, Mapping, Optional, Protocol, Tuple

from sympy import factorint, isprime

from .boolean import ONE, ZERO, AlgebraElement, atom_element, join_all, u, v
from .errors import DeferError, InvariantBreach

logger = logging.getLogger(__name__)

Atom = Tuple[str, int]


class AtomMap(Protocol):
    """Anything that can name the image of an atom under g."""

    def image(self, atom: Atom) -> Optional[AlgebraElement]:
        ...


@dataclass(frozen=True)
class CycleRecord:
    prime: int
    u_indices: Tuple[int, ...]
    v_indices: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.u_indices) + len(self.v_indices)

    def atoms(self) -> Tuple[Atom, ...]:
        return tuple(("u", i) for i in self.u_indices) + tuple(("v", j) for j in self.v_indices)

    def element(self) -> AlgebraElement:
        return join_all(atom_element(a) for a in self.atoms())

    def trace_line(self) -> str:
        us = f"{self.u_indices[0]}..{self.u_indices[-1]}"
        vs = f"{self.v_indices[0]}..{self.v_indices[-1]}"
        return f"cycle p={self.prime} u={us} v={vs}"


@dataclass(frozen=True)
class ModalityTable:
    """The partial map g on atoms, the cycles installed so far and the next free indices."""
    g: Mapping[Atom, AlgebraElement] = field(default_factory=dict)
    cycles: Tuple[CycleRecord, ...] = ()
    next_u: int = 0
    next_v: int = 0

    def __post_init__(self):
        object.__setattr__(self, "g", MappingProxyType(dict(self.g)))

    def image(self, atom: Atom) -> Optional[AlgebraElement]:
        return self.g.get(atom)

    def primes(self) -> Tuple[int, ...]:
        return tuple(c.prime for c in self.cycles)

    def cycle_atoms(self) -> Tuple[Atom, ...]:
        return tuple(a for c in self.cycles for a in c.atoms())

    def default_cutoff(self) -> int:
        return 1 + prod(self.primes())


def cycle_assignments(size: int, i: int, j: int) -> Dict[Atom, AlgebraElement]:
    """The g-values of an odd cycle on u_i..u_{i+k} and v_j..v_{j+k-1}, k = size // 2."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"cycle size must be odd, got {size}")
    k = size // 2
    g: Dict[Atom, AlgebraElement] = {}
    for m in range(k):
        g[("u", i + m)] = v(j + m)
        g[("v", j + m)] = u(i + m + 1)
    g[("u", i + k)] = u(i)
    return g


def add_p_cycle(table: ModalityTable, p: int) -> ModalityTable:
    """
    Install a p-cycle on the least unused atoms.

    With k = p // 2, i = next_u and j = next_v:
    g(u_{i+m}) = v_{j+m} and g(v_{j+m}) = u_{i+m+1} for m < k, g(u_{i+k}) = u_i.
    """
    if p % 2 == 0 or not isprime(p):
        raise ValueError(f"{p} is not an odd prime")
    if p in table.primes():
        raise InvariantBreach("property #", f"a {p}-cycle is already installed")

    k = p // 2
    i, j = table.next_u, table.next_v
    g = dict(table.g)
    g.update(cycle_assignments(p, i, j))

    record = CycleRecord(p, tuple(range(i, i + k + 1)), tuple(range(j, j + k)))
    logger.debug(f"🔁 {record.trace_line()}")
    return ModalityTable(g, table.cycles + (record,), i + k + 1, j + k)


def apply_modality(table: AtomMap, x: AlgebraElement) -> AlgebraElement:
    """F_[g]: 0 to 0, non-Frechet elements to 1, Frechet elements to the join of g over their atoms."""
    if x.is_zero():
        return ZERO
    if not x.in_frechet():
        return ONE
    images = []
    for atom in x.atoms():
        image = table.image(atom)
        if image is None:
            raise DeferError(atom)
        images.append(image)
    return join_all(images)


@dataclass(frozen=True)
class Orbit:
    values: Tuple[AlgebraElement, ...]
    status: str
    # index the first repeated value returns to; 0 for a pure cycle
    loop_start: Optional[int] = None

    @property
    def card(self) -> int:
        return len(self.values)


def forward_orbit(table: AtomMap, a: AlgebraElement, cutoff: Optional[int] = None) -> Orbit:
    """Iterate F_[g] from a until a value repeats (closed) or cutoff values were seen (truncated)."""
    if cutoff is None:
        cutoff = table.default_cutoff() if isinstance(table, ModalityTable) else 10_000
    values = [a]
    seen = {a: 0}
    while len(values) < cutoff:
        nxt = apply_modality(table, values[-1])
        if nxt in seen:
            return Orbit(tuple(values), "closed", seen[nxt])
        seen[nxt] = len(values)
        values.append(nxt)
    nxt = apply_modality(table, values[-1])
    if nxt in seen:
        return Orbit(tuple(values), "closed", seen[nxt])
    return Orbit(tuple(values), "truncated")


@dataclass(frozen=True)
class OrbitClass:
    case: str
    n: Optional[int] = None
    primes: Tuple[int, ...] = ()


def classify_orbit(table: AtomMap, a: AlgebraElement, cutoff: Optional[int] = None) -> OrbitClass:
    """
    Sort a nonzero element into one of three cases: non-Frechet (F(a) = 1),
    fixed (F(a) = a) or a cycle of card N with its prime factors.
    """
    if a.is_zero():
        raise ValueError("orbits are classified for nonzero elements only")
    if not a.in_frechet():
        return OrbitClass("nonFrechet", 1)
    orbit = forward_orbit(table, a, cutoff)
    if orbit.status == "truncated":
        return OrbitClass("indeterminate")
    if orbit.card == 1:
        return OrbitClass("fixed", 1)
    return OrbitClass("cycle", orbit.card, tuple(sorted(factorint(orbit.card))))


def straddled_primes(table: ModalityTable, a: AlgebraElement) -> Tuple[int, ...]:
    """Primes of the installed cycles that a meets without containing."""
    primes = []
    for record in table.cycles:
        whole = record.element()
        part = a.meet(whole)
        if not part.is_zero() and part != whole:
            primes.append(record.prime)
    return tuple(primes)
