"""
Exact arithmetic in B(N) x B(N), the product of two copies of the
finite/cofinite algebra on the natural numbers.
"""

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple


@dataclass(frozen=True)
class FinCofSet:
    """
    A finite or cofinite subset of N.

    `support` is the set itself when finite and its complement when cofinite,
    so the representation is canonical and equality is structural.
    """
    cofinite: bool
    support: frozenset

    def __post_init__(self):
        object.__setattr__(self, "support", frozenset(self.support))
        if any((not isinstance(i, int)) or i < 0 for i in self.support):
            raise ValueError("support must hold natural numbers")

    @classmethod
    def finite(cls, items: Iterable[int] = ()) -> "FinCofSet":
        return cls(False, frozenset(items))

    @classmethod
    def cofinite_set(cls, missing: Iterable[int] = ()) -> "FinCofSet":
        return cls(True, frozenset(missing))

    def __contains__(self, i: int) -> bool:
        return (i in self.support) != self.cofinite

    def union(self, other: "FinCofSet") -> "FinCofSet":
        if not self.cofinite and not other.cofinite:
            return FinCofSet(False, self.support | other.support)
        if self.cofinite and other.cofinite:
            return FinCofSet(True, self.support & other.support)
        co, fin = (self, other) if self.cofinite else (other, self)
        return FinCofSet(True, co.support - fin.support)

    def intersection(self, other: "FinCofSet") -> "FinCofSet":
        return self.complement().union(other.complement()).complement()

    def complement(self) -> "FinCofSet":
        return FinCofSet(not self.cofinite, self.support)

    def is_empty(self) -> bool:
        return not self.cofinite and not self.support

    def is_full(self) -> bool:
        return self.cofinite and not self.support

    def literal(self) -> str:
        items = ",".join(str(i) for i in sorted(self.support))
        return f"{'cof' if self.cofinite else 'fin'}{{{items}}}"


EMPTY = FinCofSet.finite()
FULL = FinCofSet.cofinite_set()


@dataclass(frozen=True)
class AlgebraElement:
    """An element (left, right) of B(N) x B(N)."""
    left: FinCofSet
    right: FinCofSet

    def join(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.left.union(other.left), self.right.union(other.right))

    def meet(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.left.intersection(other.left), self.right.intersection(other.right))

    def complement(self) -> "AlgebraElement":
        return AlgebraElement(self.left.complement(), self.right.complement())

    def leq(self, other: "AlgebraElement") -> bool:
        return self.join(other) == other

    def is_zero(self) -> bool:
        return self.left.is_empty() and self.right.is_empty()

    def in_frechet(self) -> bool:
        return not self.left.cofinite and not self.right.cofinite

    def atoms(self) -> List[Tuple[str, int]]:
        """Atoms below a Frechet element: u atoms by index, then v atoms."""
        if not self.in_frechet():
            raise ValueError("only Frechet elements are finite joins of atoms")
        return [("u", i) for i in sorted(self.left.support)] + [("v", j) for j in sorted(self.right.support)]

    def literal(self) -> str:
        return f"({self.left.literal()} ; {self.right.literal()})"

    def __str__(self) -> str:
        return self.literal()


ZERO = AlgebraElement(EMPTY, EMPTY)
ONE = AlgebraElement(FULL, FULL)
TOP0 = AlgebraElement(FULL, EMPTY)
TOP1 = AlgebraElement(EMPTY, FULL)


def u(i: int) -> AlgebraElement:
    """The atom ({i}, empty)."""
    return AlgebraElement(FinCofSet.finite([i]), EMPTY)


def v(j: int) -> AlgebraElement:
    """The atom (empty, {j})."""
    return AlgebraElement(EMPTY, FinCofSet.finite([j]))


def atom_element(atom: Tuple[str, int]) -> AlgebraElement:
    side, index = atom
    return u(index) if side == "u" else v(index)


def join_all(elements: Iterable[AlgebraElement]) -> AlgebraElement:
    result = ZERO
    for element in elements:
        result = result.join(element)
    return result


def boolean_op(op: str, x: AlgebraElement, y: Optional[AlgebraElement] = None):
    """Dispatch one of join, meet, complement, leq."""
    if op == "complement":
        return x.complement()
    if y is None:
        raise ValueError(f"{op} needs two arguments")
    if op == "join":
        return x.join(y)
    if op == "meet":
        return x.meet(y)
    if op == "leq":
        return x.leq(y)
    raise ValueError(f"unknown boolean operation {op!r}")


def in_frechet(x: AlgebraElement) -> bool:
    return x.in_frechet()


def epsilon_product(elements: Sequence[AlgebraElement], bits: Sequence[int]) -> AlgebraElement:
    """a_0^e_0 meet ... meet a_n^e_n, where a^1 = a and a^0 = C(a)."""
    if len(elements) != len(bits):
        raise ValueError(f"{len(elements)} elements but {len(bits)} exponents")
    result = ONE
    for element, bit in zip(elements, bits):
        result = result.meet(element if bit else element.complement())
    return result


@dataclass(frozen=True)
class FiniteSubalgebra:
    """Finite subalgebra given by its atoms and the generators it came from."""
    atoms: Tuple[AlgebraElement, ...]
    generators: Tuple[AlgebraElement, ...]

    @property
    def size(self) -> int:
        return 2 ** len(self.atoms)

    def atoms_below(self, x: AlgebraElement) -> Tuple[AlgebraElement, ...]:
        return tuple(a for a in self.atoms if a.leq(x))

    def contains(self, x: AlgebraElement) -> bool:
        return join_all(self.atoms_below(x)) == x

    def elements(self) -> List[AlgebraElement]:
        """Every member, as the joins of all atom subsets."""
        members = []
        for r in range(len(self.atoms) + 1):
            for combo in combinations(self.atoms, r):
                members.append(join_all(combo))
        return members


def generated_subalgebra(generators: Iterable[AlgebraElement]) -> FiniteSubalgebra:
    """
    Subalgebra generated by finitely many elements.

    The atoms are the distinct nonzero epsilon-products of the generators,
    found by refining the partition {1} one generator at a time.
    """
    generators = tuple(generators)
    blocks = [ONE]
    for g in generators:
        refined = []
        for block in blocks:
            for part in (block.meet(g), block.meet(g.complement())):
                if not part.is_zero():
                    refined.append(part)
        blocks = refined
    return FiniteSubalgebra(tuple(blocks), generators)


_SET = r"(fin|cof)\{([0-9,]*)\}"
_LITERAL = re.compile(r"^\(" + _SET + r" ; " + _SET + r"\)$")


def parse_element(text: str) -> AlgebraElement:
    """Inverse of AlgebraElement.literal()."""
    match = _LITERAL.match(text.strip())
    if not match:
        raise ValueError(f"not an element literal: {text!r}")

    def side(kind: str, items: str) -> FinCofSet:
        values = [int(i) for i in items.split(",")] if items else []
        return FinCofSet(kind == "cof", frozenset(values))

    return AlgebraElement(side(match.group(1), match.group(2)), side(match.group(3), match.group(4)))
