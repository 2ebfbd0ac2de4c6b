"""
Scripted adversaries and oracles used by the shipped configs and tests.

Fixtures are named by short spec strings such as `mirror:delay=2` or
`orbit:first=9`; `build_fixture(kind, spec)` turns one into an object the
engines accept. Modal fixtures present B(N) x B(N) on N through the
numbering in `encode_element` / `decode_element`.
"""

import logging
from functools import lru_cache
from itertools import count
from math import isqrt
from typing import Any, Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from sympy import prime

from .adversary import ModalAdversary, Outcome, ScriptedProgram, SuccessorAdversary
from .boolean import ONE, TOP0, TOP1, ZERO, AlgebraElement, FinCofSet, u, v
from .errors import ConfigError, InvariantBreach, StructureError
from .modal import Atom, apply_modality, cycle_assignments
from .rpo_copy import Reveal

logger = logging.getLogger(__name__)

KINDS = ("poset", "modal", "succ", "oracle")


# ---------------------------------------------------------------------------
# Numbering of B(N) x B(N)
# ---------------------------------------------------------------------------
#
# A finite or cofinite set is coded as 2 * (bitmask of its support) + cofinite,
# a pair of sets by the Cantor pairing of the two codes. Ids 0..3 are the
# constants 0, T0, T1, 1; from 4 on, ids alternate between the atoms
# (u0, v0, u1, v1, ... at 4, 6, 8, 10, ...) and all remaining codes in
# increasing order (at 5, 7, 9, ...), so every id names exactly one element.

CONSTANTS = (ZERO, TOP0, TOP1, ONE)
_CONSTANT_CODES = (0, 1, 2, 4)


def _set_code(s: FinCofSet) -> int:
    return 2 * sum(1 << i for i in s.support) + int(s.cofinite)


def _set_decode(code: int) -> FinCofSet:
    bits = code >> 1
    return FinCofSet(bool(code & 1), frozenset(i for i in range(bits.bit_length()) if bits >> i & 1))


def _pair(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def _unpair(c: int) -> Tuple[int, int]:
    w = (isqrt(8 * c + 1) - 1) // 2
    b = c - w * (w + 1) // 2
    return w - b, b


def _is_power_code(a: int) -> bool:
    return a >= 2 and a & (a - 1) == 0


def _is_special(c: int) -> bool:
    if c in _CONSTANT_CODES:
        return True
    a, b = _unpair(c)
    return (b == 0 and _is_power_code(a)) or (a == 0 and _is_power_code(b))


def _special_below(c: int) -> int:
    found = sum(1 for k in _CONSTANT_CODES if k < c)
    for side in (0, 1):
        i = 0
        while True:
            code = _pair(1 << (i + 1), 0) if side == 0 else _pair(0, 1 << (i + 1))
            if code >= c:
                break
            found += 1
            i += 1
    return found


def _plain_code(k: int) -> int:
    """The k-th code that is neither a constant nor an atom."""
    c = k
    while True:
        nxt = k + _special_below(c)
        if nxt == c:
            break
        c = nxt
    while _is_special(c):
        c += 1
    return c


def element_code(x: AlgebraElement) -> int:
    return _pair(_set_code(x.left), _set_code(x.right))


@lru_cache(maxsize=65536)
def decode_element(n: int) -> AlgebraElement:
    if n < 0:
        raise ValueError(f"element ids are natural numbers, got {n}")
    if n < 4:
        return CONSTANTS[n]
    m = n - 4
    if m % 4 == 0:
        return u(m // 4)
    if m % 4 == 2:
        return v(m // 4)
    left, right = _unpair(_plain_code((m - 1) // 2))
    return AlgebraElement(_set_decode(left), _set_decode(right))


@lru_cache(maxsize=65536)
def encode_element(x: AlgebraElement) -> int:
    if x in CONSTANTS:
        return CONSTANTS.index(x)
    if x.in_frechet():
        atoms = x.atoms()
        if len(atoms) == 1:
            side, index = atoms[0]
            return 4 + 4 * index + (0 if side == "u" else 2)
    c = element_code(x)
    return 4 + 2 * (c - _special_below(c)) + 1


# ---------------------------------------------------------------------------
# Modal adversaries
# ---------------------------------------------------------------------------

class LazyModality:
    """
    g given by a few fixed atom images plus odd cycles of the given sizes,
    installed on the next free atoms whenever an image is asked for.
    """

    def __init__(self, sizes: Iterable[int], fixed: Optional[Mapping[Atom, AlgebraElement]] = None):
        self.sizes = iter(sizes)
        self.g: Dict[Atom, AlgebraElement] = dict(fixed or {})
        used_u = [i for side, i in self._fixed_atoms() if side == "u"]
        used_v = [j for side, j in self._fixed_atoms() if side == "v"]
        self.start_u = self.next_u = max(used_u, default=-1) + 1
        self.start_v = self.next_v = max(used_v, default=-1) + 1

    def _fixed_atoms(self) -> List[Atom]:
        atoms = list(self.g)
        for image in self.g.values():
            if image.in_frechet():
                atoms.extend(image.atoms())
        return atoms

    def image(self, atom: Atom) -> AlgebraElement:
        if atom in self.g:
            return self.g[atom]
        side, index = atom
        if index < (self.start_u if side == "u" else self.start_v):
            raise ValueError(f"atom {side}{index} has no image in this fixture")
        while atom not in self.g:
            size = next(self.sizes)
            self.g.update(cycle_assignments(size, self.next_u, self.next_v))
            self.next_u += size // 2 + 1
            self.next_v += size // 2
        return self.g[atom]


class ShiftModality:
    """g(u_i) = v_i and g(v_i) = u_{i+1}: every atom has an infinite orbit."""

    def image(self, atom: Atom) -> AlgebraElement:
        side, index = atom
        return v(index) if side == "u" else u(index + 1)


def odd_primes(start: int = 0) -> Iterator[int]:
    """3, 5, 7, ... from the start-th odd prime on."""
    for k in count(start + 2):
        yield prime(k)


def modal_algebra(
    name: str,
    modality,
    cost: int = 1,
    overrides: Optional[Dict[str, Callable[..., int]]] = None
) -> ModalAdversary:
    """B(N) x B(N) with F_[g] on N; `overrides` swaps out single symbols."""
    def join(x, y):
        return encode_element(decode_element(x).join(decode_element(y)))

    def meet(x, y):
        return encode_element(decode_element(x).meet(decode_element(y)))

    def comp(x):
        return encode_element(decode_element(x).complement())

    def f(x):
        return encode_element(apply_modality(modality, decode_element(x)))

    functions: Dict[str, Tuple[int, Callable[..., int]]] = {
        "join": (2, join), "meet": (2, meet), "comp": (1, comp), "f": (1, f),
        "zero": (0, lambda: 0), "top0": (0, lambda: 1), "top1": (0, lambda: 2), "one": (0, lambda: 3),
    }
    for symbol, fn in (overrides or {}).items():
        functions[symbol] = (functions[symbol][0], fn)
    programs = {s: ScriptedProgram(f"{name}.{s}", arity, fn, cost) for s, (arity, fn) in functions.items()}
    return ModalAdversary(name, programs)


def modal_mirror(delay: int = 0) -> ModalAdversary:
    """Odd prime cycles from the delay-th prime on; each answer costs delay + 1 steps."""
    return modal_algebra(f"mirror{delay}", LazyModality(odd_primes(delay)), cost=delay + 1)


def modal_orbit(first: int = 9) -> ModalAdversary:
    """A `first`-cycle on the least atoms, then the odd primes."""
    def sizes():
        yield first
        yield from odd_primes()
    return modal_algebra(f"orbit{first}", LazyModality(sizes()))


def modal_merge() -> ModalAdversary:
    """u0 -> v0 -> u1 -> v0: f is not injective on the orbit of u0."""
    fixed = {("u", 0): v(0), ("v", 0): u(1), ("u", 1): v(0)}
    return modal_algebra("merge", LazyModality(odd_primes(), fixed))


def modal_shift() -> ModalAdversary:
    return modal_algebra("shift", ShiftModality())


def modal_violator(condition: str) -> ModalAdversary:
    """An adversary caught by one monitoring condition: a, b, c or d."""
    if condition == "a":
        plain = modal_algebra("plain", LazyModality(odd_primes()))
        comp = plain.programs["comp"].fn
        return modal_algebra("violate-a", LazyModality(odd_primes()), overrides={"comp": lambda x: 3 if x == 3 else comp(x)})
    if condition == "b":
        return modal_algebra("violate-b", LazyModality(odd_primes()), overrides={"top1": lambda: 3})
    if condition == "c":
        return modal_algebra("violate-c", LazyModality(odd_primes(), {("u", 0): u(0)}))
    if condition == "d":
        return modal_algebra("violate-d", LazyModality(odd_primes(), {("u", 0): ONE}))
    raise ConfigError(f"no violator for monitoring condition {condition!r}")


# the six-element orthocomplemented lattice: 0 < 1, 2, 4, 5 < 3, with 1' = 2 and 4' = 5
_LANTERN_COMP = {0: 3, 1: 2, 2: 1, 3: 0, 4: 5, 5: 4}


def modal_lantern() -> ModalAdversary:
    """
    A non-distributive ortholattice on ids mod 6 with f sending every
    nonzero element to 1. Every law on pairs holds; x & (y | z) fails on
    (1, 2, 4), which the closure reaches once 4 is probed.
    """
    def join(x, y):
        x, y = x % 6, y % 6
        if x == y or y == 0:
            return x
        return y if x == 0 else 3

    def meet(x, y):
        x, y = x % 6, y % 6
        if x == y or y == 3:
            return x
        return y if x == 3 else 0

    overrides = {
        "join": join,
        "meet": meet,
        "comp": lambda x: _LANTERN_COMP[x % 6],
        "f": lambda x: 0 if x % 6 == 0 else 3,
    }
    return modal_algebra("lantern", None, overrides=overrides)


# ---------------------------------------------------------------------------
# Poset adversaries
# ---------------------------------------------------------------------------

class _ReferenceTree:
    """The diagonalizer's tree with nothing blocked, grown as far as asked."""

    def __init__(self):
        from .poset_diag import new_state
        self.state = new_state()
        self.sizes = [1]

    def grow(self):
        from .poset_diag import run_stage
        run_stage(self.state)
        self.sizes.append(len(self.state.tree))

    def born(self, node: int) -> int:
        """The first stage whose tree holds `node`."""
        while node >= self.sizes[-1]:
            self.grow()
        return next(t for t, size in enumerate(self.sizes) if node < size)

    def size_at(self, stage: int, cap: int) -> Optional[int]:
        """|T_stage|, or None once the tree outgrows `cap` before reaching that stage."""
        while len(self.sizes) <= stage:
            if self.sizes[-1] > cap:
                return None
            self.grow()
        return self.sizes[stage]

    def leq(self, x: int, y: int) -> int:
        return int(self.state.tree.leq(x, y))


class DelayedMirror:
    """
    An honest copy of the unblocked tree that trails it by `delay` stages.

    Before answering x <= y the mirror replays the construction through the
    stage where the later of x, y appears plus `delay` more, one step per
    node written, so its answers arrive `delay` stages behind the tree.
    """

    arity = 2

    def __init__(self, delay: int = 0):
        if delay < 0:
            raise ConfigError(f"mirror delay must be >= 0, got {delay}")
        self.name = f"mirror{delay}"
        self.delay = delay
        self.reference = _ReferenceTree()

    def __repr__(self) -> str:
        return f"DelayedMirror(delay={self.delay})"

    def evaluate(self, inputs: Sequence[int], budget: int) -> Outcome:
        if len(inputs) != self.arity:
            raise ValueError(f"{self.name} takes 2 inputs, got {len(inputs)}")
        x, y = inputs
        try:
            steps = self.reference.size_at(self.reference.born(max(x, y)) + self.delay, budget)
        except StructureError:
            steps = None
        if steps is None or steps > budget:
            return Outcome(None, budget)
        return Outcome(self.reference.leq(x, y), steps)


def poset_mirror(delay: int = 0) -> DelayedMirror:
    return DelayedMirror(delay)


def poset_chain() -> ScriptedProgram:
    return ScriptedProgram("chain", 2, lambda x, y: int(y <= x))


def poset_star() -> ScriptedProgram:
    return ScriptedProgram("star", 2, lambda x, y: int(x == y or y == 0))


def poset_antichain() -> ScriptedProgram:
    return ScriptedProgram("antichain", 2, lambda x, y: int(x == y))


def poset_irreflexive() -> ScriptedProgram:
    return ScriptedProgram("irreflexive", 2, lambda x, y: int(y < x))


def poset_slow() -> ScriptedProgram:
    return ScriptedProgram("slow", 2, lambda x, y: int(y <= x), cost=10 ** 12)


# ---------------------------------------------------------------------------
# Successor tree adversaries
# ---------------------------------------------------------------------------

def _successor(name: str, s1: Callable[[int], int], s2: Callable[[int], int]) -> SuccessorAdversary:
    programs = {
        "s1": ScriptedProgram(f"{name}.s1", 1, lambda k: 0 if k == 0 else s1(k)),
        "s2": ScriptedProgram(f"{name}.s2", 1, lambda k: 0 if k == 0 else s2(k)),
        "empty": ScriptedProgram(f"{name}.empty", 0, lambda: 0),
        "root": ScriptedProgram(f"{name}.root", 0, lambda: 1),
    }
    return SuccessorAdversary(name, programs)


def successor_full_binary() -> SuccessorAdversary:
    return _successor("full-binary", lambda k: 2 * k, lambda k: 2 * k + 1)


def successor_non_injective() -> SuccessorAdversary:
    return _successor("non-injective", lambda k: 2 * k, lambda k: 2 * k)


def successor_path() -> SuccessorAdversary:
    return _successor("path", lambda k: k + 1, lambda k: 0)


# ---------------------------------------------------------------------------
# r.p.o. oracles
# ---------------------------------------------------------------------------

class _RpoWriter:
    """Turns (node, parent, position among siblings) events into reveals with full sibling facts."""

    def __init__(self, pace: int):
        self.pace = pace
        self.line: Dict[Any, List[int]] = {}

    def reveal(self, node: int, parent: Optional[int], position: Optional[int] = None) -> Iterator[Optional[Reveal]]:
        if parent is None:
            yield Reveal(node, None)
        else:
            line = self.line.setdefault(parent, [])
            position = len(line) if position is None else position
            after, before = tuple(line[:position]), tuple(line[position:])
            line.insert(position, node)
            yield Reveal(node, parent, after, before)
        for _ in range(self.pace - 1):
            yield None


def chain_oracle(pace: int = 4) -> Iterator[Optional[Reveal]]:
    writer = _RpoWriter(pace)
    yield from writer.reveal(0, None)
    for n in count(1):
        yield from writer.reveal(n, n - 1)


def binary_growth_oracle(pace: int = 4) -> Iterator[Optional[Reveal]]:
    """A spine 0, 2, 4, ... where every spine node also has a leaf child to its left."""
    writer = _RpoWriter(pace)
    yield from writer.reveal(0, None)
    for n in count(1):
        yield from writer.reveal(n, n - 1 if n % 2 else n - 2)


def comb_oracle(pace: int = 4) -> Iterator[Optional[Reveal]]:
    """A spine whose nodes each carry a two-node tooth, teeth ordered before the spine."""
    writer = _RpoWriter(pace)
    yield from writer.reveal(0, None)
    spine, fresh = 0, count(1)
    while True:
        nxt, tooth, tip = next(fresh), next(fresh), next(fresh)
        yield from writer.reveal(nxt, spine)
        yield from writer.reveal(tooth, spine, position=0)
        yield from writer.reveal(tip, tooth)
        spine = nxt


def star_of_paths_oracle(length: int = 2, pace: int = 4) -> Iterator[Optional[Reveal]]:
    """Root 0 with infinitely many children, each heading a path of `length` nodes."""
    writer = _RpoWriter(pace)
    yield from writer.reveal(0, None)
    fresh = count(1)
    while True:
        above = 0
        for _ in range(length):
            node = next(fresh)
            yield from writer.reveal(node, above)
            above = node


def interval_oracle(pattern: str = "omega", high_every: int = 3, pace: int = 4) -> Iterator[Optional[Reveal]]:
    """
    Root 0 with children 1 < 2, each with one child (3 and 4); then leaves
    between 1 and 2, and every `high_every`-th new child of 0 placed above 2.

    `omega` appends every leaf at the right end of the interval; `zigzag`
    puts every second leaf just before the previous one.
    """
    if pattern not in ("omega", "zigzag"):
        raise ConfigError(f"unknown interval pattern {pattern!r}")
    writer = _RpoWriter(pace)
    yield from writer.reveal(0, None)
    yield from writer.reveal(1, 0)
    yield from writer.reveal(2, 0)
    yield from writer.reveal(3, 1)
    yield from writer.reveal(4, 2)
    interval: List[int] = []
    for n in count(5):
        line = writer.line[0]
        if high_every and (n - 4) % high_every == 0:
            yield from writer.reveal(n, 0)
            continue
        if pattern == "zigzag" and len(interval) % 2 == 1:
            anchor = interval[-1]
        else:
            anchor = 2
        yield from writer.reveal(n, 0, position=line.index(anchor))
        interval.append(n)


def program_oracle(program, fuel: int = 10_000, pace: int = 4) -> Iterator[Optional[Reveal]]:
    """
    An oracle from a DSL program of arity 1: node n has parent p when the
    program returns p + 1, and is not a node when it returns 0. Node 0 is
    the root; siblings are ordered by id.
    """
    if program.arity != 1:
        raise ConfigError(f"oracle program {program.name} must have arity 1")
    writer = _RpoWriter(pace)
    yield from writer.reveal(0, None)
    for n in count(1):
        outcome = program.evaluate((n,), fuel)
        if outcome.out_of_fuel:
            raise InvariantBreach("oracle totality", f"{program.name} ran out of fuel on node {n}")
        if outcome.value == 0:
            for _ in range(pace):
                yield None
            continue
        yield from writer.reveal(n, outcome.value - 1)


# ---------------------------------------------------------------------------
# Prefix-tree oracles
# ---------------------------------------------------------------------------

def prefix_branch_oracle(jump_every: int = 4, side_every: int = 3, rest_every: int = 5,
                         pace: int = 4) -> Iterator[Optional[tuple]]:
    """
    One infinite branch. Events grow it by one node, every `jump_every`-th
    by two nodes at once; every `side_every`-th event adds a leaf beside
    its tip instead, and every `rest_every`-th event is a quiet stage.
    """
    fresh = count(1)
    branch = [0]
    yield (0,)
    for _ in range(pace - 1):
        yield None
    for event in count(1):
        if rest_every and event % rest_every == 0:
            for _ in range(pace):
                yield None
            continue
        if jump_every and event % jump_every == 0:
            branch.extend((next(fresh), next(fresh)))
            yield tuple(branch)
        elif side_every and event % side_every == 0:
            yield tuple(branch[:-1]) + (next(fresh),)
        else:
            branch.append(next(fresh))
            yield tuple(branch)
        for _ in range(pace - 1):
            yield None


def hub_oracle(tail_every: int = 2, rest_every: int = 3, pace: int = 4) -> Iterator[Optional[tuple]]:
    """Root 0 above the hub 1; the hub gets new children forever, some with one child of their own."""
    fresh = count(2)
    yield (0,)
    yield (0, 1)
    for _ in range(pace - 2):
        yield None
    for event in count(1):
        if rest_every and event % rest_every == 0:
            for _ in range(pace):
                yield None
            continue
        child = next(fresh)
        yield (0, 1, child)
        if tail_every and event % tail_every == 0:
            yield (0, 1, child, next(fresh))
        for _ in range(pace - 1):
            yield None


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

REGISTRY: Dict[str, Dict[str, Callable[..., Any]]] = {
    "poset": {
        "mirror": poset_mirror,
        "chain": poset_chain,
        "star": poset_star,
        "antichain": poset_antichain,
        "irreflexive": poset_irreflexive,
        "slow": poset_slow,
    },
    "modal": {
        "mirror": modal_mirror,
        "orbit": modal_orbit,
        "merge": modal_merge,
        "shift": modal_shift,
        "violate": modal_violator,
        "lantern": modal_lantern,
    },
    "succ": {
        "full-binary": successor_full_binary,
        "non-injective": successor_non_injective,
        "path": successor_path,
    },
    "oracle": {
        "chain": chain_oracle,
        "binary-growth": binary_growth_oracle,
        "comb": comb_oracle,
        "star-of-paths": star_of_paths_oracle,
        "interval": interval_oracle,
        "prefix-branch": prefix_branch_oracle,
        "hub": hub_oracle,
    },
}


def _parse_value(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _parse_spec(spec: str) -> Tuple[str, Dict[str, Any]]:
    """`name:key=value,key=value` into the name and keyword arguments."""
    name, _, rest = spec.partition(":")
    kwargs: Dict[str, Any] = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"bad fixture argument {item!r} in {spec!r}")
        kwargs[key.strip()] = _parse_value(value.strip())
    return name.strip(), kwargs


def build_fixture(kind: str, spec: str):
    """Instantiate a fixture of the given kind from its spec string."""
    if kind not in REGISTRY:
        raise ConfigError(f"unknown fixture kind {kind!r}")
    name, kwargs = _parse_spec(spec)
    factory = REGISTRY[kind].get(name)
    if factory is None:
        raise ConfigError(f"unknown {kind} fixture {name!r}; known: {', '.join(REGISTRY[kind])}")
    try:
        return factory(**kwargs)
    except TypeError as e:
        raise ConfigError(f"bad arguments for {kind} fixture {name!r}: {e}") from e
