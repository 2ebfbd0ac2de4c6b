"""
Copies of r.p.o. trees revealed by an oracle.

An oracle is any iterable that yields, per computation step, either None
or a `Reveal`: one new node with its parent and its order facts against
every sibling revealed before it. `OracleNormalizer` runs a fixed number
of those steps per stage and releases at most one node per stage whose
parent is already known, so the copiers see a tree that grows by at most
one node at a time.

Three copiers live here:

* `ptime_rpo_copy` builds a copy on binary strings for trees of unbounded
  depth. Nodes wait until a new grandchild shows up below a copied node;
  then the grandchild takes the least string of the reservoir and every
  other waiting node takes fresh long strings.
* `copy_grandchild_case` builds a copy on natural numbers when a node `a`
  has infinitely many children with children of their own. One spare
  number is issued per stage and later hung below `a` through a fresh
  link node once the oracle shows an unused child/grandchild pair.
* `copy_interval_case` builds a copy on natural numbers when the children
  of `a` strictly between `u0` and `u1` form an infinite set of leaves.
  One spare leaf is issued per stage and placed in that interval by
  `IntervalOrderCopier`.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Set, Tuple

from .binstrings import fresh_of_length, least_unused, sort_key, token
from .config import get_oracle_steps
from .errors import ConfigError, InvariantBreach
from .structures import RpoTree, isomorphic
from .trace import StageTrace

logger = logging.getLogger(__name__)

ENGINE_PTIME = "rpo-ptime"
ENGINE_PUNCTUAL = "rpo-punctual"

CASES = ("A", "B")


@dataclass(frozen=True)
class Reveal:
    node: int
    parent: Optional[int]
    after: Tuple[int, ...] = ()
    before: Tuple[int, ...] = ()


class OracleNormalizer:
    """
    Buffers raw reveals and releases at most one connected node per stage.

    The released part is always a tree: a reveal waits until its parent
    has been released. `order` lists released nodes in release order,
    which is also a top-down order.
    """

    def __init__(self, oracle: Iterable[Optional[Reveal]], steps_per_stage: int | None = None):
        steps_per_stage = get_oracle_steps() if steps_per_stage is None else steps_per_stage
        if steps_per_stage < 1:
            raise ConfigError(f"oracle_steps must be >= 1, got {steps_per_stage}")
        self.steps_per_stage = steps_per_stage
        self._source = iter(oracle)
        self._pending: List[Reveal] = []
        self._announced: Set[int] = set()
        self.root: Optional[int] = None
        self.parent: Dict[int, int] = {}
        self.less: Set[Tuple[int, int]] = set()
        self.kids: Dict[int, List[int]] = {}
        self.order: List[int] = []
        self.exhausted = False
        self.steps = 0

    def __contains__(self, node) -> bool:
        return node in self.kids

    def __len__(self) -> int:
        return len(self.kids)

    def pull(self) -> Optional[Reveal]:
        """Run one stage worth of oracle steps and release at most one node."""
        for _ in range(self.steps_per_stage):
            if self.exhausted:
                break
            try:
                raw = next(self._source)
            except StopIteration:
                self.exhausted = True
                break
            self.steps += 1
            if raw is not None:
                self._admit(raw)
        return self._release()

    def _admit(self, raw: Reveal):
        if raw.node in self._announced:
            raise InvariantBreach("oracle normal form", f"node {raw.node} revealed twice")
        if raw.parent is None and (self.root is not None or any(p.parent is None for p in self._pending)):
            raise InvariantBreach("oracle normal form", f"node {raw.node} would be a second root")
        self._announced.add(raw.node)
        self._pending.append(raw)

    def _release(self) -> Optional[Reveal]:
        for k, reveal in enumerate(self._pending):
            if reveal.parent is None or reveal.parent in self.kids:
                del self._pending[k]
                self._apply(reveal)
                return reveal
        return None

    def _apply(self, reveal: Reveal):
        node, par = reveal.node, reveal.parent
        if par is None:
            self.root = node
        else:
            siblings = set(self.kids[par])
            after, before = set(reveal.after), set(reveal.before)
            if after & before or after | before != siblings:
                raise InvariantBreach(
                    "oracle normal form",
                    f"node {node}: order facts name {sorted(after | before)}, siblings are {sorted(siblings)}",
                )
            self.parent[node] = par
            self.kids[par].append(node)
            self.less.update((x, node) for x in after)
            self.less.update((node, y) for y in before)
        self.kids[node] = []
        self.order.append(node)

    @property
    def drained(self) -> bool:
        return self.exhausted and not self._pending

    def children(self, node) -> Tuple[int, ...]:
        return tuple(self.kids.get(node, ()))

    def is_less(self, x, y) -> bool:
        return (x, y) in self.less

    def tree(self, keep: Optional[Iterable[int]] = None) -> RpoTree:
        nodes = set(self.kids) if keep is None else set(keep)
        return RpoTree(
            self.root,
            {c: p for c, p in self.parent.items() if c in nodes},
            {(x, y) for x, y in self.less if x in nodes and y in nodes},
        )


def _record_reveal(trace: StageTrace, stage: int, reveal: Reveal):
    trace.append(stage=stage, kind="reveal", node=reveal.node, parent=reveal.parent,
                 after=reveal.after, before=reveal.before)


# ---------------------------------------------------------------------------
# Shared image bookkeeping
# ---------------------------------------------------------------------------

@dataclass
class CopierState:
    """
    The copy R under construction and its link to the revealed tree T.

    `copy_of` maps T nodes to R nodes and `source_of` is its inverse;
    R nodes without a source are reservoir strings or spare numbers.
    """
    source: OracleNormalizer
    trace: StageTrace
    stage: int = 0
    copy_of: Dict[Any, Any] = field(default_factory=dict)
    source_of: Dict[Any, Any] = field(default_factory=dict)
    parent: Dict[Any, Any] = field(default_factory=dict)
    less: Set[Tuple[Any, Any]] = field(default_factory=set)
    labels: Dict[Any, str] = field(default_factory=dict)
    checkpoints: List[int] = field(default_factory=list)
    work: int = 0

    def tok(self, node) -> str:
        return token(node) if isinstance(node, str) else str(node)

    def add_node(self, node, label: str, size: int):
        self.labels[node] = label
        self.work += 1
        self.trace.append(stage=self.stage, kind="node", id=self.tok(node), size=size, label=label)

    def link(self, node, t_node):
        self.copy_of[t_node] = node
        self.source_of[node] = t_node
        self.trace.append(stage=self.stage, kind="map", id=self.tok(node), source=t_node)

    def add_edge(self, child, par):
        self.parent[child] = par
        self.work += 1
        self.trace.append(stage=self.stage, kind="edge", child=self.tok(child), parent=self.tok(par))

    def add_less(self, x, y):
        if (x, y) in self.less:
            return
        self.less.add((x, y))
        self.work += 1
        self.trace.append(stage=self.stage, kind="less", x=self.tok(x), y=self.tok(y))

    def mirror_facts(self, t_nodes: Iterable[int]):
        """Copy parent and sibling-order facts of freshly mapped T nodes."""
        for t in t_nodes:
            par = self.source.parent.get(t)
            if par is not None and self.copy_of[t] not in self.parent:
                self.add_edge(self.copy_of[t], self.copy_of[par])
        for t in t_nodes:
            par = self.source.parent.get(t)
            if par is None:
                continue
            for sib in self.source.children(par):
                if sib == t or sib not in self.copy_of:
                    continue
                if self.source.is_less(sib, t):
                    self.add_less(self.copy_of[sib], self.copy_of[t])
                elif self.source.is_less(t, sib):
                    self.add_less(self.copy_of[t], self.copy_of[sib])

    def fully_mapped(self) -> bool:
        return all(t in self.copy_of for t in self.source.order)

    def end_stage(self, oracle_steps: int):
        self.trace.append(stage=self.stage, kind="stage", steps=self.work + oracle_steps)
        self.work = 0
        self.stage += 1

    def checkpoint(self):
        self.checkpoints.append(self.stage)
        self.trace.append(stage=self.stage, kind="checkpoint", size=len(self.source))

    def image(self) -> RpoTree:
        """R restricted to nodes that copy a revealed node."""
        mapped = set(self.source_of)
        root = self.copy_of.get(self.source.root)
        return RpoTree(
            root,
            {c: p for c, p in self.parent.items() if c in mapped and p in mapped},
            {(x, y) for x, y in self.less if x in mapped and y in mapped},
        )

    def fragment(self) -> RpoTree:
        """T restricted to the nodes that have a copy."""
        return self.source.tree(self.copy_of)


# ---------------------------------------------------------------------------
# Copy on binary strings
# ---------------------------------------------------------------------------

@dataclass
class PtimeCopyState(CopierState):
    reservoir: List[str] = field(default_factory=list)
    used: Set[str] = field(default_factory=lambda: {""})
    next_rank: int = 1
    max_length: int = 0


def _find_trigger(state: PtimeCopyState) -> Optional[Tuple[int, int, int]]:
    # an unmapped grandchild c of a mapped node a through an unmapped child b
    parent = state.source.parent
    for c in state.source.order:
        b = parent.get(c)
        if c in state.copy_of or b is None or b in state.copy_of:
            continue
        a = parent.get(b)
        if a is not None and a in state.copy_of:
            return a, b, c
    return None


def ptime_stage(state: PtimeCopyState) -> PtimeCopyState:
    """
    One stage: oracle steps, at most one trigger, one new reservoir string.
    """
    s = state.stage
    before = state.source.steps
    reveal = state.source.pull()
    if reveal is not None:
        _record_reveal(state.trace, s, reveal)
        if reveal.parent is None:
            state.add_node("", "root", 0)
            state.link("", reveal.node)

    trigger = _find_trigger(state)
    if trigger is not None:
        a, b, c = trigger
        if not state.reservoir:
            raise InvariantBreach("reservoir", "trigger with an empty reservoir", s)
        short = state.reservoir.pop(0)
        state.trace.append(stage=s, kind="trigger", a=a, b=b, c=c, short=token(short))
        state.link(short, c)

        waiting = [t for t in state.source.order if t not in state.copy_of]
        length = max(s, state.max_length + 1)
        fresh = fresh_of_length(length, state.used, len(waiting))
        for t, alpha in zip(waiting, fresh):
            state.used.add(alpha)
            state.max_length = max(state.max_length, len(alpha))
            state.add_node(alpha, "long", len(alpha))
            state.link(alpha, t)
        state.mirror_facts([c] + waiting)
        logger.info(f"🌱 stage {s}: {c} takes {short!r}, {len(waiting)} long strings of length {length}")
        if state.fully_mapped():
            state.checkpoint()

    alpha, n = least_unused(state.used, state.next_rank)
    state.next_rank = n + 1
    state.used.add(alpha)
    state.max_length = max(state.max_length, len(alpha))
    state.reservoir.append(alpha)
    state.add_node(alpha, "short", len(alpha))
    state.trace.append(stage=s, kind="reserve", id=token(alpha))

    state.end_stage(state.source.steps - before)
    return state


def ptime_rpo_copy(
    oracle: Iterable[Optional[Reveal]],
    horizon: int,
    steps: int | None = None,
    name: str = "oracle"
) -> PtimeCopyState:
    """Run stages 0..horizon of the string copy."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    source = OracleNormalizer(oracle, steps)
    trace = StageTrace(ENGINE_PTIME, horizon, oracle=name, steps=source.steps_per_stage, query="length")
    state = PtimeCopyState(source=source, trace=trace)
    for _ in range(horizon + 1):
        ptime_stage(state)
    return state


# ---------------------------------------------------------------------------
# Copies on natural numbers
# ---------------------------------------------------------------------------

@dataclass
class PunctualCopyState(CopierState):
    case: str = "A"
    a: Optional[int] = None
    spares: List[int] = field(default_factory=list)
    used: Set[int] = field(default_factory=set)
    next_id: int = 0
    order_copier: Optional["IntervalOrderCopier"] = None
    u0: Optional[int] = None
    u1: Optional[int] = None

    def fresh(self) -> int:
        while self.next_id in self.used:
            self.next_id += 1
        self.used.add(self.next_id)
        return self.next_id


def _prologue(state: PunctualCopyState, needed: Tuple[int, ...], limit: int):
    # stage 0 runs the oracle until the configured nodes are known
    s = state.stage
    pulls = 0
    while not all(n in state.source for n in needed):
        if pulls >= limit or (state.source.drained):
            missing = [n for n in needed if n not in state.source]
            raise InvariantBreach("case data", f"nodes {missing} never revealed", s)
        reveal = state.source.pull()
        pulls += 1
        if reveal is not None:
            _record_reveal(state.trace, s, reveal)


def _copy_identically(state: PunctualCopyState, t_nodes: Iterable[int]):
    t_nodes = list(t_nodes)
    for t in t_nodes:
        state.used.add(t)
        state.add_node(t, "copy", t)
        state.link(t, t)
    state.mirror_facts(t_nodes)


def _issue_spare(state: PunctualCopyState) -> int:
    d = state.fresh()
    state.spares.append(d)
    state.add_node(d, "spare", d)
    return d


def grandchild_stage(state: PunctualCopyState) -> PunctualCopyState:
    s = state.stage
    before = state.source.steps
    reveal = state.source.pull()
    if reveal is not None:
        _record_reveal(state.trace, s, reveal)

    waiting = [d for d in state.spares if d not in state.source_of]
    pair = None
    if waiting:
        a = state.a
        for y in state.source.children(a):
            if y in state.copy_of:
                continue
            z = next((z for z in state.source.children(y) if z not in state.copy_of), None)
            if z is not None:
                pair = (y, z)
                break

    if pair is not None:
        y, z = pair
        d = waiting[0]
        e = state.fresh()
        state.add_node(e, "link", e)
        state.trace.append(stage=s, kind="connect", spare=d, link=e, child=y, grandchild=z)
        state.link(d, z)
        state.link(e, y)
        mimic = [t for t in state.source.order if t not in state.copy_of]
        for t in mimic:
            node = state.fresh()
            state.add_node(node, "copy", node)
            state.link(node, t)
        state.mirror_facts([y, z] + mimic)
        logger.info(f"🌱 stage {s}: spare {d} hung below {state.copy_of[state.a]} via {e}")
        if state.fully_mapped():
            state.checkpoint()

    _issue_spare(state)
    state.end_stage(state.source.steps - before)
    return state


def copy_grandchild_case(
    oracle: Iterable[Optional[Reveal]],
    a: int,
    horizon: int,
    steps: int | None = None,
    name: str = "oracle"
) -> PunctualCopyState:
    """Copy a tree in which `a` has infinitely many children with children."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    source = OracleNormalizer(oracle, steps)
    trace = StageTrace(ENGINE_PUNCTUAL, horizon, oracle=name, steps=source.steps_per_stage,
                       case="A", a=a, query="intro")
    state = PunctualCopyState(source=source, trace=trace, case="A", a=a)

    _prologue(state, (a,), limit=16 * (horizon + 1))
    _copy_identically(state, state.source.order)
    _issue_spare(state)
    state.end_stage(state.source.steps)
    for _ in range(horizon):
        grandchild_stage(state)
    return state


class IntervalOrderCopier:
    """
    Places spare leaves into a linear order that copies the revealed
    interval elements, deciding each spare's position when it is issued.

    Spares issued while no element is waiting go to the right end and wait
    for an element revealed to the right of everything seen so far; spares
    placed for an element always go in front of them.
    """

    def __init__(self, precedes: Callable[[int, int], bool]):
        self.precedes = precedes
        self.order: List[int] = []
        self.match: Dict[int, int] = {}
        self.pending: List[int] = []
        self.unmatched: List[int] = []
        self.seen: List[int] = []

    def offer(self, element: int) -> Optional[int]:
        """A newly revealed element; returns the pending spare it fills, if any."""
        right_end = all(self.precedes(x, element) for x in self.seen)
        self.seen.append(element)
        if right_end and self.pending:
            spare = self.pending.pop(0)
            self.match[spare] = element
            return spare
        self.unmatched.append(element)
        return None

    def add_spare(self, spare: int) -> Optional[int]:
        """Insert a new spare; returns the element it copies, if one was waiting."""
        if not self.unmatched:
            self.order.append(spare)
            self.pending.append(spare)
            return None
        element = self.unmatched.pop(0)
        position = 0
        for k, other in enumerate(self.order):
            if other in self.pending:
                break
            if self.precedes(self.match[other], element):
                position = k + 1
        self.order.insert(position, spare)
        self.match[spare] = element
        return element

    def before(self, x: int, y: int) -> bool:
        return self.order.index(x) < self.order.index(y)


def interval_stage(state: PunctualCopyState) -> PunctualCopyState:
    s = state.stage
    before = state.source.steps
    reveal = state.source.pull()
    if reveal is not None:
        _record_reveal(state.trace, s, reveal)
        node = reveal.node
        if _in_interval(state, node):
            spare = state.order_copier.offer(node)
            if spare is not None:
                state.link(spare, node)
        else:
            par = reveal.parent
            if par is not None and _in_interval(state, par):
                raise InvariantBreach("case data", f"interval node {par} has a child {node}", s)
            copy = state.fresh()
            state.add_node(copy, "copy", copy)
            state.link(copy, node)
            state.mirror_facts([node])
            if par == state.a:
                _order_against_spares(state, copy, node)

    d = _issue_spare(state)
    parent = state.copy_of[state.a]
    state.add_edge(d, parent)
    for sibling in state.source.children(state.a):
        if sibling not in state.copy_of or _in_interval(state, sibling):
            continue
        if _not_above(state, sibling, state.u0):
            state.add_less(state.copy_of[sibling], d)
        else:
            state.add_less(d, state.copy_of[sibling])
    element = state.order_copier.add_spare(d)
    for other in state.order_copier.order:
        if other == d:
            continue
        if state.order_copier.before(other, d):
            state.add_less(other, d)
        else:
            state.add_less(d, other)
    if element is not None:
        state.link(d, element)

    state.end_stage(state.source.steps - before)
    return state


def _not_above(state: PunctualCopyState, x: int, y: int) -> bool:
    return x == y or state.source.is_less(x, y)


def _in_interval(state: PunctualCopyState, node: int) -> bool:
    return (
        state.source.parent.get(node) == state.a
        and state.source.is_less(state.u0, node)
        and state.source.is_less(node, state.u1)
    )


def _order_against_spares(state: PunctualCopyState, copy: int, node: int):
    low = _not_above(state, node, state.u0)
    for d in state.spares:
        if low:
            state.add_less(copy, d)
        else:
            state.add_less(d, copy)


def copy_interval_case(
    oracle: Iterable[Optional[Reveal]],
    a: int,
    u0: int,
    u1: int,
    horizon: int,
    steps: int | None = None,
    name: str = "oracle"
) -> PunctualCopyState:
    """Copy a tree in which the children of `a` between u0 and u1 are infinitely many leaves."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    source = OracleNormalizer(oracle, steps)
    trace = StageTrace(ENGINE_PUNCTUAL, horizon, oracle=name, steps=source.steps_per_stage,
                       case="B", a=a, u0=u0, u1=u1, query="intro")
    state = PunctualCopyState(source=source, trace=trace, case="B", a=a, u0=u0, u1=u1)
    state.order_copier = IntervalOrderCopier(source.is_less)

    _prologue(state, (a, u0, u1), limit=16 * (horizon + 1))
    if source.parent.get(u0) != a or source.parent.get(u1) != a or not source.is_less(u0, u1):
        raise InvariantBreach("case data", f"need {u0} < {u1} as children of {a}", 0)

    interval = [t for t in source.order if _in_interval(state, t)]
    _copy_identically(state, [t for t in source.order if t not in interval])
    for t in interval:
        state.order_copier.offer(t)
    state.end_stage(state.source.steps)
    for _ in range(horizon):
        interval_stage(state)
    return state


def punctual_rpo_copy(
    oracle: Iterable[Optional[Reveal]],
    case: str,
    case_data: Dict[str, int],
    horizon: int,
    steps: int | None = None,
    name: str = "oracle"
) -> PunctualCopyState:
    """Dispatch on the configured case; case detection itself is not attempted."""
    try:
        if case == "A":
            return copy_grandchild_case(oracle, int(case_data["a"]), horizon, steps, name)
        if case == "B":
            return copy_interval_case(oracle, int(case_data["a"]), int(case_data["u0"]),
                                      int(case_data["u1"]), horizon, steps, name)
    except KeyError as e:
        raise ConfigError(f"case {case} needs case_data key {e.args[0]}") from e
    raise ConfigError(f"case must be one of {CASES}, got {case!r}")


# ---------------------------------------------------------------------------
# Replay verification
# ---------------------------------------------------------------------------

def _parse_id(text: str):
    return text[1:] if text.startswith("^") else int(text)


def verify_copy_trace(trace: StageTrace) -> List[Tuple[str, bool, str]]:
    """
    Rebuild T, R and the node map from a copy trace and check them.

    Copy soundness is checked at every stage end, isomorphism at every
    checkpoint and at the horizon. String copies also get the reservoir
    and domain-coverage checks.
    """
    strings = trace.engine == ENGINE_PTIME
    t_parent: Dict[int, int] = {}
    t_less: Set[Tuple[int, int]] = set()
    t_root = None
    r_parent: Dict[Any, Any] = {}
    r_less: Set[Tuple[Any, Any]] = set()
    copy_of: Dict[int, Any] = {}
    source_of: Dict[Any, int] = {}
    placed: Set[str] = set()
    reservoir: List[str] = []
    failures: Dict[str, str] = {}

    def fail(name: str, detail: str):
        failures.setdefault(name, detail)

    def image():
        return RpoTree(
            copy_of.get(t_root),
            {c: p for c, p in r_parent.items() if c in source_of},
            {(x, y) for x, y in r_less if x in source_of and y in source_of},
        )

    def fragment():
        nodes = set(copy_of)
        return RpoTree(t_root, {c: p for c, p in t_parent.items() if c in nodes},
                       {(x, y) for x, y in t_less if x in nodes and y in nodes})

    for record in trace:
        kind = record.get("kind")
        s = record.stage
        if kind == "reveal":
            node = record.as_int("node")
            par = record.as_int("parent")
            if par is None:
                t_root = node
            else:
                t_parent[node] = par
                t_less.update((x, node) for x in record.as_ints("after"))
                t_less.update((node, y) for y in record.as_ints("before"))
        elif kind == "node":
            if strings and record.get("label") in ("long", "root"):
                placed.add(_parse_id(record["id"]))
        elif kind == "reserve":
            reservoir.append(_parse_id(record["id"]))
        elif kind == "map":
            node = _parse_id(record["id"])
            if node in source_of:
                fail("replay", f"stage {s}: {record['id']} mapped twice")
            copy_of[record.as_int("source")] = node
            source_of[node] = record.as_int("source")
            if strings and node in reservoir:
                reservoir.remove(node)
                placed.add(node)
        elif kind == "edge":
            child, par = _parse_id(record["child"]), _parse_id(record["parent"])
            r_parent[child] = par
            if strings and (child in reservoir or par in reservoir):
                fail("reservoir neutrality", f"stage {s}: edge {record['child']} -> {record['parent']}")
        elif kind == "less":
            x, y = _parse_id(record["x"]), _parse_id(record["y"])
            r_less.add((x, y))
            if strings and (x in reservoir or y in reservoir):
                fail("reservoir neutrality", f"stage {s}: order fact {record['x']} < {record['y']}")
        elif kind == "checkpoint":
            if len(copy_of) != len(set(t_parent) | {t_root}):
                fail("checkpoint isomorphism", f"stage {s}: not every revealed node is copied")
            elif isomorphic(image(), fragment()) is None:
                fail("checkpoint isomorphism", f"stage {s}: no isomorphism")
        elif kind == "stage":
            for child, par in r_parent.items():
                if child in source_of and par in source_of and t_parent.get(source_of[child]) != source_of[par]:
                    fail("copy soundness", f"stage {s}: edge {child} -> {par} has no counterpart")
            for t_child, t_par in t_parent.items():
                if t_child in copy_of and t_par in copy_of and r_parent.get(copy_of[t_child]) != copy_of[t_par]:
                    fail("copy soundness", f"stage {s}: edge {t_child} -> {t_par} not copied")
            for x, y in r_less:
                if x in source_of and y in source_of and (source_of[x], source_of[y]) not in t_less:
                    fail("copy soundness", f"stage {s}: order fact {x} < {y} has no counterpart")
            for x, y in t_less:
                if x in copy_of and y in copy_of and (copy_of[x], copy_of[y]) not in r_less:
                    fail("copy soundness", f"stage {s}: order fact {x} < {y} not copied")
            if strings and reservoir:
                newest = max(reservoir, key=sort_key)
                covered = placed | set(reservoir)
                rank_newest = int("1" + newest, 2) - 1
                missing = next((n for n in range(rank_newest) if bin(n + 1)[3:] not in covered), None)
                if missing is not None:
                    fail("domain coverage", f"stage {s}: {bin(missing + 1)[3:]!r} skipped")

    if t_root is not None and copy_of and isomorphic(image(), fragment()) is None:
        fail("final fragment", "copied part of R is not isomorphic to the copied part of T")

    names = ["replay", "copy soundness", "checkpoint isomorphism", "final fragment"]
    if strings:
        names += ["reservoir neutrality", "domain coverage"]
    return [(name, name not in failures, failures.get(name, "")) for name in names]
