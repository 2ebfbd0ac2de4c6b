"""
Punctual copies of injective prefix trees.

The oracle yields, per step, None or a path (a tuple of node ids starting
at the root). A path may arrive before its proper prefixes; those are
learned with it.

In `branch` mode the tree is promised an infinite branch. A new path that
extends what we know by a single node waits in the queue W. A path that
jumps at least two nodes past its longest known prefix flushes W: every
queued path, then the jumping one, is realized in R with the least unused
numbers for its inner nodes and the least unused number >= s for its tip.

In `hub` mode the tree has one node with infinitely many children and no
infinite branch. Paths are copied at once, and each idle stage hangs a
placeholder child below the hub's copy; revealed hub children take the
oldest placeholder.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from .binstrings import nth_string, token
from .config import get_oracle_steps
from .errors import ConfigError, InvariantBreach
from .structures import PrefixTree, isomorphic
from .trace import StageTrace

logger = logging.getLogger(__name__)

ENGINE = "prefix-copy"
MODES = ("branch", "hub")
PRESENTATIONS = ("plain", "ptime")


@dataclass
class PrefixCopyState:
    trace: StageTrace
    mode: str = "branch"
    presentation: str = "plain"
    hub: Optional[Any] = None
    steps_per_stage: int = 4
    stage: int = 0
    root: Optional[Any] = None
    known: Set[tuple] = field(default_factory=set)
    where: Dict[Any, tuple] = field(default_factory=dict)
    waiting: List[tuple] = field(default_factory=list)
    copy_of: Dict[Any, int] = field(default_factory=dict)
    source_of: Dict[int, Any] = field(default_factory=dict)
    paths: Set[tuple] = field(default_factory=set)
    used: Set[int] = field(default_factory=set)
    placeholders: List[int] = field(default_factory=list)
    flushes: int = 0
    exhausted: bool = False
    work: int = 0

    def fresh(self, floor: int = 0) -> int:
        n = floor
        while n in self.used:
            n += 1
        self.used.add(n)
        return n

    def size_of(self, n: int) -> int:
        return len(nth_string(n)) if self.presentation == "ptime" else n

    def image(self) -> PrefixTree:
        return PrefixTree(frozenset(p for p in self.paths if all(x in self.source_of for x in p)))

    def fragment(self) -> PrefixTree:
        return PrefixTree(frozenset(p for p in self.known if all(x in self.copy_of for x in p)))


def _learn(state: PrefixCopyState, path: tuple) -> int:
    """Add a path and its prefixes to T; returns the length of its longest known prefix."""
    if not path:
        raise InvariantBreach("prefix injectivity", "empty path", state.stage)
    if state.root is None:
        state.root = path[0]
    if path[0] != state.root:
        raise InvariantBreach("prefix injectivity", f"path {path} does not start at root {state.root}", state.stage)
    known = 0
    for i, node in enumerate(path):
        prefix = path[:i + 1]
        seen = state.where.get(node)
        if seen is not None and seen != prefix:
            raise InvariantBreach("prefix injectivity", f"node {node} ends both {seen} and {prefix}", state.stage)
        if prefix in state.known:
            known = i + 1
    for i, node in enumerate(path):
        state.where[node] = path[:i + 1]
        state.known.add(path[:i + 1])
    return known


def _place(state: PrefixCopyState, number: int, label: str, t_node):
    fields = dict(stage=state.stage, kind="node", id=number, size=state.size_of(number), label=label)
    if state.presentation == "ptime":
        fields["string"] = token(nth_string(number))
    state.trace.append(**fields)
    state.work += 1
    if t_node is not None:
        _map(state, number, t_node)


def _map(state: PrefixCopyState, number: int, t_node):
    state.copy_of[t_node] = number
    state.source_of[number] = t_node
    state.trace.append(stage=state.stage, kind="map", id=number, source=t_node)


def _declare(state: PrefixCopyState, r_path: tuple):
    state.paths.add(r_path)
    state.work += 1
    state.trace.append(stage=state.stage, kind="path", path=r_path)


def _realize(state: PrefixCopyState, path: tuple):
    k = 0
    while k < len(path) and path[k] in state.copy_of:
        k += 1
    for idx in range(k, len(path)):
        node = path[idx]
        tip = idx == len(path) - 1
        if state.mode == "hub" and idx > 0 and path[idx - 1] == state.hub and state.placeholders:
            _map(state, state.placeholders.pop(0), node)
            continue
        floor = state.stage if tip and state.mode == "branch" else 0
        number = state.fresh(floor)
        _place(state, number, "tip" if tip else "inner", node)
        _declare(state, tuple(state.copy_of[x] for x in path[:idx + 1]))


def prefix_stage(state: PrefixCopyState, source) -> PrefixCopyState:
    s = state.stage
    steps = 0
    discovered = 0
    for _ in range(state.steps_per_stage):
        if state.exhausted:
            break
        try:
            raw = next(source)
        except StopIteration:
            state.exhausted = True
            break
        steps += 1
        if raw is None:
            continue
        path = tuple(raw)
        if path in state.known:
            continue
        discovered += 1
        extends = _learn(state, path)
        state.trace.append(stage=s, kind="discover", path=path, extends=extends)

        if state.mode == "hub":
            _realize(state, path)
        elif len(path) < extends + 2:
            state.waiting.append(path)
            state.trace.append(stage=s, kind="queue", path=path)
        else:
            state.trace.append(stage=s, kind="flush", size=len(state.waiting))
            for queued in state.waiting + [path]:
                _realize(state, queued)
            logger.info(f"🌱 stage {s}: flushed {len(state.waiting)} queued paths and {path}")
            state.waiting.clear()
            state.flushes += 1

    if not discovered:
        state.trace.append(stage=s, kind="idle", bound=s, used=len(state.used))
        if state.mode == "hub" and state.hub in state.copy_of:
            number = state.fresh()
            _place(state, number, "placeholder", None)
            _declare(state, tuple(state.copy_of[x] for x in state.where[state.hub]) + (number,))
            state.placeholders.append(number)

    state.trace.append(stage=s, kind="stage", steps=state.work + steps)
    state.work = 0
    state.stage += 1
    return state


def prefix_tree_copy(
    oracle: Iterable[Optional[tuple]],
    horizon: int,
    mode: str = "branch",
    presentation: str = "plain",
    hub: Optional[Any] = None,
    steps: int | None = None,
    name: str = "oracle"
) -> PrefixCopyState:
    """Run stages 0..horizon of the prefix-tree copier."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if presentation not in PRESENTATIONS:
        raise ConfigError(f"presentation must be one of {PRESENTATIONS}, got {presentation!r}")
    if mode == "hub" and hub is None:
        raise ConfigError("hub mode needs the hub node")
    steps = get_oracle_steps() if steps is None else steps
    if steps < 1:
        raise ConfigError(f"oracle_steps must be >= 1, got {steps}")

    meta = dict(oracle=name, steps=steps, mode=mode, presentation=presentation, query="intro")
    if hub is not None:
        meta["hub"] = hub
    trace = StageTrace(ENGINE, horizon, **meta)
    state = PrefixCopyState(trace=trace, mode=mode, presentation=presentation, hub=hub, steps_per_stage=steps)
    source = iter(oracle)
    for _ in range(horizon + 1):
        prefix_stage(state, source)
    return state


def verify_prefix_trace(trace: StageTrace) -> List[Tuple[str, bool, str]]:
    """
    Replay a prefix-copy trace.

    Checks that W empties at every flush, that the node map is an
    embedding at every stage end, that no positive path contradicts an
    earlier idle stage's negatives, and that the copied parts match.
    """
    known: Set[tuple] = set()
    paths: Set[tuple] = set()
    copy_of: Dict[int, int] = {}
    source_of: Dict[int, int] = {}
    used: Set[int] = set()
    queued: List[tuple] = []
    due: List[tuple] = []
    negatives: List[Tuple[int, frozenset]] = []
    failures: Dict[str, str] = {}
    last_discovered: Optional[tuple] = None
    last_extends = -1

    def fail(name: str, detail: str):
        failures.setdefault(name, detail)

    for record in trace:
        kind = record.get("kind")
        s = record.stage
        if kind == "discover":
            path = record.as_ints("path")
            last_discovered = path
            last_extends = record.as_int("extends")
            known.update(path[:i + 1] for i in range(len(path)))
        elif kind == "queue":
            path = record.as_ints("path")
            if len(path) != last_extends + 1:
                fail("W discipline", f"stage {s}: queued {path} is not a one-node extension")
            queued.append(path)
        elif kind == "flush":
            due.extend(queued + ([last_discovered] if last_discovered else []))
            queued.clear()
        elif kind == "node":
            used.add(record.as_int("id"))
        elif kind == "map":
            copy_of[record.as_int("source")] = record.as_int("id")
            source_of[record.as_int("id")] = record.as_int("source")
        elif kind == "path":
            r_path = record.as_ints("path")
            for bound, snapshot in negatives:
                if len(r_path) <= bound and all(x in snapshot and x <= bound for x in r_path):
                    fail("negative consistency", f"stage {s}: {r_path} was declared absent at stage {bound}")
            paths.add(r_path)
        elif kind == "idle":
            negatives.append((record.as_int("bound"), frozenset(used)))
        elif kind == "stage":
            for path in due:
                if path[-1] not in copy_of:
                    fail("W discipline", f"stage {s}: {path} left the queue uncopied")
            due.clear()
            for r_path in paths:
                if all(x in source_of for x in r_path) and tuple(source_of[x] for x in r_path) not in known:
                    fail("embedding consistency", f"stage {s}: {r_path} has no counterpart")
            for path in known:
                if all(x in copy_of for x in path) and tuple(copy_of[x] for x in path) not in paths:
                    fail("embedding consistency", f"stage {s}: {path} not copied")

    image = PrefixTree(frozenset(p for p in paths if all(x in source_of for x in p)))
    fragment = PrefixTree(frozenset(p for p in known if all(x in copy_of for x in p)))
    if len(image) and isomorphic(image, fragment) is None:
        fail("final fragment", "copied paths are not isomorphic to their sources")

    names = ["W discipline", "embedding consistency", "negative consistency", "final fragment"]
    return [(name, name not in failures, failures.get(name, "")) for name in names]
