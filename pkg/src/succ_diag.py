"""
Binary successor tree diagonalizer.

Our tree lives on N with 0 as the empty node and 1 as the root, and grows
by one layer per stage. Stage s looks at adversary s-1: if its fragment to
depth s is a successor tree agreeing with ours up to depth s-1, our layer
s is made full exactly when theirs is not. Otherwise the layer is full.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .adversary import OutOfFuel, SignatureHandle
from .config import get_node_budget
from .errors import StructureError
from .status import Certificate
from .structures import SuccessorTree, isomorphic, validate_structure, ViolationReport
from .trace import StageTrace

logger = logging.getLogger(__name__)

ENGINE = "succ-diag"
EMPTY = 0
ROOT = 1


@dataclass
class SuccessorState:
    handles: List[SignatureHandle]
    trace: StageTrace
    stage: int = 0
    s1: Dict[int, int] = field(default_factory=dict)
    s2: Dict[int, int] = field(default_factory=dict)
    layers: List[List[int]] = field(default_factory=lambda: [[ROOT]])
    next_id: int = 2
    budget: Optional[int] = None

    def tree(self, depth: Optional[int] = None) -> SuccessorTree:
        """Our tree to the given depth, nodes on the last layer sent to the empty node."""
        depth = len(self.layers) - 1 if depth is None else depth
        s1 = {EMPTY: EMPTY}
        s2 = {EMPTY: EMPTY}
        for d, layer in enumerate(self.layers[:depth + 1]):
            for x in layer:
                s1[x] = self.s1.get(x, EMPTY) if d < depth else EMPTY
                s2[x] = self.s2.get(x, EMPTY) if d < depth else EMPTY
        return SuccessorTree(s1, s2, EMPTY, ROOT)


@dataclass(frozen=True)
class Fragment:
    """What an adversary showed to depth s, or why it is not a successor tree."""
    tree: Optional[SuccessorTree]
    layers: Tuple[Tuple[int, ...], ...] = ()
    reason: Optional[str] = None
    clause: Optional[str] = None

    def truncated(self, depth: int) -> SuccessorTree:
        s1, s2 = {self.tree.empty: self.tree.empty}, {self.tree.empty: self.tree.empty}
        for d, layer in enumerate(self.layers[:depth + 1]):
            for x in layer:
                s1[x] = self.tree.s1.get(x, self.tree.empty) if d < depth else self.tree.empty
                s2[x] = self.tree.s2.get(x, self.tree.empty) if d < depth else self.tree.empty
        return SuccessorTree(s1, s2, self.tree.empty, self.tree.root)

    def is_full(self, depth: int) -> bool:
        if depth == 0:
            return True
        return all(
            self.tree.s1[x] != self.tree.empty and self.tree.s2[x] != self.tree.empty
            for x in self.layers[depth - 1]
        )


def fetch_fragment(handle: SignatureHandle, depth: int, stage: int) -> Fragment:
    """Breadth-first walk of an adversary's successor maps down to `depth`."""
    try:
        empty = handle.call("empty", (), stage)
        root = handle.call("root", (), stage)
        if root == empty:
            return Fragment(None, reason="not-successor-tree", clause="root-is-empty")
        if handle.call("s1", (empty,), stage) != empty or handle.call("s2", (empty,), stage) != empty:
            return Fragment(None, reason="not-successor-tree", clause="empty-successors")
        s1: Dict[int, int] = {empty: empty}
        s2: Dict[int, int] = {empty: empty}
        seen = {root}
        layers = [(root,)]
        for _ in range(depth):
            nxt = []
            for x in layers[-1]:
                for succ, symbol in ((s1, "s1"), (s2, "s2")):
                    y = handle.call(symbol, (x,), stage)
                    succ[x] = y
                    if y == empty:
                        continue
                    if y == root:
                        return Fragment(None, reason="not-successor-tree", clause="root-in-range")
                    if y in seen:
                        return Fragment(None, reason="not-successor-tree", clause="injectivity")
                    seen.add(y)
                    nxt.append(y)
            layers.append(tuple(nxt))
    except OutOfFuel as e:
        return Fragment(None, reason="disqualified", clause=e.adversary.split(".")[-1])
    return Fragment(SuccessorTree(s1, s2, empty, root), tuple(layers))


def new_state(adversaries: Sequence = (), horizon: int = 1, fuel_base: int | None = None,
              budget: int | None = None) -> SuccessorState:
    handles = [SignatureHandle(adv, fuel_base) for adv in adversaries]
    trace = StageTrace(ENGINE, horizon, adversaries=[h.name for h in handles])
    trace.append(stage=0, kind="layer", req=None, verdict="root", reason=None, n=0, added=1)
    return SuccessorState(handles=handles, trace=trace, budget=budget)


def layer_stage(state: SuccessorState) -> SuccessorState:
    """Add layer s, diagonalizing against adversary s-1 when there is one."""
    state.stage += 1
    s = state.stage
    frontier = state.layers[-1]
    n = len(frontier)
    req = s - 1 if s - 1 < len(state.handles) else None

    verdict, reason, clause = "idle", None, None
    if req is not None:
        fragment = fetch_fragment(state.handles[req], s, s)
        if fragment.tree is None:
            verdict, reason, clause = "skip", fragment.reason, fragment.clause
        elif isomorphic(fragment.truncated(s - 1), state.tree(s - 1)) is None:
            verdict, reason = "skip", "fragment-mismatch"
        elif fragment.is_full(s):
            verdict, reason = "flip", "adversary-full"
        else:
            verdict, reason = "full", "adversary-not-full"

    added = 2 * n - 1 if verdict == "flip" else 2 * n
    limit = get_node_budget() if state.budget is None else state.budget
    if state.next_id + added > limit:
        raise StructureError(f"layer {s} would exceed the node budget of {limit}")

    layer = []
    for k, x in enumerate(frontier):
        for side, succ in ((1, state.s1), (2, state.s2)):
            if verdict == "flip" and side == 2 and k == n - 1:
                continue
            y = state.next_id
            state.next_id += 1
            succ[x] = y
            layer.append(y)
            state.trace.append(stage=s, kind="succ", parent=x, side=side, child=y)
    state.layers.append(layer)
    state.trace.append(stage=s, kind="layer", req=req, verdict=verdict, reason=reason, clause=clause,
                       n=n, added=len(layer))
    if verdict == "flip":
        logger.info(f"🧱 stage {s}: R{req} is {s}-full, layer {s} left one short ({len(layer)} nodes)")
    return state


def run_successor_diagonalizer(adversaries: Sequence = (), horizon: int = 1, fuel_base: int | None = None,
                               budget: int | None = None) -> SuccessorState:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    state = new_state(adversaries, horizon, fuel_base, budget)
    for _ in range(horizon):
        layer_stage(state)
    return state


def succ_certificate(trace: StageTrace, i: int) -> Tuple[str, Optional[int], str]:
    """(tag, stage, detail) for adversary i of a successor-diagonalizer trace."""
    record = trace.last(kind="layer", req=i)
    if record is None:
        return Certificate.UNDECIDED, None, ""
    s = record.stage
    reason = record.get("reason")
    if record.get("verdict") in ("flip", "full"):
        return Certificate.FULLNESS_FLIP, s, f"depth={s} ours={'not-full' if reason == 'adversary-full' else 'full'}"
    if reason == "not-successor-tree":
        return Certificate.NOT_SUCCESSOR_TREE, s, record.get("clause", "")
    if reason == "fragment-mismatch":
        return Certificate.FRAGMENT_MISMATCH, s, f"depth<={s - 1}"
    if reason == "disqualified":
        return Certificate.DISQUALIFIED, s, record.get("clause", "")
    return Certificate.UNDECIDED, s, ""


def verify_succ_trace(trace: StageTrace) -> List[Tuple[str, bool, str]]:
    """Replay the layers; check the 2n / 2n-1 rule, the fullness flip and the final tree."""
    s1: Dict[int, int] = {EMPTY: EMPTY}
    s2: Dict[int, int] = {EMPTY: EMPTY}
    layer: List[int] = [ROOT]
    current: List[int] = []
    failures: Dict[str, str] = {}

    def fail(name: str, detail: str):
        failures.setdefault(name, detail)

    for record in trace:
        kind = record.get("kind")
        s = record.stage
        if kind == "succ":
            x, y = record.as_int("parent"), record.as_int("child")
            succ = s1 if record.as_int("side") == 1 else s2
            if x not in layer or x in succ or y in s1 or y in s2 or y in (EMPTY, ROOT) or y in current:
                fail("replay", f"stage {s}: bad successor {x} -> {y}")
            succ[x] = y
            current.append(y)
        elif kind == "layer" and s > 0:
            n, added = record.as_int("n"), record.as_int("added")
            if n != len(layer) or added != len(current):
                fail("replay", f"stage {s}: trace says {n} -> {added}, replay has {len(layer)} -> {len(current)}")
            if added not in (2 * n, 2 * n - 1):
                fail("layer counts", f"stage {s}: {n} nodes gave {added}")
            full = all(s1.get(x, EMPTY) != EMPTY and s2.get(x, EMPTY) != EMPTY for x in layer)
            if (record.get("verdict") == "flip") == full:
                fail("fullness flip", f"stage {s}: verdict {record.get('verdict')} with a {'full' if full else 'short'} layer")
            layer, current = current, []

    for x in layer:
        s1.setdefault(x, EMPTY)
        s2.setdefault(x, EMPTY)
    nodes = set(s1) | set(s2)
    for x in nodes:
        s1.setdefault(x, EMPTY)
        s2.setdefault(x, EMPTY)
    checked = validate_structure("succ", {"nodes": nodes, "s1": s1.items(), "s2": s2.items(),
                                          "empty": EMPTY, "root": ROOT})
    if isinstance(checked, ViolationReport):
        fail("successor tree", checked.describe())

    names = ["replay", "layer counts", "fullness flip", "successor tree"]
    return [(name, name not in failures, failures.get(name, "")) for name in names]
