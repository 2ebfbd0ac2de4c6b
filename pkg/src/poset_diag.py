"""
Poset tree diagonalizer.

Builds a computable, uniquely branching poset tree T in stages. Odd
stages attach a binary branching below every open leaf; even stages run
one strategy per supplied adversary, which blocks a single node of level
i+1 once the adversary's approximation is stable and looks like T up to
that level. A blocked node stops growing, so the adversary ends up with a
strictly larger subtree there.

Node ids form an initial segment of N at every stage; 0 is the root.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .adversary import AdversaryHandle, NotTotalReport, poset_approximation
from .errors import InvariantBreach, StructureError
from .status import Certificate
from .structures import (
    FinitePosetTree,
    ViolationReport,
    attach,
    branching_report,
    isomorphic,
    level_subtree,
    open_leaves,
    tree_height,
)
from .trace import StageTrace

logger = logging.getLogger(__name__)

ENGINE = "poset-diag"


@dataclass
class PosetRequirement:
    """What the strategy for one adversary saw last."""
    index: int
    name: str
    verdict: str = "pending"
    reason: Optional[str] = None
    blocked_node: Optional[int] = None
    last_stage: Optional[int] = None


@dataclass
class PosetConstructionState:
    tree: FinitePosetTree
    blocked: frozenset
    stage: int
    requirements: List[PosetRequirement]
    handles: List[AdversaryHandle]
    trace: StageTrace
    history: Dict[int, FinitePosetTree] = field(default_factory=dict)
    budget: Optional[int] = None


def new_state(
    adversaries: Sequence = (),
    horizon: int = 1,
    fuel_base: int | None = None,
    budget: int | None = None
) -> PosetConstructionState:
    """Stage-0 state: the one-node tree {0} and nothing blocked."""
    handles = [AdversaryHandle(program, fuel_base) for program in adversaries]
    names = [h.name for h in handles]
    trace = StageTrace(ENGINE, horizon, adversaries=names)
    tree = FinitePosetTree(0, {})
    state = PosetConstructionState(
        tree=tree,
        blocked=frozenset(),
        stage=0,
        requirements=[PosetRequirement(i, name) for i, name in enumerate(names)],
        handles=handles,
        trace=trace,
        history={0: tree},
        budget=budget,
    )
    trace.append(stage=0, kind="tree", size=1, blocked=())
    return state


# ---------------------------------------------------------------------------
# Odd stages
# ---------------------------------------------------------------------------

def _branching(leaf: int, chain: int, first: int) -> Tuple[FinitePosetTree, int]:
    # addend rooted at the leaf itself: `chain` new nodes, then two children
    parent = {}
    above = leaf
    for node in range(first, first + chain):
        parent[node] = above
        above = node
    parent[first + chain] = above
    parent[first + chain + 1] = above
    return FinitePosetTree(leaf, parent), above


def expansionary_stage(state: PosetConstructionState) -> PosetConstructionState:
    """
    Attach a binary branching below each open leaf l_1 < ... < l_n.

    The new branching node x_j gets |T_{>=x_j}| = H(T_{s-1}) + j - 1, so
    every new length is fresh and the tree stays uniquely branching.
    """
    s = state.stage
    if s % 2 != 1:
        raise InvariantBreach("stage parity", f"expansionary stage must be odd, got {s}", s)

    tree = state.tree
    leaves = open_leaves(tree, state.blocked)
    if isinstance(leaves, ViolationReport):
        raise InvariantBreach("blocking discipline", leaves.describe(), s)
    if not leaves:
        raise InvariantBreach("open leaf", "no open leaf to extend", s)

    height = tree_height(tree)
    depth = dict(tree.depth)
    for j, leaf in enumerate(leaves, start=1):
        length = height + j - 1
        chain = length - depth[leaf]
        if chain < 0:
            raise InvariantBreach("branching length", f"leaf {leaf} already deeper than {length}", s)
        first = len(tree)
        addend, x = _branching(leaf, chain, first)
        tree = attach(tree, leaf, addend, state.budget)
        state.trace.append(stage=s, kind="exp", j=j, leaf=leaf, length=length, chain=chain, first=first, x=x)

    report = branching_report(tree)
    if not report.uniquely_branching:
        raise InvariantBreach("unique branching", f"lengths {report.lengths()}", s)

    logger.info(f"🌱 stage {s}: {len(leaves)} branchings attached, tree has {len(tree)} nodes")
    state.tree = tree
    return state


# ---------------------------------------------------------------------------
# Even stages
# ---------------------------------------------------------------------------

@dataclass
class _Readiness:
    ready: bool
    reason: str
    approximation_size: int
    previous_size: int
    theirs: Optional[FinitePosetTree] = None
    iso: Optional[Dict[int, int]] = None
    clause: Optional[str] = None


def _readiness(state: PosetConstructionState, i: int) -> _Readiness:
    s = state.stage
    tree = state.tree
    before = state.history.get(s - 2, state.history[0])
    s1 = max(s, len(tree) + 1)
    s2 = max(s - 2, len(before) + 1)

    if i > s - 2:
        return _Readiness(False, "previous", s1, s2)

    approximation = poset_approximation(state.handles[i], s1, s)
    if isinstance(approximation, NotTotalReport):
        return _Readiness(False, "disqualified", s1, s2, clause=f"cell:{approximation.cell[0]},{approximation.cell[1]}")
    theirs = approximation.as_tree()
    if isinstance(theirs, ViolationReport):
        return _Readiness(False, "not-poset-tree", s1, s2, clause=theirs.clause.replace(" ", "_"))

    level = i + 1
    ours_fragment = level_subtree(tree, level)
    theirs_fragment = level_subtree(theirs, level)
    if theirs_fragment is None:
        return _Readiness(False, "level-absent-theirs", s1, s2, theirs)
    if ours_fragment is None:
        return _Readiness(False, "level-absent-ours", s1, s2, theirs)

    earlier = approximation.restrict(s2).as_tree()
    earlier_fragment = None if isinstance(earlier, ViolationReport) else level_subtree(earlier, level)
    if earlier_fragment != theirs_fragment or level_subtree(before, level) != ours_fragment:
        return _Readiness(False, "unstable", s1, s2, theirs)

    iso = isomorphic(ours_fragment, theirs_fragment)
    if iso is None:
        return _Readiness(False, "fragment-mismatch", s1, s2, theirs)
    return _Readiness(True, "ready", s1, s2, theirs, iso)


def _surplus(tree: FinitePosetTree, theirs: FinitePosetTree, iso: Dict[int, int], x: int) -> Tuple[int, int]:
    kids = tree.children[x]
    ours = sum(len(tree.subtree(c)) for c in kids)
    their = sum(len(theirs.subtree(iso[c])) for c in kids)
    return their, ours


def strategy_step(state: PosetConstructionState, i: int) -> PosetConstructionState:
    """
    Run the strategy for adversary i at an even stage.

    Not ready: withdraw every level-(i+1) node from F. Ready with such a
    node in F: nothing. Ready otherwise: block the least x_j of level i+1
    whose two subtrees are outgrown by their images in the approximation.
    """
    s = state.stage
    if s % 2 != 0:
        raise InvariantBreach("stage parity", f"strategies run at even stages, got {s}", s)
    if i > s:
        raise InvariantBreach("strategy order", f"adversary {i} considered before stage {i}", s)

    tree = state.tree
    req = state.requirements[i]
    level = i + 1
    verdict = _readiness(state, i)
    at_level = sorted(x for x in state.blocked if tree.level[x] == level)
    common = dict(stage=s, kind="strat", req=i, sp=verdict.approximation_size, spp=verdict.previous_size)

    req.last_stage = s
    req.reason = verdict.reason
    if not verdict.ready:
        req.verdict = "not-ready"
        req.blocked_node = None
        state.blocked = state.blocked - set(at_level)
        state.trace.append(**common, verdict="not-ready", reason=verdict.reason, clause=verdict.clause,
                           move="withdraw", node=at_level)
        if at_level:
            logger.info(f"🧱 stage {s}: R{i} not ready ({verdict.reason}), withdrew {at_level}")
        return state

    req.verdict = "ready"
    if at_level:
        x = at_level[0]
        their, ours = _surplus(tree, verdict.theirs, verdict.iso, x)
        state.trace.append(**common, verdict="ready", reason="ready", move="hold", node=x, M=their, N=ours)
        return state

    candidates = sorted(x for x in tree.branching_nodes if tree.level[x] == level)
    for x in candidates:
        their, ours = _surplus(tree, verdict.theirs, verdict.iso, x)
        if their > ours:
            state.blocked = state.blocked | {x}
            req.blocked_node = x
            state.trace.append(**common, verdict="ready", reason="ready", move="block", node=x, M=their, N=ours)
            logger.info(f"🧱 stage {s}: R{i} blocks node {x} ({their} > {ours})")
            return state

    raise InvariantBreach(
        "pigeonhole",
        f"R{i} ready but no level-{level} node of {candidates} is outgrown "
        f"(approximation {len(verdict.theirs)} nodes, tree {len(tree)})",
        s,
    )


def run_stage(state: PosetConstructionState) -> PosetConstructionState:
    """Advance by one stage and record the resulting tree."""
    state.stage += 1
    s = state.stage
    if s % 2 == 1:
        expansionary_stage(state)
    else:
        for i in range(min(len(state.handles), s + 1)):
            strategy_step(state, i)
    state.history[s] = state.tree
    state.trace.append(stage=s, kind="tree", size=len(state.tree), blocked=state.blocked)
    return state


def run_construction(
    adversaries: Sequence = (),
    horizon: int = 1,
    fuel_base: int | None = None,
    budget: int | None = None
) -> PosetConstructionState:
    """Run stages 1..horizon; the trace is on the returned state."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    state = new_state(adversaries, horizon, fuel_base, budget)
    for _ in range(horizon):
        run_stage(state)
    return state


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonIsoCertificate:
    req: int
    tag: str
    stage: Optional[int] = None
    detail: Tuple[Tuple[str, str], ...] = ()

    def describe(self) -> str:
        extra = " ".join(f"{k}={v}" for k, v in self.detail)
        where = f" at stage {self.stage}" if self.stage is not None else ""
        return f"R{self.req}: {self.tag}{where}" + (f" ({extra})" if extra else "")


def non_iso_certificate(trace: StageTrace, i: int) -> NonIsoCertificate:
    """
    Read the certificate for adversary i off a completed trace.

    Only the last strategy verdict counts: a blocked-deficit certificate
    needs the blocked node to still be blocked in the final tree.
    """
    last = trace.last(kind="strat", req=i)
    if last is None:
        return NonIsoCertificate(i, Certificate.UNDECIDED)
    stage = last.stage
    reason = last.get("reason")

    if reason == "not-poset-tree":
        return NonIsoCertificate(i, Certificate.NOT_POSET_TREE, stage, (("clause", last.get("clause", "")),))
    if reason == "disqualified":
        return NonIsoCertificate(i, Certificate.DISQUALIFIED, stage, (("cell", last.get("clause", "")),))
    if reason == "level-absent-theirs":
        return NonIsoCertificate(i, Certificate.LEVEL_ABSENT, stage, (("level", str(i + 1)),))
    if reason == "fragment-mismatch":
        return NonIsoCertificate(i, Certificate.FRAGMENT_MISMATCH, stage, (("level", str(i + 1)),))
    if reason == "ready" and last.get("move") in ("block", "hold"):
        node = last.as_int("node")
        final = trace.last(kind="tree")
        their, ours = last.as_int("M"), last.as_int("N")
        if final is not None and node in final.as_ints("blocked") and their > ours:
            detail = (("node", str(node)), ("M", str(their)), ("N", str(ours)))
            return NonIsoCertificate(i, Certificate.BLOCKED_DEFICIT, stage, detail)
    return NonIsoCertificate(i, Certificate.UNDECIDED, stage)


# ---------------------------------------------------------------------------
# Join, meet and the lattice extension
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JoinMeet:
    """
    The join in (T, <=) and the meet in the reversed order.

    Both are the least node above x and y, so the two values coincide.
    """
    join: int
    reversed_meet: int


def _require(tree: FinitePosetTree, *nodes: int):
    for x in nodes:
        if x not in tree.nodes:
            raise StructureError(f"node {x} is not in the tree")


def join_meet(state_or_tree, x: int, y: int) -> JoinMeet:
    """Least upper bound of x and y: the upper one if comparable, else the meeting point of their chains."""
    tree = getattr(state_or_tree, "tree", state_or_tree)
    _require(tree, x, y)
    if tree.leq(x, y):
        top = y
    elif tree.leq(y, x):
        top = x
    else:
        above_x = set(tree.up_set(x))
        top = next(z for z in tree.up_set(y) if z in above_x)
    return JoinMeet(top, top)


def brute_force_join(tree: FinitePosetTree, x: int, y: int) -> int:
    """Least element of the set of common upper bounds, found by scanning all nodes."""
    bounds = [z for z in tree.nodes if tree.leq(x, z) and tree.leq(y, z)]
    least = [z for z in bounds if all(tree.leq(z, w) for w in bounds)]
    if len(least) != 1:
        raise InvariantBreach("least upper bound", f"{x}, {y} have {len(least)} least bounds")
    return least[0]


class LatticeExtension:
    """
    T shifted up by one with a new bottom 0.

    Tree node k is lattice element k + 1. Incomparable elements meet in 0;
    complements come from the two children of the root.
    """

    def __init__(self, tree: FinitePosetTree):
        kids = tree.children[tree.root]
        if len(kids) != 2:
            raise StructureError(f"lattice extension needs a binary root, root has {len(kids)} children")
        self.tree = tree
        self.bottom = 0
        self.top = tree.root + 1
        self.left, self.right = (k + 1 for k in kids)

    @property
    def elements(self) -> Tuple[int, ...]:
        return (0,) + tuple(sorted(x + 1 for x in self.tree.nodes))

    def _check(self, *elements: int):
        for a in elements:
            if a != 0 and a - 1 not in self.tree.nodes:
                raise StructureError(f"{a} is not in the lattice")

    def leq(self, a: int, b: int) -> bool:
        self._check(a, b)
        if a == 0:
            return True
        return b != 0 and self.tree.leq(a - 1, b - 1)

    def join(self, a: int, b: int) -> int:
        self._check(a, b)
        if a == 0:
            return b
        if b == 0:
            return a
        return join_meet(self.tree, a - 1, b - 1).join + 1

    def meet(self, a: int, b: int) -> int:
        if self.leq(a, b):
            return a
        if self.leq(b, a):
            return b
        return 0

    def complement(self, a: int) -> int:
        self._check(a)
        if a == 0:
            return self.top
        if a == self.top:
            return 0
        return self.right if self.leq(a, self.left) else self.left

    def is_complemented(self) -> bool:
        return all(
            self.join(a, self.complement(a)) == self.top and self.meet(a, self.complement(a)) == 0
            for a in self.elements
        )


def lattice_extension(state_or_tree) -> LatticeExtension:
    return LatticeExtension(getattr(state_or_tree, "tree", state_or_tree))


# ---------------------------------------------------------------------------
# Replay verification
# ---------------------------------------------------------------------------

def verify_poset_trace(trace: StageTrace) -> List[Tuple[str, bool, str]]:
    """
    Rebuild T_s and F from the trace and check every stage.

    Returns (check name, passed, detail) for unique branching, F discipline,
    open-leaf existence, blocked-deficit persistence and size agreement.
    """
    tree = FinitePosetTree(0, {})
    blocked: set = set()
    frozen_sizes: Dict[int, int] = {}
    failures: Dict[str, str] = {}

    def fail(name: str, detail: str):
        failures.setdefault(name, detail)

    for record in trace:
        kind = record.get("kind")
        s = record.stage
        if kind == "exp":
            leaf, chain, first = record.as_int("leaf"), record.as_int("chain"), record.as_int("first")
            if record.as_int("j") == 1:
                leaves = open_leaves(tree, blocked)
                if isinstance(leaves, ViolationReport) or not leaves:
                    fail("open leaf", f"stage {s}: no open leaf")
            try:
                addend, _ = _branching(leaf, chain, first)
                tree = attach(tree, leaf, addend, budget=10 ** 9)
            except StructureError as e:
                fail("replay", f"stage {s}: {e}")
                break
        elif kind == "strat":
            move = record.get("move")
            if move == "block":
                node = record.as_int("node")
                blocked.add(node)
                frozen_sizes[node] = len(tree.subtree(node))
            elif move == "withdraw":
                for node in record.as_ints("node"):
                    blocked.discard(node)
                    frozen_sizes.pop(node, None)
        elif kind == "tree":
            if record.as_int("size") != len(tree):
                fail("replay", f"stage {s}: trace says {record['size']} nodes, replay has {len(tree)}")
            if set(record.as_ints("blocked")) != blocked:
                fail("replay", f"stage {s}: blocked sets differ")
            if not branching_report(tree).uniquely_branching:
                fail("unique branching", f"stage {s}")
            levels: Dict[int, List[int]] = {}
            for node in blocked:
                if node not in tree.nodes:
                    fail("F discipline", f"stage {s}: blocked node {node} not in tree")
                    continue
                levels.setdefault(tree.level[node], []).append(node)
            for level, nodes in levels.items():
                if level == 0 or len(nodes) > 1:
                    fail("F discipline", f"stage {s}: level {level} holds {sorted(nodes)}")
            for node, size in frozen_sizes.items():
                if node in tree.nodes and len(tree.subtree(node)) != size:
                    fail("blocked-deficit persistence", f"stage {s}: subtree of {node} changed")

    names = ("replay", "unique branching", "F discipline", "open leaf", "blocked-deficit persistence")
    return [(name, name not in failures, failures.get(name, "")) for name in names]
