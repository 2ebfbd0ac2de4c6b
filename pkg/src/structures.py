"""
Finite fragments of the tree structures the engines build and inspect:
poset trees, r.p.o. trees, binary successor trees and prefix trees.

Every structure is an immutable value. Operations either return a new
structure or a ViolationReport naming the first clause that failed.
"""

import logging
import re
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism as nx_iso

from .config import get_node_budget
from .errors import StructureError

logger = logging.getLogger(__name__)

KINDS = ("poset", "rpo", "succ", "prefix")


@dataclass(frozen=True)
class ViolationReport:
    """First violated clause of a structure definition, with witnesses."""
    kind: str
    clause: str
    witnesses: Tuple[Any, ...] = ()

    def describe(self) -> str:
        nodes = ", ".join(str(w) for w in self.witnesses)
        return f"{self.kind}: {self.clause}" + (f" ({nodes})" if nodes else "")


def _check_budget(size: int, budget: int | None):
    limit = get_node_budget() if budget is None else budget
    if size > limit:
        raise StructureError(f"structure of {size} nodes exceeds the node budget of {limit}")


# ---------------------------------------------------------------------------
# Poset trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FinitePosetTree:
    """
    Finite poset tree stored by its covering relation.

    `parent[x]` is the unique y with Adj(x, y); the root has no entry.
    x <= y holds iff y lies on the chain from x up to the root.
    """
    root: int
    parent: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "parent", MappingProxyType(dict(self.parent)))
        if len(self.top_down) != len(self.nodes):
            stray = sorted(self.nodes - set(self.top_down))
            raise StructureError(f"nodes {stray[:5]} are not below root {self.root}")

    def __eq__(self, other):
        return (
            isinstance(other, FinitePosetTree)
            and self.root == other.root
            and dict(self.parent) == dict(other.parent)
        )

    __hash__ = None

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node) -> bool:
        return node in self.nodes

    @cached_property
    def nodes(self) -> frozenset:
        return frozenset(self.parent) | {self.root}

    @cached_property
    def children(self) -> Dict[int, Tuple[int, ...]]:
        kids: Dict[int, List[int]] = {x: [] for x in self.nodes}
        for child, par in self.parent.items():
            if par not in kids:
                raise StructureError(f"node {child} hangs below unknown node {par}")
            kids[par].append(child)
        return {x: tuple(sorted(v)) for x, v in kids.items()}

    @cached_property
    def top_down(self) -> Tuple[int, ...]:
        """Nodes in breadth-first order from the root, children by id."""
        order = [self.root]
        seen = {self.root}
        head = 0
        while head < len(order):
            for child in self.children[order[head]]:
                if child in seen:
                    raise StructureError(f"node {child} reached twice")
                seen.add(child)
                order.append(child)
            head += 1
        return tuple(order)

    @cached_property
    def depth(self) -> Dict[int, int]:
        """card(T_{>=x}), so the root has depth 1."""
        depth = {self.root: 1}
        for x in self.top_down[1:]:
            depth[x] = depth[self.parent[x]] + 1
        return depth

    @cached_property
    def branching_nodes(self) -> Tuple[int, ...]:
        return tuple(sorted(x for x, kids in self.children.items() if len(kids) >= 2))

    @cached_property
    def level(self) -> Dict[int, int]:
        """Number of branching nodes strictly above each node."""
        branching = set(self.branching_nodes)
        level = {self.root: 0}
        for x in self.top_down[1:]:
            par = self.parent[x]
            level[x] = level[par] + (1 if par in branching else 0)
        return level

    @cached_property
    def leaves(self) -> Tuple[int, ...]:
        return tuple(sorted(x for x, kids in self.children.items() if not kids))

    def leq(self, x: int, y: int) -> bool:
        """x <= y in the tree order (y is x or an ancestor of x)."""
        steps = self.depth[x] - self.depth[y]
        if steps < 0:
            return False
        for _ in range(steps):
            x = self.parent[x]
        return x == y

    def up_set(self, x: int) -> Tuple[int, ...]:
        """T_{>=x} listed from x up to the root."""
        chain = [x]
        while chain[-1] != self.root:
            chain.append(self.parent[chain[-1]])
        return tuple(chain)

    def subtree(self, x: int) -> frozenset:
        """All nodes below or equal to x."""
        found = []
        stack = [x]
        while stack:
            node = stack.pop()
            found.append(node)
            stack.extend(self.children[node])
        return frozenset(found)

    def restrict(self, keep: Iterable[int]) -> "FinitePosetTree":
        """Sub-tree on an upward closed node set containing the root."""
        keep = frozenset(keep)
        if self.root not in keep:
            raise StructureError("restriction must keep the root")
        parent = {x: p for x, p in self.parent.items() if x in keep}
        missing = [x for x, p in parent.items() if p not in keep]
        if missing:
            raise StructureError(f"restriction is not upward closed at {sorted(missing)[:5]}")
        return FinitePosetTree(self.root, parent)


@dataclass(frozen=True)
class BranchingReport:
    """(node, level, length) for every branching node, by node id."""
    entries: Tuple[Tuple[int, int, int], ...]
    uniquely_branching: bool

    def lengths(self) -> Tuple[int, ...]:
        return tuple(length for _, _, length in self.entries)

    def at_level(self, level: int) -> Tuple[int, ...]:
        return tuple(x for x, lv, _ in self.entries if lv == level)


def branching_report(tree: FinitePosetTree) -> BranchingReport:
    """Levels and lengths of all branching nodes of a poset tree."""
    entries = tuple((x, tree.level[x], tree.depth[x]) for x in tree.branching_nodes)
    lengths = [length for _, _, length in entries]
    return BranchingReport(entries, len(set(lengths)) == len(lengths))


def tree_height(tree: FinitePosetTree) -> int:
    """H(T): one more than the longest branching length, 1 if nothing branches."""
    lengths = [tree.depth[x] for x in tree.branching_nodes]
    return 1 + max(lengths) if lengths else 1


def level_subtree(tree: FinitePosetTree, i: int) -> Optional[FinitePosetTree]:
    """
    T_{[<=i]}: the least subtree holding br(x, T) for every branching x of level <= i.

    Returns None when level i has no branching node.
    """
    levels = tree.level
    chosen = [x for x in tree.branching_nodes if levels[x] <= i]
    if not any(levels[x] == i for x in chosen):
        return None
    keep = set()
    for x in chosen:
        keep.update(tree.up_set(x))
        keep.update(tree.children[x])
    return tree.restrict(keep)


def attach(
    host: FinitePosetTree,
    leaf: int,
    addend: FinitePosetTree,
    budget: int | None = None
) -> FinitePosetTree:
    """
    Attach `addend` below `leaf`, identifying the addend's root with the leaf.

    Raises:
        StructureError: leaf is not a leaf of host, ids collide, or the
        result exceeds the node budget.
    """
    if leaf not in host.nodes:
        raise StructureError(f"attach target {leaf} is not in the host")
    if host.children[leaf]:
        raise StructureError(f"attach target {leaf} is not a leaf")
    fresh = addend.nodes - {addend.root}
    clash = fresh & host.nodes
    if clash:
        raise StructureError(f"addend ids collide with host at {sorted(clash)[:5]}")
    _check_budget(len(host.nodes) + len(fresh), budget)

    parent = dict(host.parent)
    for child, par in addend.parent.items():
        parent[child] = leaf if par == addend.root else par
    return FinitePosetTree(host.root, parent)


def detach(tree: FinitePosetTree, nodes: Iterable[int]) -> FinitePosetTree:
    """Remove a downward closed set of nodes, the inverse of attach."""
    removed = frozenset(nodes)
    return tree.restrict(tree.nodes - removed)


def find_open_leaf(tree: FinitePosetTree, blocked: Iterable[int]):
    """
    Least-id leaf with no blocked node above or at it.

    Returns the leaf, a ViolationReport when `blocked` breaks the
    one-node-per-level premise, or None.
    """
    leaves = open_leaves(tree, blocked)
    if isinstance(leaves, ViolationReport):
        return leaves
    return leaves[0] if leaves else None


def open_leaves(tree: FinitePosetTree, blocked: Iterable[int]):
    """All open leaves in id order, or the ViolationReport of find_open_leaf."""
    blocked = frozenset(blocked)
    levels = tree.level
    per_level: Dict[int, List[int]] = {}
    for x in sorted(blocked):
        if x not in tree.nodes:
            return ViolationReport("poset", "blocked node not in tree", (x,))
        per_level.setdefault(levels[x], []).append(x)

    if 0 in per_level:
        return ViolationReport("poset", "root blocked", tuple(per_level[0]))
    for level in sorted(per_level):
        if len(per_level[level]) > 1:
            return ViolationReport("poset", f"two blocked nodes on level {level}", tuple(per_level[level]))

    closed = {tree.root: tree.root in blocked}
    for x in tree.top_down[1:]:
        closed[x] = closed[tree.parent[x]] or x in blocked
    return tuple(leaf for leaf in tree.leaves if not closed[leaf])


# ---------------------------------------------------------------------------
# r.p.o. trees, successor trees, prefix trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RpoTree:
    """Rooted tree with parent map and a strict order on each sibling set."""
    root: Any
    parent: Mapping[Any, Any]
    less: frozenset

    def __post_init__(self):
        object.__setattr__(self, "parent", MappingProxyType(dict(self.parent)))
        object.__setattr__(self, "less", frozenset(self.less))

    def __eq__(self, other):
        return (
            isinstance(other, RpoTree)
            and self.root == other.root
            and dict(self.parent) == dict(other.parent)
            and self.less == other.less
        )

    __hash__ = None

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def nodes(self) -> frozenset:
        return frozenset(self.parent) | {self.root}

    def is_parent(self, child, par) -> bool:
        return self.parent.get(child) == par and child != self.root

    def is_less(self, x, y) -> bool:
        return (x, y) in self.less

    def depth(self, x) -> int:
        steps = 0
        while x != self.root:
            x = self.parent[x]
            steps += 1
        return steps


@dataclass(frozen=True, eq=False)
class SuccessorTree:
    """Binary successor tree (T, S1, S2, e, r) with total successor maps."""
    s1: Mapping[Any, Any]
    s2: Mapping[Any, Any]
    empty: Any
    root: Any

    def __post_init__(self):
        object.__setattr__(self, "s1", MappingProxyType(dict(self.s1)))
        object.__setattr__(self, "s2", MappingProxyType(dict(self.s2)))

    def __eq__(self, other):
        return (
            isinstance(other, SuccessorTree)
            and (self.empty, self.root) == (other.empty, other.root)
            and dict(self.s1) == dict(other.s1)
            and dict(self.s2) == dict(other.s2)
        )

    __hash__ = None

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def nodes(self) -> frozenset:
        return frozenset(self.s1) | frozenset(self.s2) | {self.empty, self.root}

    def layer(self, depth: int) -> Tuple[Any, ...]:
        """Non-empty nodes at the given depth, in discovery order."""
        current = [self.root]
        for _ in range(depth):
            nxt = []
            for x in current:
                nxt.extend(y for y in (self.s1[x], self.s2[x]) if y != self.empty)
            current = nxt
        return tuple(current)

    def is_full(self, depth: int) -> bool:
        """n-full: every node at depth n-1 has both successors non-empty."""
        if depth == 0:
            return True
        return all(
            self.s1.get(x, self.empty) != self.empty and self.s2.get(x, self.empty) != self.empty
            for x in self.layer(depth - 1)
        )


@dataclass(frozen=True, eq=False)
class PrefixTree:
    """Prefix tree given by its paths; R_n is the set of paths of length n."""
    paths: frozenset

    def __post_init__(self):
        object.__setattr__(self, "paths", frozenset(tuple(p) for p in self.paths))

    def __eq__(self, other):
        return isinstance(other, PrefixTree) and self.paths == other.paths

    __hash__ = None

    def __len__(self) -> int:
        return len(self.paths)

    @cached_property
    def root(self):
        roots = [p[0] for p in self.paths if len(p) == 1]
        return roots[0] if roots else None

    def relation(self, n: int) -> frozenset:
        return frozenset(p for p in self.paths if len(p) == n)

    @cached_property
    def injective(self) -> bool:
        tips: Dict[Any, tuple] = {}
        for path in self.paths:
            if tips.setdefault(path[-1], path) != path:
                return False
        return True

    @cached_property
    def nodes(self) -> frozenset:
        return frozenset(p[-1] for p in self.paths)

    def longest_prefix(self, path: tuple) -> tuple:
        """Longest prefix of `path` (possibly all of it) listed in the tree."""
        for n in range(len(path), 0, -1):
            if path[:n] in self.paths:
                return path[:n]
        return ()

    def as_poset_parents(self) -> Dict[Any, Any]:
        """Parent map on tips; only meaningful for injective trees."""
        return {p[-1]: p[-2] for p in self.paths if len(p) > 1}


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_structure(kind: str, raw: Dict[str, Any]):
    """
    Check raw relation tables against the definition of `kind`.

    Returns the typed structure or the first violated clause.
    """
    if kind == "poset":
        nodes = sorted(raw["nodes"])
        index = {x: i for i, x in enumerate(nodes)}
        table = np.zeros((len(nodes), len(nodes)), dtype=bool)
        for x, y in raw.get("leq", ()):
            table[index[x], index[y]] = True
        return poset_tree_from_table(table, nodes)
    if kind == "rpo":
        return _validate_rpo(raw)
    if kind == "succ":
        return _validate_succ(raw)
    if kind == "prefix":
        return _validate_prefix(raw)
    raise StructureError(f"unknown structure kind {kind!r}")


def poset_tree_from_table(table: np.ndarray, nodes: Optional[List[int]] = None):
    """
    Build a poset tree from a boolean table with table[x, y] meaning x <= y.

    Returns the tree or the first violated clause with witnesses.
    """
    size = table.shape[0]
    if nodes is None:
        nodes = list(range(size))
    if size == 0:
        return ViolationReport("poset", "greatest element", ())
    leq = np.asarray(table, dtype=bool)

    diag = np.diag(leq)
    if not diag.all():
        x = int(np.argmin(diag))
        return ViolationReport("poset", "reflexivity", (nodes[x],))

    both = leq & leq.T
    np.fill_diagonal(both, False)
    if both.any():
        x, y = (int(v) for v in np.argwhere(both)[0])
        return ViolationReport("poset", "antisymmetry", (nodes[x], nodes[y]))

    as_float = leq.astype(np.float64)
    closure = (as_float @ as_float) > 0
    broken = closure & ~leq
    if broken.any():
        x, y = (int(v) for v in np.argwhere(broken)[0])
        z = int(np.argmax(leq[x] & leq[:, y]))
        return ViolationReport("poset", "transitivity", (nodes[x], nodes[z], nodes[y]))

    tops = np.flatnonzero(leq.all(axis=0))
    if len(tops) == 0:
        return ViolationReport("poset", "greatest element", ())
    root = int(tops[0])

    comparable = leq | leq.T
    up_counts = leq.sum(axis=1)
    parent = {}
    for x in range(size):
        ups = np.flatnonzero(leq[x])
        block = comparable[np.ix_(ups, ups)]
        if not block.all():
            i, j = (int(v) for v in np.argwhere(~block)[0])
            return ViolationReport("poset", "up-set is not a chain", (nodes[x], nodes[ups[i]], nodes[ups[j]]))
        if x != root:
            above = ups[up_counts[ups] == up_counts[x] - 1]
            parent[nodes[x]] = nodes[int(above[0])]
    return FinitePosetTree(nodes[root], parent)


def _validate_rpo(raw: Dict[str, Any]):
    nodes = set(raw["nodes"])
    root = raw["root"]
    parent: Dict[Any, Any] = {}
    for child, par in raw.get("pred", ()):
        if child not in nodes or par not in nodes:
            return ViolationReport("rpo", "clause 1 (unknown node)", (child, par))
        if child == root:
            return ViolationReport("rpo", "clause 1 (root has a parent)", (root, par))
        if child in parent and parent[child] != par:
            return ViolationReport("rpo", "clause 1 (two parents)", (child, parent[child], par))
        parent[child] = par
    for x in sorted(nodes - {root}, key=_node_key):
        if x not in parent:
            return ViolationReport("rpo", "clause 1 (disconnected)", (x,))
    for x in sorted(parent, key=_node_key):
        seen = {x}
        y = x
        while y != root:
            y = parent[y]
            if y in seen:
                return ViolationReport("rpo", "clause 1 (cycle)", (x,))
            seen.add(y)

    less = set(raw.get("less", ()))
    for x, y in sorted(less, key=lambda p: (_node_key(p[0]), _node_key(p[1]))):
        if x == y:
            return ViolationReport("rpo", "clause 2 (irreflexivity)", (x,))
        if (y, x) in less:
            return ViolationReport("rpo", "clause 2 (antisymmetry)", (x, y))
        if x == root or y == root or parent.get(x) != parent.get(y):
            return ViolationReport("rpo", "clause 2 (comparable non-siblings)", (x, y))
    for x, y in less:
        for y2, z in less:
            if y2 == y and (x, z) not in less:
                return ViolationReport("rpo", "clause 2 (transitivity)", (x, y, z))
    siblings: Dict[Any, List[Any]] = {}
    for child, par in parent.items():
        siblings.setdefault(par, []).append(child)
    for par in sorted(siblings, key=_node_key):
        group = sorted(siblings[par], key=_node_key)
        for i, x in enumerate(group):
            for y in group[i + 1:]:
                if (x, y) not in less and (y, x) not in less:
                    return ViolationReport("rpo", "clause 2 (incomparable siblings)", (x, y))
    return RpoTree(root, parent, frozenset(less))


def _validate_succ(raw: Dict[str, Any]):
    nodes = set(raw["nodes"])
    empty, root = raw["empty"], raw["root"]
    s1 = dict(raw.get("s1", ()))
    s2 = dict(raw.get("s2", ()))
    for x in sorted(nodes, key=_node_key):
        if x not in s1 or x not in s2 or s1[x] not in nodes or s2[x] not in nodes:
            return ViolationReport("succ", "totality", (x,))
    if s1[empty] != empty or s2[empty] != empty:
        return ViolationReport("succ", "clause 4 (empty successors)", (empty,))

    graph = nx.DiGraph()
    graph.add_nodes_from(nodes - {empty})
    for succ in (s1, s2):
        for x, y in succ.items():
            if x != empty and y != empty:
                graph.add_edge(x, y)
    try:
        cycle = nx.find_cycle(graph)
        return ViolationReport("succ", "clause 1 (cycle)", tuple(edge[0] for edge in cycle))
    except nx.NetworkXNoCycle:
        pass

    preimage: Dict[Any, Tuple[Any, int]] = {}
    for tag, succ in ((1, s1), (2, s2)):
        for x in sorted(succ, key=_node_key):
            y = succ[x]
            if x == empty or y == empty:
                continue
            if y in preimage:
                return ViolationReport("succ", "clause 2 (injectivity)", (preimage[y][0], x, y))
            preimage[y] = (x, tag)
    if root in preimage:
        return ViolationReport("succ", "clause 3 (root in range)", (root,))
    for x in sorted(nodes - {empty, root}, key=_node_key):
        if x not in preimage:
            return ViolationReport("succ", "clause 3 (not in range)", (x,))
    return SuccessorTree(s1, s2, empty, root)


def _validate_prefix(raw: Dict[str, Any]):
    paths = {tuple(p) for p in raw["paths"]}
    if () in paths:
        return ViolationReport("prefix", "clause 1 (empty path)", ())
    roots = sorted(p for p in paths if len(p) == 1)
    if len(roots) != 1:
        return ViolationReport("prefix", "clause 1 (root)", tuple(r[0] for r in roots))
    for path in sorted(paths, key=lambda p: (len(p), p)):
        if path[0] != roots[0][0]:
            return ViolationReport("prefix", "clause 1 (root)", path)
        for n in range(1, len(path)):
            if path[:n] not in paths:
                return ViolationReport("prefix", "clause 2 (prefix closure)", path[:n])
    return PrefixTree(frozenset(paths))


# ---------------------------------------------------------------------------
# Isomorphism
# ---------------------------------------------------------------------------

def isomorphic(a, b, method: str = "auto") -> Optional[Dict[Any, Any]]:
    """
    Witness bijection a -> b preserving every relation, or None.

    Poset trees use a canonical-form matcher unless method="backtrack";
    every other kind goes through VF2 backtracking.
    """
    if type(a) is not type(b):
        raise StructureError(f"kind mismatch: {type(a).__name__} vs {type(b).__name__}")
    if len(a) != len(b):
        return None
    if isinstance(a, FinitePosetTree):
        if method == "backtrack":
            return _vf2(_poset_graph(a), _poset_graph(b))
        return _canonical_match(a.root, a.children, b.root, b.children)
    if isinstance(a, RpoTree):
        return _vf2(_rpo_graph(a), _rpo_graph(b), edge_attr="kind")
    if isinstance(a, SuccessorTree):
        return _vf2(_succ_graph(a), _succ_graph(b), node_attr="role", multi=True)
    if isinstance(a, PrefixTree):
        if not (a.injective and b.injective):
            raise StructureError("isomorphism of prefix trees needs injective trees")
        pa = FinitePosetTree(a.root, a.as_poset_parents()) if a.root is not None else None
        pb = FinitePosetTree(b.root, b.as_poset_parents()) if b.root is not None else None
        if pa is None or pb is None:
            return {} if pa is pb else None
        return _canonical_match(pa.root, pa.children, pb.root, pb.children)
    raise StructureError(f"no isomorphism test for {type(a).__name__}")


def _poset_graph(tree: FinitePosetTree) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(tree.nodes)
    graph.add_edges_from(tree.parent.items())
    return graph


def _rpo_graph(tree: RpoTree) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(tree.nodes)
    for child, par in tree.parent.items():
        graph.add_edge(child, par, kind="P")
    for x, y in tree.less:
        graph.add_edge(x, y, kind="lt")
    return graph


def _succ_graph(tree: SuccessorTree) -> nx.MultiDiGraph:
    graph = nx.MultiDiGraph()
    for x in tree.nodes:
        role = "empty" if x == tree.empty else "root" if x == tree.root else "node"
        graph.add_node(x, role=role)
    for x, y in tree.s1.items():
        graph.add_edge(x, y, kind=1)
    for x, y in tree.s2.items():
        graph.add_edge(x, y, kind=2)
    return graph


def _vf2(ga, gb, edge_attr: str | None = None, node_attr: str | None = None, multi: bool = False):
    node_match = nx_iso.categorical_node_match(node_attr, None) if node_attr else None
    if multi:
        edge_match = nx_iso.categorical_multiedge_match("kind", None)
        matcher = nx_iso.MultiDiGraphMatcher(ga, gb, node_match=node_match, edge_match=edge_match)
    else:
        edge_match = nx_iso.categorical_edge_match(edge_attr, None) if edge_attr else None
        matcher = nx_iso.DiGraphMatcher(ga, gb, node_match=node_match, edge_match=edge_match)
    if not matcher.is_isomorphic():
        return None
    return dict(matcher.mapping)


def _canonical_codes(root, children, codes: Dict[tuple, int]) -> Dict[Any, int]:
    # bottom-up AHU codes, interned to ints shared by both trees
    order = [root]
    head = 0
    while head < len(order):
        order.extend(children[order[head]])
        head += 1
    label: Dict[Any, int] = {}
    for node in reversed(order):
        key = tuple(sorted(label[c] for c in children[node]))
        label[node] = codes.setdefault(key, len(codes))
    return label


def _canonical_match(root_a, children_a, root_b, children_b) -> Optional[Dict[Any, Any]]:
    codes: Dict[tuple, int] = {}
    label_a = _canonical_codes(root_a, children_a, codes)
    label_b = _canonical_codes(root_b, children_b, codes)
    if label_a[root_a] != label_b[root_b]:
        return None
    mapping = {root_a: root_b}
    stack = [(root_a, root_b)]
    while stack:
        x, y = stack.pop()
        kids_a = sorted(children_a[x], key=lambda c: (label_a[c], _node_key(c)))
        kids_b = sorted(children_b[y], key=lambda c: (label_b[c], _node_key(c)))
        for ca, cb in zip(kids_a, kids_b):
            mapping[ca] = cb
            stack.append((ca, cb))
    return mapping


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def _node_key(x):
    if isinstance(x, str):
        return (1, len(x), x)
    return (0, x, "")


def _token(x) -> str:
    return f"'{x}'" if isinstance(x, str) else str(x)


def _untoken(text: str):
    if text.startswith("'") and text.endswith("'") and len(text) >= 2:
        return text[1:-1]
    return int(text)


def serialize(structure) -> str:
    """Line format: header `kind=<kind> n=<count>`, then one tuple per line."""
    lines: List[str] = []
    if isinstance(structure, FinitePosetTree):
        lines.append(f"kind=poset n={len(structure)}")
        lines.append(f"root {_token(structure.root)}")
        for child in sorted(structure.parent, key=_node_key):
            lines.append(f"adj {_token(child)} {_token(structure.parent[child])}")
    elif isinstance(structure, RpoTree):
        lines.append(f"kind=rpo n={len(structure)}")
        lines.append(f"root {_token(structure.root)}")
        for child in sorted(structure.parent, key=_node_key):
            lines.append(f"pred {_token(child)} {_token(structure.parent[child])}")
        for x, y in sorted(structure.less, key=lambda p: (_node_key(p[0]), _node_key(p[1]))):
            lines.append(f"less {_token(x)} {_token(y)}")
    elif isinstance(structure, SuccessorTree):
        lines.append(f"kind=succ n={len(structure)}")
        lines.append(f"empty {_token(structure.empty)}")
        lines.append(f"root {_token(structure.root)}")
        for x in sorted(structure.s1, key=_node_key):
            lines.append(f"s1 {_token(x)} {_token(structure.s1[x])}")
        for x in sorted(structure.s2, key=_node_key):
            lines.append(f"s2 {_token(x)} {_token(structure.s2[x])}")
    elif isinstance(structure, PrefixTree):
        lines.append(f"kind=prefix n={len(structure)}")
        for path in sorted(structure.paths, key=lambda p: (len(p), [_node_key(x) for x in p])):
            lines.append("path " + " ".join(_token(x) for x in path))
    else:
        raise StructureError(f"cannot serialize {type(structure).__name__}")
    return "\n".join(lines) + "\n"


_HEADER = re.compile(r"^kind=(poset|rpo|succ|prefix) n=(\d+)$")


def parse_structure(text: str):
    """Inverse of serialize; raises StructureError on malformed input."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise StructureError("empty structure text")
    header = _HEADER.match(lines[0].strip())
    if not header:
        raise StructureError(f"bad header: {lines[0]!r}")
    kind, count = header.group(1), int(header.group(2))

    fields: Dict[str, List[tuple]] = {}
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split()
        try:
            fields.setdefault(parts[0], []).append(tuple(_untoken(p) for p in parts[1:]))
        except ValueError as e:
            raise StructureError(f"line {number}: {e}") from e

    def single(name):
        values = fields.get(name, [])
        if len(values) != 1 or len(values[0]) != 1:
            raise StructureError(f"expected exactly one `{name}` line")
        return values[0][0]

    if kind == "poset":
        root = single("root")
        parent = {c: p for c, p in fields.get("adj", [])}
        structure = FinitePosetTree(root, parent)
    elif kind == "rpo":
        root = single("root")
        pred = fields.get("pred", [])
        nodes = {root} | {c for c, _ in pred} | {p for _, p in pred}
        structure = _validate_rpo({"nodes": nodes, "root": root, "pred": pred, "less": fields.get("less", [])})
    elif kind == "succ":
        s1, s2 = fields.get("s1", []), fields.get("s2", [])
        nodes = {x for x, _ in s1} | {x for x, _ in s2}
        structure = _validate_succ({
            "nodes": nodes, "s1": s1, "s2": s2,
            "empty": single("empty"), "root": single("root"),
        })
    else:
        structure = _validate_prefix({"paths": fields.get("path", [])})

    if isinstance(structure, ViolationReport):
        raise StructureError(structure.describe())
    if len(structure) != count:
        raise StructureError(f"header announces {count} entries, found {len(structure)}")
    return structure
