"""
Step profiles of copy traces.

A copy trace says how much work every stage took (`kind=stage steps=k`)
and when every element of the copy was introduced (`kind=node`). The
header's `query` field says how relation queries are answered:

* `length`: facts about strings of length <= n are all declared by stage
  n, so a query costs the work of stages 0..n;
* `intro`: a fact is decided once both elements exist, so a query on
  elements of size <= n costs the work up to the latest introduction.

`relation_query` answers one query by replaying the trace up to the
stage that decides it; the step table is built from those replays.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .errors import ConfigError
from .trace import StageTrace

QUERY_MODELS = ("length", "intro")


@dataclass(frozen=True)
class StepProfile:
    rows: Tuple[Tuple[int, int], ...]
    degree: int
    slope: float
    constant: float
    checks: Tuple[Tuple[str, bool, str], ...] = ()

    def csv(self) -> str:
        return "n,steps\n" + "".join(f"{n},{steps}\n" for n, steps in self.rows)

    def describe(self) -> str:
        return f"cost <= {self.constant:.1f} * n^{self.degree} (log-log slope {self.slope:.2f}, {len(self.rows)} rows)"


@dataclass(frozen=True)
class RelationAnswer:
    """
    One relation query on the copy. `relation` reads from x's side:
    `parent` (y is x's parent), `child`, `less`, `greater`, `equal` or `none`.
    """
    x: str
    y: str
    relation: str
    stage: int
    steps: int


def _query_model(trace: StageTrace) -> str:
    query = trace.meta().get("query")
    if query not in QUERY_MODELS:
        raise ConfigError(f"trace of engine {trace.engine} has no step profile (query={query})")
    return query


def _introductions(trace: StageTrace) -> Dict[str, Tuple[int, int]]:
    """Element token -> (stage, size) of its first node record."""
    introduced: Dict[str, Tuple[int, int]] = {}
    for r in trace.select(kind="node"):
        introduced.setdefault(r["id"], (r.stage, r.as_int("size")))
    return introduced


def relation_query(trace: StageTrace, x, y) -> RelationAnswer:
    """
    Decide how x and y are related by replaying the trace up to the stage
    that settles it, summing the recorded steps of every replayed stage.

    Raises:
        ConfigError: the trace has no query model or never introduces x or y.
    """
    query = _query_model(trace)
    x, y = str(x), str(y)
    introduced = _introductions(trace)
    missing = [t for t in (x, y) if t not in introduced]
    if missing:
        raise ConfigError(f"{', '.join(missing)} never introduced in this {trace.engine} trace")
    (x_stage, x_size), (y_stage, y_size) = introduced[x], introduced[y]
    decided = max(x_size, y_size) if query == "length" else max(x_stage, y_stage)
    last = max((r.stage for r in trace.select(kind="stage")), default=0)
    decided = min(decided, last)

    relation = "equal" if x == y else "none"
    steps = 0
    for record in trace:
        if record.stage is not None and record.stage > decided:
            break
        kind = record.get("kind")
        if kind == "stage":
            steps += record.as_int("steps", 0)
        elif kind == "edge" and {record["child"], record["parent"]} == {x, y}:
            relation = "parent" if record["child"] == x else "child"
        elif kind == "less" and {record["x"], record["y"]} == {x, y}:
            relation = "less" if record["x"] == x else "greater"
    return RelationAnswer(x, y, relation, decided, steps)


def step_table(trace: StageTrace) -> List[Tuple[int, int]]:
    """
    Rows (n, steps): the replay cost of the dearest relation query on
    inputs of size <= n, pairing an element of size n with the latest
    introduced element of size <= n.
    """
    query = _query_model(trace)
    stages = trace.select(kind="stage")
    if not stages:
        return []
    last = max(r.stage for r in stages)
    introduced = _introductions(trace)
    by_size: Dict[int, List[str]] = {}
    for token, (_, size) in introduced.items():
        by_size.setdefault(size, []).append(token)

    rows = []
    latest = None
    for size in sorted(by_size):
        for token in by_size[size]:
            if latest is None or introduced[token][0] > introduced[latest][0]:
                latest = token
        if query == "length" and size > last:
            break
        rows.append((size, relation_query(trace, by_size[size][0], latest).steps))
    return rows

def fit_degree(rows) -> Tuple[int, float, float]:
    """
    Least k with steps <= c * n^k over the table.

    k comes from the log-log slope of the rows with n >= 2; c is then the
    largest steps / n^k seen.
    """
    points = [(n, steps) for n, steps in rows if n >= 2 and steps > 0]
    if len(points) < 2:
        return 0, 0.0, float(max((steps for _, steps in rows), default=0))
    x = np.log([n for n, _ in points])
    y = np.log([steps for _, steps in points])
    slope = float(np.polyfit(x, y, 1)[0])
    degree = max(0, math.ceil(slope - 0.25))
    constant = max(steps / max(n, 1) ** degree for n, steps in rows)
    return degree, slope, float(constant)


def _discipline_checks(trace: StageTrace) -> List[Tuple[str, bool, str]]:
    labels: Dict[str, str] = {}
    sizes: Dict[str, int] = {}
    for r in trace.select(kind="node"):
        labels[r["id"]] = r["label"]
        sizes[r["id"]] = r.as_int("size")
    if not any(label in ("short", "long") for label in labels.values()):
        return []

    long_member = decided = ""
    length_model = trace.meta().get("query") == "length"
    for r in trace:
        kind = r.get("kind")
        if kind == "edge":
            pair = (r["child"], r["parent"])
        elif kind == "less":
            pair = (r["x"], r["y"])
        else:
            continue
        if not long_member and all(labels.get(x) != "long" for x in pair):
            long_member = f"stage {r.stage}: {pair[0]} and {pair[1]} are both short"
        if length_model and not decided and max(sizes.get(x, 0) for x in pair) < r.stage:
            decided = f"stage {r.stage}: fact on {pair[0]}, {pair[1]} declared after their length"

    checks = [("long-member discipline", not long_member, long_member)]
    if length_model:
        checks.append(("decided by length", not decided, decided))
    return checks


def step_profile(trace: StageTrace) -> StepProfile:
    """Cost table, fitted degree and the short/long discipline of a copy trace."""
    rows = step_table(trace)
    degree, slope, constant = fit_degree(rows)
    return StepProfile(tuple(rows), degree, slope, constant, tuple(_discipline_checks(trace)))
