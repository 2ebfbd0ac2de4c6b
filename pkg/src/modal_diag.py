"""
Modal algebra diagonalizer.

Builds g on the atoms of B(N) x B(N) one prime cycle per stage: stage s
adds a p_s-cycle (p_1 = 3, p_2 = 5, ...) unless an active requirement
forbids p_s. Requirement R_e watches adversary e and walks through
inactive -> alert -> active -> deactivated.

A stage runs, in this order:

1. monitoring of every live R_e with e <= s, conditions a, b, d, c;
2. the alert strategy of the requirement on alert, if any;
3. the active strategies in index order;
4. unless something was forbidden: the p_s-cycle, then the least
   never-alerted requirement goes on alert if nobody is on alert.

Decisions are pure functions of an adversary view and the stage
parameters, so `replay_deactivations` can re-derive each one from a fresh
copy of the adversary.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations, count, islice, product
from math import prod
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import factorint, isprime, prime

from .adversary import ModalAdversaryView, OutOfFuel, SignatureHandle, modal_probe, refine_blocks
from .boolean import TOP0, TOP1, atom_element, generated_subalgebra
from .config import get_witness_bound
from .errors import ConfigError, InvariantBreach
from .modal import ModalityTable, add_p_cycle
from .status import Certificate, Event, Reason, RequirementState
from .trace import StageTrace

logger = logging.getLogger(__name__)

ENGINE = "modal-diag"
WITNESS_BOUNDS = ("card", "cycle-atoms")
# associativity and distributivity are checked on triples of the least closure elements
AXIOM_TRIPLE_HEAD = 8


def stage_prime(s: int) -> int:
    """p_s, the s-th odd prime."""
    if s < 1:
        raise ValueError("primes are indexed from stage 1")
    return prime(s + 1)


def iteration_depth(s: int) -> int:
    """L = p_1 * ... * p_s."""
    return prod(stage_prime(j) for j in range(1, s + 1))


def is_bad_size(n: int, forbidden) -> bool:
    """Orbit sizes no cycle of ours can have: 1, even, non-squarefree or with a forbidden factor."""
    if n == 1 or n % 2 == 0:
        return True
    factors = factorint(n)
    return any(e > 1 for e in factors.values()) or any(p in forbidden for p in factors)


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------

@dataclass
class ModalRequirement:
    index: int
    name: Optional[str]
    state: str = RequirementState.INACTIVE
    witness: Optional[int] = None
    reason: Optional[str] = None
    alerted_at: Optional[int] = None


@dataclass
class ModalConstructionState:
    table: ModalityTable
    stage: int
    requirements: List[ModalRequirement]
    handles: List[SignatureHandle]
    trace: StageTrace
    witness_bound: str = "card"
    forbidden: set = field(default_factory=set)

    def on_alert(self) -> List[int]:
        return [r.index for r in self.requirements if r.state == RequirementState.ALERT]

    def witness_count_bound(self) -> int:
        """M for the current stage, from the cycles installed before it."""
        if self.witness_bound == "cycle-atoms":
            return len(self.table.cycle_atoms())
        generators = [TOP0, TOP1] + [atom_element(a) for a in self.table.cycle_atoms()]
        return generated_subalgebra(generators).size


# ---------------------------------------------------------------------------
# Orbits of adversary elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdversaryOrbit:
    """f-iterates of one adversary element up to the first repeat."""
    values: Tuple[int, ...]
    status: str
    n: Optional[int] = None


def adversary_orbit(view: ModalAdversaryView, x: int, depth: int) -> AdversaryOrbit:
    """
    Iterate f from x at most `depth` times.

    A repeat of x itself closes the orbit with N values; a repeat of a later
    value means f is not injective on it (`merge`); no repeat is `open`.
    """
    values = [x]
    seen = {x: 0}
    for _ in range(depth):
        y = view.f(values[-1])
        if y in seen:
            if seen[y] == 0:
                return AdversaryOrbit(tuple(values), "closed", len(values))
            return AdversaryOrbit(tuple(values), "merge")
        seen[y] = len(values)
        values.append(y)
    return AdversaryOrbit(tuple(values), "open")


# ---------------------------------------------------------------------------
# Monitoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonitorHit:
    condition: str
    clause: str
    witness: Tuple[int, ...]


def _check_axioms(view: ModalAdversaryView, s: int) -> Optional[MonitorHit]:
    zero, one = view.zero, view.one
    if view.f(zero) != zero:
        return MonitorHit(Reason.MONITOR_A, "f-zero", (zero,))
    for x in view.closure:
        cx = view.comp(x)
        if view.join(x, cx) != one or view.meet(x, cx) != zero:
            return MonitorHit(Reason.MONITOR_A, "complement", (x,))
    for x, y in combinations(view.closure, 2):
        if view.join(x, y) != view.join(y, x) or view.meet(x, y) != view.meet(y, x):
            return MonitorHit(Reason.MONITOR_A, "commutativity", (x, y))
        if view.join(x, view.meet(x, y)) != x or view.join(y, view.meet(y, x)) != y:
            return MonitorHit(Reason.MONITOR_A, "absorption", (x, y))
        if view.meet(x, view.join(x, y)) != x or view.meet(y, view.join(y, x)) != y:
            return MonitorHit(Reason.MONITOR_A, "absorption", (x, y))
        if view.comp(view.join(x, y)) != view.meet(view.comp(x), view.comp(y)):
            return MonitorHit(Reason.MONITOR_A, "de-morgan", (x, y))
        if view.f(view.join(x, y)) != view.join(view.f(x), view.f(y)):
            return MonitorHit(Reason.MONITOR_A, "f-additive", (x, y))
    join, meet = view.join, view.meet
    for x, y, z in product(view.closure[:AXIOM_TRIPLE_HEAD], repeat=3):
        if join(join(x, y), z) != join(x, join(y, z)) or meet(meet(x, y), z) != meet(x, meet(y, z)):
            return MonitorHit(Reason.MONITOR_A, "associativity", (x, y, z))
        if meet(x, join(y, z)) != join(meet(x, y), meet(x, z)):
            return MonitorHit(Reason.MONITOR_A, "distributivity", (x, y, z))
        if join(x, meet(y, z)) != meet(join(x, y), join(x, z)):
            return MonitorHit(Reason.MONITOR_A, "distributivity", (x, y, z))
    return None


def _check_tops(view: ModalAdversaryView, s: int) -> Optional[MonitorHit]:
    t0, t1 = view.top0, view.top1
    if view.join(t0, t1) != view.one:
        return MonitorHit(Reason.MONITOR_B, "tops-join", (t0, t1))
    if view.meet(t0, t1) != view.zero:
        return MonitorHit(Reason.MONITOR_B, "tops-meet", (t0, t1))
    if view.f(t0) != view.one:
        return MonitorHit(Reason.MONITOR_B, "f-top0", (t0,))
    if view.f(t1) != view.one:
        return MonitorHit(Reason.MONITOR_B, "f-top1", (t1,))
    return None


def _check_disjoint_units(view: ModalAdversaryView, s: int) -> Optional[MonitorHit]:
    for k, top in enumerate((view.top0, view.top1)):
        below = [x for x in view.probe if view.leq(x, top) and view.f(x) == view.one]
        for x, y in combinations(below, 2):
            if view.meet(x, y) == view.zero:
                return MonitorHit(Reason.MONITOR_D, f"top{k}", (x, y))
    return None


def _reaches_one(view: ModalAdversaryView, y: int, s: int) -> bool:
    current = y
    for _ in range(s + 1):
        if current == view.one:
            return True
        current = view.f(current)
    return False


def _check_splits(view: ModalAdversaryView, s: int) -> Optional[MonitorHit]:
    one = view.one
    for k, top in enumerate((view.top0, view.top1)):
        parts = [x for x in view.probe if x not in (view.zero, top)]
        for x in parts:
            for y in parts:
                if x == y or view.join(x, y) != top or view.meet(x, y) != view.zero:
                    continue
                fx, fy = view.f(x), view.f(y)
                if fx != one and fy != one:
                    return MonitorHit(Reason.MONITOR_C, f"top{k}-no-unit", (x, y))
                if fx == one and fy == y:
                    return MonitorHit(Reason.MONITOR_C, f"top{k}-fixed-part", (x, y))
                if fx == one and _reaches_one(view, y, s):
                    return MonitorHit(Reason.MONITOR_C, f"top{k}-part-reaches-one", (x, y))
    return None


MONITORS = (_check_axioms, _check_tops, _check_disjoint_units, _check_splits)


def monitoring_check(view: ModalAdversaryView, s: int) -> Optional[MonitorHit]:
    """First monitoring condition the view violates at stage s, in the order a, b, d, c."""
    for check in MONITORS:
        hit = check(view, s)
        if hit is not None:
            return hit
    return None


# ---------------------------------------------------------------------------
# Alert strategy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlertOutcome:
    case: str
    blocks: int
    witnesses: Tuple[int, ...] = ()
    witness: Optional[int] = None
    status: Optional[str] = None
    n: Optional[int] = None

    @property
    def activates(self) -> bool:
        return self.case in ("i.c", "i.d")


def alert_decision(view: ModalAdversaryView, s: int, bound: int, forbidden) -> AlertOutcome:
    """
    Refine the adversary's 1 by its tops and least other elements until
    bound + 3 blocks show up, take the first bound + 1 blocks not sent to 1
    as witnesses and sort their orbits into cases i.a to i.e.
    """
    wanted = bound + 3
    candidates = (i for i in count() if i not in view.distinguished)
    generators = [view.top0, view.top1] + list(islice(candidates, 8 * wanted))
    blocks = sorted(refine_blocks(view, generators, stop_at=wanted))

    for top in (view.top0, view.top1):
        units = [b for b in blocks if view.leq(b, top) and view.f(b) == view.one]
        if len(units) >= 2:
            return AlertOutcome(Reason.P2_VIOLATION, len(blocks), tuple(units[:2]))
    if len(blocks) < wanted:
        return AlertOutcome("deferred", len(blocks))
    witnesses = tuple(b for b in blocks if view.f(b) != view.one)[:bound + 1]
    if len(witnesses) < bound + 1:
        return AlertOutcome("deferred", len(blocks), witnesses)

    depth = iteration_depth(s)
    orbits = [(a, adversary_orbit(view, a, depth)) for a in witnesses]

    def outcome(case, a=None, orbit=None):
        return AlertOutcome(case, len(blocks), witnesses, a, orbit.status if orbit else None,
                            orbit.n if orbit else None)

    for a, orbit in orbits:
        if orbit.status == "merge":
            return outcome(Reason.NON_INJECTIVE, a, orbit)
    for a, orbit in orbits:
        if orbit.status == "closed" and is_bad_size(orbit.n, forbidden):
            return outcome(Reason.BAD_ORBIT, a, orbit)
    p = stage_prime(s)
    for a, orbit in orbits:
        if orbit.status == "closed" and any(q >= p for q in factorint(orbit.n)):
            return outcome("i.c", a, orbit)
    for a, orbit in orbits:
        if orbit.status == "open":
            return outcome("i.d", a, orbit)
    return outcome(Reason.COUNTING)


# ---------------------------------------------------------------------------
# Active strategy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActiveOutcome:
    case: str
    status: str
    n: Optional[int] = None
    q: Optional[int] = None


def active_decision(view: ModalAdversaryView, s: int, witness: int, forbidden) -> ActiveOutcome:
    orbit = adversary_orbit(view, witness, iteration_depth(s))
    if orbit.status == "open":
        return ActiveOutcome("ii.b", "open")
    if orbit.status == "merge" or is_bad_size(orbit.n, forbidden):
        return ActiveOutcome(Reason.ORBIT_OBSTRUCTION, orbit.status, orbit.n)
    p = stage_prime(s)
    if orbit.n % p == 0:
        return ActiveOutcome(Reason.FORBID, "closed", orbit.n, p)
    q = max(factorint(orbit.n))
    if q <= p:
        raise InvariantBreach("property †", f"orbit of {witness} has size {orbit.n}, no prime factor above {p}", s)
    return ActiveOutcome("dagger", "closed", orbit.n, q)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def new_state(
    adversaries: Sequence = (),
    horizon: int = 1,
    fuel_base: int | None = None,
    witness_bound: str | None = None
) -> ModalConstructionState:
    """Stage 0: no cycles, R_0 on alert when there is an adversary 0."""
    witness_bound = get_witness_bound() if witness_bound is None else witness_bound
    if witness_bound not in WITNESS_BOUNDS:
        raise ConfigError(f"witness_bound must be one of {WITNESS_BOUNDS}, got {witness_bound!r}")
    handles = [SignatureHandle(adv, fuel_base) for adv in adversaries]
    names = [h.name for h in handles]
    trace = StageTrace(ENGINE, horizon, adversaries=names, witness_bound=witness_bound)
    state = ModalConstructionState(
        table=ModalityTable(),
        stage=0,
        requirements=[ModalRequirement(i, name) for i, name in enumerate(names)],
        handles=handles,
        trace=trace,
        witness_bound=witness_bound,
    )
    if handles:
        _promote(state, 0)
    return state


def _promote(state: ModalConstructionState, e: int):
    req = state.requirements[e]
    req.state = RequirementState.ALERT
    req.alerted_at = state.stage
    state.trace.append(stage=state.stage, req=e, event=Event.PROMOTE, detail=None)
    logger.info(f"🔔 stage {state.stage}: R{e} ({req.name}) is on the alert")


def _deactivate(state: ModalConstructionState, e: int, reason: str, **extra):
    req = state.requirements[e]
    req.state = RequirementState.DEACTIVATED
    req.reason = reason
    state.trace.append(stage=state.stage, req=e, event=Event.DEACTIVATE, detail=reason, **extra)
    logger.info(f"⛔ stage {state.stage}: R{e} ({req.name}) deactivated, reason {reason}")


def _disqualify(state: ModalConstructionState, e: int, error: OutOfFuel, during: str, **context):
    _deactivate(state, e, Reason.DISQUALIFIED, symbol=error.adversary.split(".")[-1], during=during, **context)


def _view(state: ModalConstructionState, e: int) -> Optional[ModalAdversaryView]:
    try:
        return modal_probe(state.handles[e], state.stage)
    except OutOfFuel as error:
        _disqualify(state, e, error, "probe")
        return None


def monitor(state: ModalConstructionState, e: int) -> ModalConstructionState:
    s = state.stage
    view = _view(state, e)
    if view is None:
        return state
    try:
        hit = monitoring_check(view, s)
    except OutOfFuel as error:
        _disqualify(state, e, error, "monitor")
        return state
    if hit is not None:
        state.trace.append(stage=s, req=e, event=Event.MONITOR, detail=hit.condition, clause=hit.clause,
                           witness=hit.witness)
        _deactivate(state, e, hit.condition)
    return state


def alert_strategy(state: ModalConstructionState, e: int) -> ModalConstructionState:
    """Pick witnesses for R_e and either activate it on one of them or deactivate it."""
    s = state.stage
    req = state.requirements[e]
    if req.state != RequirementState.ALERT:
        raise InvariantBreach("alert uniqueness", f"R{e} is {req.state}, not on the alert", s)
    view = _view(state, e)
    if view is None:
        return state
    bound = state.witness_count_bound()
    try:
        outcome = alert_decision(view, s, bound, state.forbidden)
    except OutOfFuel as error:
        _disqualify(state, e, error, "alert", M=bound)
        return state

    state.trace.append(stage=s, req=e, event=Event.ALERT, detail=outcome.case, M=bound, blocks=outcome.blocks,
                       witnesses=outcome.witnesses, witness=outcome.witness, status=outcome.status, N=outcome.n)
    if outcome.case == "deferred":
        logger.debug(f"🔔 stage {s}: R{e} found {outcome.blocks} of {bound + 3} blocks, waiting")
    elif outcome.activates:
        req.state = RequirementState.ACTIVE
        req.witness = outcome.witness
        logger.info(f"🔔 stage {s}: R{e} active on element {outcome.witness} ({outcome.case})")
    else:
        _deactivate(state, e, outcome.case)
    return state


def active_strategy(state: ModalConstructionState, e: int) -> bool:
    """Re-examine the witness orbit of an active R_e; returns True when p_s got forbidden."""
    s = state.stage
    req = state.requirements[e]
    view = _view(state, e)
    if view is None:
        return False
    try:
        outcome = active_decision(view, s, req.witness, state.forbidden)
    except OutOfFuel as error:
        _disqualify(state, e, error, "active", witness=req.witness)
        return False

    if outcome.case == Reason.FORBID:
        state.forbidden.add(outcome.q)
        state.trace.append(stage=s, req=e, event=Event.FORBID, detail=None, p=outcome.q, witness=req.witness,
                           N=outcome.n)
        logger.info(f"⛔ stage {s}: R{e} forbids the {outcome.q}-cycle (orbit size {outcome.n})")
        _deactivate(state, e, Reason.FORBID)
        return True
    if outcome.case == Reason.ORBIT_OBSTRUCTION:
        _deactivate(state, e, Reason.ORBIT_OBSTRUCTION, witness=req.witness, status=outcome.status, N=outcome.n)
        return False
    state.trace.append(stage=s, req=e, event=Event.ACTIVE, detail=outcome.case, witness=req.witness,
                       status=outcome.status, N=outcome.n, q=outcome.q)
    return False


def run_stage(state: ModalConstructionState) -> ModalConstructionState:
    state.stage += 1
    s = state.stage
    live = [r.index for r in state.requirements[:s + 1] if r.state != RequirementState.DEACTIVATED]
    for e in live:
        monitor(state, e)

    alerts = state.on_alert()
    if len(alerts) > 1:
        raise InvariantBreach("alert uniqueness", f"requirements {alerts} are all on the alert", s)
    for e in alerts:
        alert_strategy(state, e)

    forbade = False
    for req in state.requirements:
        if req.state == RequirementState.ACTIVE:
            forbade = active_strategy(state, req.index) or forbade

    if forbade:
        return state

    state.table = add_p_cycle(state.table, stage_prime(s))
    record = state.table.cycles[-1]
    fields = dict(token.split("=") for token in record.trace_line().split()[1:])
    state.trace.append(stage=s, req=None, event=Event.CYCLE, detail=None, **fields)
    logger.info(f"🔁 stage {s}: {record.trace_line()}")

    if not state.on_alert():
        fresh = [r.index for r in state.requirements
                 if r.alerted_at is None and r.state == RequirementState.INACTIVE]
        if fresh:
            _promote(state, fresh[0])
    return state


def run_modal_diagonalizer(
    adversaries: Sequence = (),
    horizon: int = 1,
    fuel_base: int | None = None,
    witness_bound: str | None = None
) -> ModalConstructionState:
    """Run stages 1..horizon; the trace is on the returned state."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    state = new_state(adversaries, horizon, fuel_base, witness_bound)
    for _ in range(horizon):
        run_stage(state)
    return state


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

def modal_certificate(trace: StageTrace, e: int) -> Tuple[str, Optional[int], str]:
    """(tag, stage, detail) for requirement e of a modal-diagonalizer trace."""
    ended = trace.last(event=Event.DEACTIVATE, req=e)
    if ended is not None:
        reason = ended.get("detail")
        if reason == Reason.FORBID:
            forbid = trace.last(event=Event.FORBID, req=e)
            return Certificate.FORBIDDEN_PRIME, ended.stage, f"p={forbid.get('p')} N={forbid.get('N')}"
        if reason == Reason.DISQUALIFIED:
            return Certificate.DISQUALIFIED, ended.stage, ended.get("symbol", "")
        return Certificate.DEACTIVATED, ended.stage, reason
    active = trace.last(event=Event.ACTIVE, req=e)
    if active is not None:
        detail = f"witness={active.get('witness')} " + (
            "orbit open" if active.get("detail") == "ii.b" else f"N={active.get('N')} q={active.get('q')}")
        return Certificate.ACTIVE_OPEN, active.stage, detail
    return Certificate.UNDECIDED, None, ""


# ---------------------------------------------------------------------------
# Replay verification
# ---------------------------------------------------------------------------

def verify_modal_trace(trace: StageTrace) -> List[Tuple[str, bool, str]]:
    """
    Replay the requirement lifecycle and the cycles of a modal trace.

    Checks the legal state transitions, one cycle per prime and only for
    p_s at stage s, a prime factor above p_s for every closed active orbit,
    at most one requirement on the alert, and one cycle per stage without
    a forbiddance.
    """
    states: Dict[int, str] = {}
    primes: List[int] = []
    forbidden: set = set()
    forbid_stages: set = set()
    deactivations = 0
    seen_active: Dict[int, set] = {}
    failures: Dict[str, str] = {}

    def fail(name: str, detail: str):
        failures.setdefault(name, detail)

    def close_stage(s: int):
        for e, st in states.items():
            if st == RequirementState.ACTIVE and e not in seen_active.get(s, set()):
                fail("property †", f"stage {s}: active R{e} has no orbit check")

    current = 0
    for record in trace:
        s = record.stage
        if s != current:
            if current > 0:
                close_stage(current)
            current = s
        event = record.get("event")
        e = record.as_int("req")
        st = states.get(e, RequirementState.INACTIVE) if e is not None else None
        if st == RequirementState.DEACTIVATED and event != Event.CYCLE:
            fail("replay", f"stage {s}: {event} for deactivated R{e}")
            continue

        if event == Event.PROMOTE:
            if st != RequirementState.INACTIVE:
                fail("replay", f"stage {s}: R{e} promoted from {st}")
            states[e] = RequirementState.ALERT
        elif event == Event.ALERT:
            if st != RequirementState.ALERT:
                fail("replay", f"stage {s}: alert strategy for R{e} in state {st}")
            if record.get("detail") in ("i.c", "i.d"):
                states[e] = RequirementState.ACTIVE
        elif event == Event.ACTIVE:
            if st != RequirementState.ACTIVE:
                fail("replay", f"stage {s}: active strategy for R{e} in state {st}")
            seen_active.setdefault(s, set()).add(e)
            if record.get("detail") == "dagger":
                n, q, p = record.as_int("N"), record.as_int("q"), stage_prime(s)
                if not (isprime(q) and n % q == 0 and q > p):
                    fail("property †", f"stage {s}: R{e} orbit size {n} with q={q}, p_s={p}")
        elif event == Event.FORBID:
            p = record.as_int("p")
            if st != RequirementState.ACTIVE or p != stage_prime(s):
                fail("replay", f"stage {s}: R{e} forbids {p} in state {st}")
            if p in primes:
                fail("property #", f"stage {s}: forbids {p} after its cycle")
            forbidden.add(p)
            forbid_stages.add(s)
            seen_active.setdefault(s, set()).add(e)
        elif event == Event.DEACTIVATE:
            states[e] = RequirementState.DEACTIVATED
            deactivations += 1
            seen_active.setdefault(s, set()).add(e)
        elif event == Event.CYCLE:
            p = record.as_int("p")
            if p != stage_prime(s):
                fail("replay", f"stage {s}: cycle for {p}, expected {stage_prime(s)}")
            if s in forbid_stages:
                fail("replay", f"stage {s}: cycle added on a forbiddance stage")
            if p in primes or p in forbidden:
                fail("property #", f"stage {s}: second {p}-cycle or forbidden prime")
            primes.append(p)
        elif event != Event.MONITOR:
            fail("replay", f"stage {s}: unknown event {event}")

        alerts = [k for k, v in states.items() if v == RequirementState.ALERT]
        if len(alerts) > 1:
            fail("alert uniqueness", f"stage {s}: {alerts} on the alert together")
    if current > 0:
        close_stage(current)

    horizon = trace.horizon
    if len(primes) + len(forbid_stages) != horizon or len(primes) < horizon - deactivations:
        fail("cycle density", f"{len(primes)} cycles, {len(forbid_stages)} forbiddance stages, "
                              f"{deactivations} deactivations over {horizon} stages")

    names = ["replay", "property #", "property †", "alert uniqueness", "cycle density"]
    return [(name, name not in failures, failures.get(name, "")) for name in names]


def replay_deactivations(trace: StageTrace, adversaries: Sequence, fuel_base: int | None = None
                         ) -> List[Tuple[str, bool, str]]:
    """
    Re-derive every monitoring hit, alert decision and active decision of
    the trace against fresh copies of the adversaries.
    """
    handles = [SignatureHandle(adv, fuel_base) for adv in adversaries]
    forbidden: set = set()
    failures: Dict[str, str] = {}

    def fail(name: str, detail: str):
        failures.setdefault(name, detail)

    def view_at(e: int, s: int) -> Optional[ModalAdversaryView]:
        if e >= len(handles):
            fail("deactivation soundness", f"stage {s}: R{e} has no adversary")
            return None
        return modal_probe(handles[e], s)

    for record in trace:
        s, e, event = record.stage, record.as_int("req"), record.get("event")
        try:
            if event == Event.MONITOR:
                view = view_at(e, s)
                if view is None:
                    continue
                hit = monitoring_check(view, s)
                got = (hit.condition, hit.clause, hit.witness) if hit else None
                want = (record.get("detail"), record.get("clause"), record.as_ints("witness"))
                if got != want:
                    fail("deactivation soundness", f"stage {s}: R{e} monitoring gives {got}, trace has {want}")
            elif event == Event.ALERT:
                view = view_at(e, s)
                if view is None:
                    continue
                outcome = alert_decision(view, s, record.as_int("M"), forbidden)
                if outcome.case != record.get("detail") or outcome.witness != record.as_int("witness"):
                    fail("deactivation soundness",
                         f"stage {s}: R{e} alert gives {outcome.case} on {outcome.witness}, trace has "
                         f"{record.get('detail')} on {record.get('witness')}")
            elif event in (Event.ACTIVE, Event.FORBID) or (
                    event == Event.DEACTIVATE and record.get("detail") == Reason.ORBIT_OBSTRUCTION):
                view = view_at(e, s)
                if view is None:
                    continue
                witness = record.as_int("witness")
                outcome = active_decision(view, s, witness, forbidden)
                want = Reason.FORBID if event == Event.FORBID else record.get("detail")
                if outcome.case != want:
                    fail("deactivation soundness", f"stage {s}: R{e} active gives {outcome.case}, trace has {want}")
                if outcome.case == "ii.b":
                    values = adversary_orbit(view, witness, iteration_depth(s)).values
                    if len(set(values)) != iteration_depth(s) + 1:
                        fail("open orbits", f"stage {s}: R{e} orbit has repeats within L")
                if event == Event.FORBID:
                    forbidden.add(record.as_int("p"))
            elif event == Event.DEACTIVATE and record.get("detail") == Reason.DISQUALIFIED:
                during = record.get("during")
                view = view_at(e, s)
                if view is None:
                    continue
                if during == "monitor":
                    monitoring_check(view, s)
                elif during == "alert":
                    alert_decision(view, s, record.as_int("M"), forbidden)
                elif during == "active":
                    active_decision(view, s, record.as_int("witness"), forbidden)
                fail("deactivation soundness", f"stage {s}: R{e} answered within budget on replay")
        except OutOfFuel:
            if not (event == Event.DEACTIVATE and record.get("detail") == Reason.DISQUALIFIED):
                fail("deactivation soundness", f"stage {s}: R{e} ran out of fuel on replay")

    names = ["deactivation soundness", "open orbits"]
    return [(name, name not in failures, failures.get(name, "")) for name in names]
