"""
Fuel-bounded adversaries.

An adversary is any total deterministic program that answers queries on
natural numbers within an explicit step budget. Programs come either from
the register-machine DSL below or from scripted Python fixtures; both
expose the same `evaluate(inputs, budget)` contract.

DSL, one instruction per line, `#` starts a comment:

    arity 2          optional; otherwise inferred from x0, x1, ...
    set r v          r := v
    add r a b        r := a + b     (also sub, mul, eq, lt, mod)
    if r goto L      jump forward to label L when r != 0
    L:               label
    repeat k         run the block up to `end` k times; k is a literal
    end
    ret r            return r

Registers are lower-case names, inputs are x0, x1, ... and everything
starts at 0. Each executed instruction and each loop round costs one step.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .config import fuel_policy
from .errors import ProgramLoadError
from .structures import ViolationReport, poset_tree_from_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Outcome:
    """Result of one evaluation: a value, or None when the budget ran out."""
    value: Optional[int]
    steps: int

    @property
    def out_of_fuel(self) -> bool:
        return self.value is None


class OutOfFuel(Exception):
    """Raised by views when an adversary query exhausts its budget."""

    def __init__(self, adversary: str, inputs: tuple, budget: int):
        self.adversary = adversary
        self.inputs = inputs
        self.budget = budget
        super().__init__(f"{adversary} ran out of fuel on {inputs} with budget {budget}")


# ---------------------------------------------------------------------------
# DSL
# ---------------------------------------------------------------------------

_BINARY_OPS: Dict[str, Callable[[int, int], int]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: max(a - b, 0),
    "mul": lambda a, b: a * b,
    "eq": lambda a, b: int(a == b),
    "lt": lambda a, b: int(a < b),
    "mod": lambda a, b: a % b if b else 0,
}

_REGISTER = re.compile(r"^[a-z][a-z0-9_]*$")
_LABEL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*):$")


@dataclass(frozen=True)
class _Instr:
    op: str
    args: Tuple = ()
    line: int = 0


@dataclass(frozen=True)
class _Block:
    instrs: Tuple
    labels: Dict[str, int] = field(default_factory=dict)


def _operand(token: str, line: int):
    if token.isdigit():
        return int(token)
    if _REGISTER.match(token):
        return token
    raise ProgramLoadError(f"bad operand {token!r}", line)


def _target(token: str, line: int) -> str:
    if not _REGISTER.match(token):
        raise ProgramLoadError(f"bad register {token!r}", line)
    return token


def parse_program(text: str, name: str = "program") -> "DslProgram":
    """Parse DSL text; raises ProgramLoadError on malformed programs."""
    stack: List[Tuple[List, Dict[str, int], int]] = [([], {}, 0)]
    pending_jumps: List[List[Tuple[str, int]]] = [[]]
    declared_arity = None
    highest_input = -1

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for token in re.findall(r"\bx(\d+)\b", line):
            highest_input = max(highest_input, int(token))
        instrs, labels, _ = stack[-1]

        label = _LABEL.match(line)
        if label:
            if label.group(1) in labels:
                raise ProgramLoadError(f"label {label.group(1)} defined twice", number)
            labels[label.group(1)] = len(instrs)
            continue

        parts = line.split()
        op, args = parts[0], parts[1:]
        if op == "arity" and len(args) == 1 and args[0].isdigit():
            declared_arity = int(args[0])
        elif op == "set" and len(args) == 2:
            instrs.append(_Instr("set", (_target(args[0], number), _operand(args[1], number)), number))
        elif op in _BINARY_OPS and len(args) == 3:
            instrs.append(_Instr(op, (_target(args[0], number), _operand(args[1], number), _operand(args[2], number)), number))
        elif op == "if" and len(args) == 3 and args[1] == "goto":
            instrs.append(_Instr("if", (_operand(args[0], number), args[2]), number))
            pending_jumps[-1].append((args[2], len(instrs) - 1, number))
        elif op == "ret" and len(args) == 1:
            instrs.append(_Instr("ret", (_operand(args[0], number),), number))
        elif op == "repeat" and len(args) == 1:
            if not args[0].isdigit():
                raise ProgramLoadError(f"loop bound must be a literal, got {args[0]!r}", number)
            stack.append(([], {}, int(args[0])))
            pending_jumps.append([])
        elif op == "end" and not args:
            if len(stack) == 1:
                raise ProgramLoadError("`end` without `repeat`", number)
            body, body_labels, count = stack.pop()
            _check_jumps(pending_jumps.pop(), body_labels)
            stack[-1][0].append(_Instr("repeat", (count, _Block(tuple(body), body_labels)), number))
        else:
            raise ProgramLoadError(f"cannot parse {line!r}", number)

    if len(stack) != 1:
        raise ProgramLoadError("`repeat` without `end`")
    instrs, labels, _ = stack[0]
    _check_jumps(pending_jumps[0], labels)

    arity = declared_arity if declared_arity is not None else highest_input + 1
    if highest_input >= arity:
        raise ProgramLoadError(f"x{highest_input} used but arity is {arity}")
    return DslProgram(name, arity, _Block(tuple(instrs), labels), text)


def _check_jumps(jumps: Iterable[Tuple[str, int, int]], labels: Dict[str, int]):
    for label, position, line in jumps:
        if label not in labels:
            raise ProgramLoadError(f"jump to unknown label {label} (labels are block-local)", line)
        if labels[label] <= position:
            raise ProgramLoadError(f"jump to {label} goes backwards", line)


def load_program(path: str | Path) -> "DslProgram":
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ProgramLoadError(f"cannot read {path}: {e}") from e
    return parse_program(text, name=path.stem)


class _Exhausted(Exception):
    pass


class _Returned(Exception):
    def __init__(self, value: int):
        self.value = value


class DslProgram:
    """A loaded DSL program."""

    def __init__(self, name: str, arity: int, body: _Block, source: str = ""):
        self.name = name
        self.arity = arity
        self.body = body
        self.source = source

    def __repr__(self) -> str:
        return f"DslProgram({self.name!r}, arity={self.arity})"

    def evaluate(self, inputs: Sequence[int], budget: int) -> Outcome:
        if len(inputs) != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} inputs, got {len(inputs)}")
        registers: Dict[str, int] = {f"x{i}": int(x) for i, x in enumerate(inputs)}
        counter = [0]
        try:
            self._run(self.body, registers, counter, budget)
        except _Returned as done:
            return Outcome(done.value, counter[0])
        except _Exhausted:
            return Outcome(None, budget)
        return Outcome(0, counter[0])

    def _run(self, block: _Block, registers: Dict[str, int], counter: List[int], budget: int):
        def read(operand):
            return operand if isinstance(operand, int) else registers.get(operand, 0)

        pc = 0
        while pc < len(block.instrs):
            instr = block.instrs[pc]
            counter[0] += 1
            if counter[0] > budget:
                raise _Exhausted()
            op, args = instr.op, instr.args
            if op == "set":
                registers[args[0]] = read(args[1])
            elif op in _BINARY_OPS:
                registers[args[0]] = _BINARY_OPS[op](read(args[1]), read(args[2]))
            elif op == "if":
                if read(args[0]) != 0:
                    pc = block.labels[args[1]]
                    continue
            elif op == "ret":
                raise _Returned(read(args[0]))
            elif op == "repeat":
                count, body = args
                for _ in range(count):
                    self._run(body, registers, counter, budget)
                    counter[0] += 1
                    if counter[0] > budget:
                        raise _Exhausted()
            pc += 1


class ScriptedProgram:
    """
    A fixture adversary backed by a Python function.

    `cost` is the number of steps one evaluation takes, a constant or a
    function of the inputs.
    """

    def __init__(self, name: str, arity: int, fn: Callable[..., int], cost: int | Callable[..., int] = 1):
        self.name = name
        self.arity = arity
        self.fn = fn
        self.cost = cost

    def __repr__(self) -> str:
        return f"ScriptedProgram({self.name!r}, arity={self.arity})"

    def evaluate(self, inputs: Sequence[int], budget: int) -> Outcome:
        if len(inputs) != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} inputs, got {len(inputs)}")
        steps = self.cost(*inputs) if callable(self.cost) else self.cost
        if steps > budget:
            return Outcome(None, budget)
        return Outcome(int(self.fn(*inputs)), steps)


def eval_program(program, inputs: Sequence[int], budget: int) -> Outcome:
    """Evaluate any adversary program within `budget` steps."""
    return program.evaluate(tuple(inputs), budget)


# ---------------------------------------------------------------------------
# Handles: memoized, fuel-accounted access to one adversary
# ---------------------------------------------------------------------------

class AdversaryHandle:
    """
    Memoized access to one adversary program.

    Terminated results are reused for any later budget; exhausted ones only
    for budgets no larger than the one that failed. Steps of real
    evaluations are charged per stage.
    """

    def __init__(self, program, fuel_base: int | None = None):
        self.program = program
        self.name = getattr(program, "name", "adversary")
        self.fuel_base = fuel_base
        self._values: Dict[tuple, int] = {}
        self._exhausted: Dict[tuple, int] = {}
        self.charges: Dict[int, List[int]] = {}

    def budget(self, stage: int) -> int:
        return fuel_policy(stage, self.fuel_base)

    def query(self, inputs: tuple, stage: int) -> Optional[int]:
        if inputs in self._values:
            return self._values[inputs]
        budget = self.budget(stage)
        if self._exhausted.get(inputs, -1) >= budget:
            return None
        outcome = self.program.evaluate(inputs, budget)
        charge = self.charges.setdefault(stage, [0, 0])
        charge[0] += 1
        charge[1] += outcome.steps
        if outcome.out_of_fuel:
            self._exhausted[inputs] = budget
            return None
        self._values[inputs] = outcome.value
        return outcome.value

    def stage_charge(self, stage: int) -> Tuple[int, int]:
        queries, steps = self.charges.get(stage, [0, 0])
        return queries, steps


class StructureAdversary:
    """An adversary structure given by one program per signature symbol."""

    KIND = "structure"
    SYMBOLS: Dict[str, int] = {}

    def __init__(self, name: str, programs: Dict[str, object]):
        missing = [s for s in self.SYMBOLS if s not in programs]
        if missing:
            raise ProgramLoadError(f"{self.KIND} adversary {name} lacks {', '.join(missing)}")
        for symbol, arity in self.SYMBOLS.items():
            if programs[symbol].arity != arity:
                raise ProgramLoadError(f"{name}.{symbol} must have arity {arity}")
        self.name = name
        self.programs = dict(programs)


class ModalAdversary(StructureAdversary):
    """A punctual modal algebra: join, meet, complement, modality and four constants."""

    KIND = "modal"
    SYMBOLS = {"join": 2, "meet": 2, "comp": 1, "f": 1, "zero": 0, "one": 0, "top0": 0, "top1": 0}


class SuccessorAdversary(StructureAdversary):
    """A punctual binary successor tree (N, S1, S2, e, r)."""

    KIND = "successor"
    SYMBOLS = {"s1": 1, "s2": 1, "empty": 0, "root": 0}


class SignatureHandle:
    """Memoized, fuel-accounted access to every symbol of a structure adversary."""

    def __init__(self, adversary: StructureAdversary, fuel_base: int | None = None):
        self.adversary = adversary
        self.name = adversary.name
        self.fuel_base = fuel_base
        self.handles = {s: AdversaryHandle(p, fuel_base) for s, p in adversary.programs.items()}

    def call(self, symbol: str, inputs: tuple, stage: int) -> int:
        value = self.handles[symbol].query(inputs, stage)
        if value is None:
            raise OutOfFuel(f"{self.name}.{symbol}", inputs, self.handles[symbol].budget(stage))
        return value

    def stage_charge(self, stage: int) -> Tuple[int, int]:
        queries = steps = 0
        for handle in self.handles.values():
            q, s = handle.stage_charge(stage)
            queries += q
            steps += s
        return queries, steps

    def budget(self, stage: int) -> int:
        return fuel_policy(stage, self.fuel_base)


# ---------------------------------------------------------------------------
# Poset approximations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PosetApproximation:
    """The leq table of an adversary restricted to {0, ..., size-1}."""
    size: int
    table: np.ndarray

    def as_tree(self):
        """The approximation as a poset tree, or the violated clause."""
        return poset_tree_from_table(self.table)

    def restrict(self, size: int) -> "PosetApproximation":
        return PosetApproximation(size, self.table[:size, :size].copy())


@dataclass(frozen=True)
class NotTotalReport:
    """A cell of the approximation table exhausted its budget."""
    cell: Tuple[int, int]
    budget: int


def poset_approximation(handle: AdversaryHandle, size: int, stage: int):
    """Evaluate x <= y as `program(x, y) == 1` on every pair below `size`."""
    table = np.zeros((size, size), dtype=bool)
    for x in range(size):
        for y in range(size):
            value = handle.query((x, y), stage)
            if value is None:
                return NotTotalReport((x, y), handle.budget(stage))
            table[x, y] = value == 1
    return PosetApproximation(size, table)


# ---------------------------------------------------------------------------
# Modal probes
# ---------------------------------------------------------------------------

class ModalAdversaryView:
    """
    One stage's view of a modal adversary.

    `probe` is S = {0, 1, top0, top1} plus every id <= s; `closure` is S
    together with 0 and every nonzero epsilon-product of a prefix of S, so
    the blocks of each refinement round are in it, not only the atoms of
    the subalgebra S generates.
    """

    def __init__(self, handle: SignatureHandle, stage: int):
        self.handle = handle
        self.stage = stage
        self.zero = handle.call("zero", (), stage)
        self.one = handle.call("one", (), stage)
        self.top0 = handle.call("top0", (), stage)
        self.top1 = handle.call("top1", (), stage)
        self.distinguished = (self.zero, self.one, self.top0, self.top1)
        self.probe = tuple(sorted(set(self.distinguished) | set(range(stage + 1))))
        rounds = list(refinement_rounds(self, self.probe))
        self.atoms = rounds[-1] if rounds else (self.one,)
        self.products = tuple(sorted({b for blocks in rounds for b in blocks}))
        self.closure = tuple(sorted(set(self.probe) | set(self.products) | {self.zero}))

    def join(self, x: int, y: int) -> int:
        return self.handle.call("join", (x, y), self.stage)

    def meet(self, x: int, y: int) -> int:
        return self.handle.call("meet", (x, y), self.stage)

    def comp(self, x: int) -> int:
        return self.handle.call("comp", (x,), self.stage)

    def f(self, x: int) -> int:
        return self.handle.call("f", (x,), self.stage)

    def leq(self, x: int, y: int) -> bool:
        return self.join(x, y) == y


def refinement_rounds(view, generators: Iterable[int]) -> Iterator[Tuple[int, ...]]:
    """
    Refine the partition {1} by each generator in turn, using the
    adversary's own meet and complement, and yield the blocks after each
    round.
    """
    blocks = [view.one]
    for g in generators:
        complement = view.comp(g)
        refined = []
        for block in blocks:
            for part in (view.meet(block, g), view.meet(block, complement)):
                if part != view.zero and part not in refined:
                    refined.append(part)
        blocks = refined
        yield tuple(blocks)


def refine_blocks(view, generators: Iterable[int], stop_at: Optional[int] = None) -> Tuple[int, ...]:
    """The blocks after the last refinement round, or after the first with `stop_at` blocks."""
    blocks: Tuple[int, ...] = (view.one,)
    for blocks in refinement_rounds(view, generators):
        if stop_at is not None and len(blocks) >= stop_at:
            break
    return blocks


def modal_probe(handle: SignatureHandle, stage: int) -> ModalAdversaryView:
    """Materialize S and X for one stage; raises OutOfFuel on budget exhaustion."""
    return ModalAdversaryView(handle, stage)
