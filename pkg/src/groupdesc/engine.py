"""Resumable, deterministic, step-budgeted computations.

A Computation is stepped one unit at a time under an explicit Budget; there
is no wall clock anywhere.  Three kinds exist: semi-deciders (terminal
status: accepted), deciders (terminal status: an answer), and enumerators
(never terminal; they emit items while running).  Combinators schedule
their children round-robin, one child step per own step, so fairness and
budget arithmetic stay exact.

A single Computation instance must be stepped from one logical thread at a
time; distinct instances are fully independent.  Descriptions elsewhere in
the package are immutable recipes that build fresh Computation instances,
so re-running any experiment replays the exact same step sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Optional

SEMIDECIDER = "semidecider"
DECIDER = "decider"
ENUMERATOR = "enumerator"

RUNNING = "running"
ACCEPTED = "accepted"
ANSWERED = "answered"

_NO_EMIT = object()


class EngineError(RuntimeError):
    """Misuse of the execution substrate (e.g. stepping a terminal computation)."""


class MachineError(ValueError):
    """Malformed counter machine program."""


@dataclass(frozen=True)
class Budget:
    """A hard cap on the number of steps a single run may consume."""

    max_steps: int

    def __post_init__(self) -> None:
        if self.max_steps < 0:
            raise ValueError("budget must be non-negative")


@dataclass(frozen=True)
class Outcome:
    """Result of running a computation under a budget.

    status is one of "accepted", "answer", "emitted", "exhausted";
    value carries the answer (deciders), the emitted items (enumerators),
    or None; steps is the number of steps consumed by this run call.
    """

    status: str
    steps: int
    value: Any = None
    certificate: Any = None

    @property
    def is_terminal(self) -> bool:
        return self.status in ("accepted", "answer")


class Computation:
    """Base stepper.  Subclasses implement _step_impl (one unit of work)."""

    kind = SEMIDECIDER

    def __init__(self) -> None:
        self.steps_taken = 0
        self.status = RUNNING
        self.answer: Any = None
        self.certificate: Any = None

    @property
    def is_terminal(self) -> bool:
        return self.status != RUNNING

    def step(self) -> Any:
        """Advance one step; returns an emitted item or _NO_EMIT."""
        if self.status != RUNNING:
            raise EngineError("cannot step a terminal computation")
        self.steps_taken += 1
        return self._step_impl()

    def _step_impl(self) -> Any:
        raise NotImplementedError

    def _accept(self, certificate: Any = None) -> None:
        self.status = ACCEPTED
        self.certificate = certificate

    def _answer(self, value: Any, certificate: Any = None) -> None:
        self.status = ANSWERED
        self.answer = value
        self.certificate = certificate


def run(computation: Computation, budget: Budget) -> Outcome:
    """Step a computation at most budget.max_steps times.

    Returns the terminal outcome if one is reached, otherwise Exhausted
    (semi-deciders and deciders) or the list of emissions (enumerators).
    Deterministic: same computation recipe and budget, same outcome.
    """
    if computation.is_terminal:
        raise EngineError("computation already terminal")
    emitted: list[Any] = []
    used = 0
    collect = computation.kind == ENUMERATOR
    fast = isinstance(computation, AtomComputation)
    while used < budget.max_steps:
        if fast:
            # consume guaranteed-eventless debt steps in bulk; this changes
            # nothing observable, including step counts
            silent = computation._silent_steps()
            if silent:
                k = min(silent, budget.max_steps - used)
                computation._consume_silent(k)
                used += k
                if used >= budget.max_steps:
                    break
        item = computation.step()
        used += 1
        if collect and item is not _NO_EMIT:
            emitted.append(item)
        if computation.status == ACCEPTED:
            return Outcome("accepted", used, certificate=computation.certificate)
        if computation.status == ANSWERED:
            return Outcome(
                "answer", used, value=computation.answer,
                certificate=computation.certificate,
            )
    if collect:
        return Outcome("emitted", used, value=emitted)
    return Outcome("exhausted", used)


def run_until_terminal(
    computation: Computation, max_steps: int, chunk: int = 1 << 16
) -> Outcome:
    """Run in chunks until terminal or max_steps consumed (test convenience)."""
    total = 0
    while total < max_steps:
        outcome = run(computation, Budget(min(chunk, max_steps - total)))
        total += outcome.steps
        if outcome.is_terminal:
            return Outcome(outcome.status, total, outcome.value, outcome.certificate)
    return Outcome("exhausted", total)


class AtomComputation(Computation):
    """A leaf computation defined by a generator of (cost, event) atoms.

    Each atom represents one indivisible piece of work with a positive
    integer cost; its event fires on the last of the cost unit steps, so
    budgets meter actual work.  Events: None, ("emit", item),
    ("accept", certificate), ("answer", value).
    """

    def __init__(self, kind: str, atoms: Iterator[tuple[int, Any]]):
        super().__init__()
        self.kind = kind
        self._atoms = atoms
        self._debt = 0
        self._pending: Any = None

    def _silent_steps(self) -> int:
        """Steps that are guaranteed to have no observable effect."""
        if self._debt == 0:
            return 0
        return self._debt if self._pending is None else self._debt - 1

    def _consume_silent(self, k: int) -> None:
        self._debt -= k
        self.steps_taken += k

    def _step_impl(self) -> Any:
        if self._debt == 0:
            try:
                cost, event = next(self._atoms)
            except StopIteration:
                if self.kind == ENUMERATOR:
                    cost, event = 4096, None  # exhausted streams idle forever
                else:
                    raise EngineError("atom stream ended without a terminal event")
            if cost < 1:
                raise EngineError("atom cost must be >= 1")
            self._debt = cost
            self._pending = event
        self._debt -= 1
        if self._debt or self._pending is None:
            return _NO_EMIT
        tag, payload = self._pending
        self._pending = None
        if tag == "emit":
            return payload
        if tag == "accept":
            self._accept(payload)
        elif tag == "answer":
            self._answer(payload)
        else:
            raise EngineError(f"unknown atom event {tag!r}")
        return _NO_EMIT


def immediate_accept() -> Computation:
    """Semi-decider that accepts on its first step."""
    return AtomComputation(SEMIDECIDER, iter([(1, ("accept", None))]))


def never_accept() -> Computation:
    """Semi-decider that runs forever."""

    def atoms() -> Iterator[tuple[int, Any]]:
        while True:
            yield (1, None)

    return AtomComputation(SEMIDECIDER, atoms())


def accept_after(n: int, certificate: Any = None) -> Computation:
    """Semi-decider that accepts on its n-th step (n >= 1)."""

    def atoms() -> Iterator[tuple[int, Any]]:
        for _ in range(n - 1):
            yield (1, None)
        yield (1, ("accept", certificate))

    return AtomComputation(SEMIDECIDER, atoms())


def answer_after(n: int, value: Any) -> Computation:
    def atoms() -> Iterator[tuple[int, Any]]:
        for _ in range(n - 1):
            yield (1, None)
        yield (1, ("answer", value))

    return AtomComputation(DECIDER, atoms())


def enumerator_from_iterable(items: Iterable[Any]) -> Computation:
    """Enumerator emitting the items one per step, then idling forever."""

    def atoms() -> Iterator[tuple[int, Any]]:
        for item in items:
            yield (1, ("emit", item))

    return AtomComputation(ENUMERATOR, atoms())


class DovetailAnd(Computation):
    """Accepts iff every child semi-decider accepts; fair round-robin.

    Each own step delegates exactly one step to the next live child, so in
    B combined steps every live child receives at least floor(B/n) - 1
    steps.  Per-child step counts are exposed for fairness instrumentation.
    """

    kind = SEMIDECIDER

    def __init__(self, children: list[Computation]):
        super().__init__()
        if not children:
            raise EngineError("dovetail_and needs at least one child")
        for child in children:
            if child.kind != SEMIDECIDER:
                raise EngineError("dovetail_and children must be semi-deciders")
        self._live = list(children)
        self._next = 0
        self.child_steps = {id(c): 0 for c in children}

    def _step_impl(self) -> Any:
        child = self._live[self._next]
        child.step()
        self.child_steps[id(child)] += 1
        if child.is_terminal:
            self._live.pop(self._next)
            if not self._live:
                self._accept()
                return _NO_EMIT
            self._next %= len(self._live)
        else:
            self._next = (self._next + 1) % len(self._live)
        return _NO_EMIT


def dovetail_and(children: list[Computation]) -> Computation:
    return DovetailAnd(children)


class Race(Computation):
    """Answers with the label of the first child semi-decider to accept.

    Children are stepped round-robin in list order, so a tie within a
    round resolves to the lower index.
    """

    kind = DECIDER

    def __init__(self, labeled: list[tuple[Any, Computation]]):
        super().__init__()
        if not labeled:
            raise EngineError("race needs at least one child")
        for _, child in labeled:
            if child.kind != SEMIDECIDER:
                raise EngineError("race children must be semi-deciders")
        self._children = list(labeled)
        self._next = 0

    def _step_impl(self) -> Any:
        label, child = self._children[self._next]
        child.step()
        if child.status == ACCEPTED:
            self._answer(label, certificate=child.certificate)
            return _NO_EMIT
        self._next = (self._next + 1) % len(self._children)
        return _NO_EMIT


def race(labeled: list[tuple[Any, Computation]]) -> Computation:
    return Race(labeled)


class SemideciderEnumerator(Computation):
    """Emits exactly the domain items whose semi-decider accepts.

    Dovetails the domain enumerator with one semi-decider per item seen so
    far: position 0 of each rotation pumps the domain, the rest step the
    live children.  Every item is emitted at most once, at the step its
    semi-decider accepts.
    """

    kind = ENUMERATOR

    def __init__(self, family: Callable[[Any], Computation], domain: Computation):
        super().__init__()
        if domain.kind != ENUMERATOR:
            raise EngineError("domain must be an enumerator")
        self._family = family
        self._domain = domain
        self._live: list[tuple[Any, Computation]] = []
        self._next = 0  # 0 pumps the domain, i >= 1 steps child i-1

    def _step_impl(self) -> Any:
        if self._next == 0:
            item = self._domain.step()
            if item is not _NO_EMIT:
                self._live.append((item, self._family(item)))
            self._next = 1 if self._live else 0
            return _NO_EMIT
        index = self._next - 1
        item, child = self._live[index]
        child.step()
        if child.status == ACCEPTED:
            self._live.pop(index)
            # live[index] is now the next child in rotation, if any
            self._next = index + 1 if index < len(self._live) else 0
            return item
        self._next = self._next + 1 if self._next < len(self._live) else 0
        return _NO_EMIT


def semidecider_to_enumerator(
    family: Callable[[Any], Computation], domain: Computation
) -> Computation:
    return SemideciderEnumerator(family, domain)


# --- two-counter machines ---------------------------------------------------
#
# Text format, one instruction per line, 0-based line numbers:
#   inc 0|1
#   djz 0|1 <line>
#   halt
#
# djz decrements the counter if positive, else jumps to <line>.

INC = "inc"
DJZ = "djz"
HALT = "halt"


@dataclass(frozen=True)
class Machine:
    """A deterministic two-counter machine; halting parametrizes gadgets."""

    instructions: tuple[tuple, ...]

    def __post_init__(self) -> None:
        if not self.instructions:
            raise MachineError("empty program")
        for index, instr in enumerate(self.instructions):
            op = instr[0]
            if op == INC:
                if len(instr) != 2 or instr[1] not in (0, 1):
                    raise MachineError(f"line {index}: bad inc")
            elif op == DJZ:
                if len(instr) != 3 or instr[1] not in (0, 1):
                    raise MachineError(f"line {index}: bad djz")
                if not (0 <= instr[2] < len(self.instructions)):
                    raise MachineError(f"line {index}: jump target {instr[2]} out of range")
            elif op == HALT:
                if len(instr) != 1:
                    raise MachineError(f"line {index}: bad halt")
            else:
                raise MachineError(f"line {index}: unknown op {op!r}")


class MachineState:
    """Mutable run state; one step executes one instruction."""

    def __init__(self, machine: Machine):
        self.machine = machine
        self.pc = 0
        self.counters = [0, 0]
        self.halted = False

    def step(self) -> None:
        """Execute one instruction.  Running off the end idles forever."""
        if self.halted:
            return
        program = self.machine.instructions
        if self.pc >= len(program):
            return
        instr = program[self.pc]
        op = instr[0]
        if op == HALT:
            self.halted = True
        elif op == INC:
            self.counters[instr[1]] += 1
            self.pc += 1
        else:  # djz
            if self.counters[instr[1]] > 0:
                self.counters[instr[1]] -= 1
                self.pc += 1
            else:
                self.pc = instr[2]


def parse_machine(text: str) -> Machine:
    instructions: list[tuple] = []
    for lineno, raw in enumerate(text.splitlines()):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == INC and len(parts) == 2:
                instructions.append((INC, int(parts[1])))
            elif parts[0] == DJZ and len(parts) == 3:
                instructions.append((DJZ, int(parts[1]), int(parts[2])))
            elif parts[0] == HALT and len(parts) == 1:
                instructions.append((HALT,))
            else:
                raise MachineError(f"line {lineno}: cannot parse {raw!r}")
        except ValueError as exc:
            raise MachineError(f"line {lineno}: {exc}") from exc
    return Machine(tuple(instructions))


def format_machine(machine: Machine) -> str:
    lines = []
    for instr in machine.instructions:
        lines.append(" ".join(str(p) for p in instr))
    return "\n".join(lines) + "\n"


def machine_run(machine: Machine) -> Computation:
    """Semi-decider accepting iff the machine halts; one step per instruction.

    Instructions are executed in chunks internally, but acceptance fires on
    exactly the step of the halting instruction, so outcomes and step
    counts match one-instruction-per-step execution bit for bit.
    """

    def atoms() -> Iterator[tuple[int, Any]]:
        state = MachineState(machine)
        chunk = 1024
        while True:
            executed = 0
            while executed < chunk:
                state.step()
                executed += 1
                if state.halted:
                    yield (executed, ("accept", None))
                    return
            yield (executed, None)

    return AtomComputation(SEMIDECIDER, atoms())
