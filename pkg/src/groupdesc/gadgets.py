"""Machine-parametrized description families from the undecidability proofs.

Each gadget turns a two-counter machine into a group description whose
defined group depends on whether the machine halts.  The constructions are
exhibited, not the impossibility theorems they power: correctness is
checked against a fixed fleet of machines of known halting status, and
non-halting behavior is only ever asserted as budget exhaustion.
"""

from __future__ import annotations

from typing import Any, Iterator, Optional, Sequence

from .engine import (
    DECIDER,
    ENUMERATOR,
    SEMIDECIDER,
    AtomComputation,
    Computation,
    Machine,
    MachineState,
    _NO_EMIT,
    parse_machine,
)
from .oracles import WpDescription
from .presentations import (
    ClosureState,
    CoReDescription,
    FinitePresentation,
    RelatorEnumerator,
    ReDescription,
)
from .quotients import QuotientDescription
from .words import Substitution, Word, WordError, substitute_letters


def _fleet() -> dict[str, Machine]:
    def halt_at(p: int) -> Machine:
        return parse_machine("inc 0\n" * (p - 1) + "halt")

    return {
        "halt-1": halt_at(1),
        "halt-3": halt_at(3),
        "halt-5": halt_at(5),
        "halt-6": halt_at(6),
        "halt-17": halt_at(17),
        "loop": parse_machine("djz 0 0"),
        "slow-loop": parse_machine("inc 0\ndjz 1 0"),
    }


#: Machines of known halting status used to validate every gadget.
FLEET: dict[str, Machine] = _fleet()


def fleet_machine(name: str) -> Machine:
    try:
        return FLEET[name]
    except KeyError:
        raise WordError(f"unknown fleet machine {name!r}; have {sorted(FLEET)}") from None


def trivial_or_z2(machine: Machine) -> RelatorEnumerator:
    """Relator stream on one generator: a^2 first, then one machine
    instruction per step, and the relator a exactly when the machine
    halts.  Defines the trivial group if the machine halts, the group of
    order two otherwise."""

    def factory() -> Computation:
        def atoms() -> Iterator[tuple[int, Any]]:
            yield (1, ("emit", Word((1, 1), 1)))
            state = MachineState(machine)
            while True:
                state.step()
                if state.halted:
                    yield (1, ("emit", Word((1,), 1)))
                    return
                yield (1, None)

        return AtomComputation(ENUMERATOR, atoms())

    return RelatorEnumerator(1, factory)


def quotient_pair(
    machine: Machine, p_g: FinitePresentation, h_extra: Sequence[Word]
) -> RelatorEnumerator:
    """Relator stream that enumerates the consequences of the first
    presentation while the machine runs and additionally closes over the
    extra relators once it halts.  Contract: the relators together present
    the quotient over the same generators (strictness is not checkable)."""
    for w in h_extra:
        if w.arity != p_g.arity:
            raise WordError("extra relator arity mismatch")
    extra = tuple(h_extra)

    def factory() -> Computation:
        def atoms() -> Iterator[tuple[int, Any]]:
            state = ClosureState(p_g.arity, (r.letters for r in p_g.relators))
            closure = state.atoms()
            mstate = MachineState(machine)
            running = True
            while True:
                if running:
                    mstate.step()
                    if mstate.halted:
                        for w in extra:
                            state.add_relator(w.letters)
                        running = False
                    yield (1, None)
                cost, w = next(closure)
                yield (cost, ("emit", Word(w, p_g.arity)) if w is not None else None)

        return AtomComputation(ENUMERATOR, atoms())

    return RelatorEnumerator(p_g.arity, factory)


class _CoReGadget(CoReDescription):
    def __init__(self, machine: Machine):
        self.machine = machine
        self.arity = 1

    def _accepts(self, w: Word) -> Computation:
        k = sum(w.letters)
        machine = self.machine

        def atoms() -> Iterator[tuple[int, Any]]:
            if k == 0:
                while True:
                    yield (4096, None)  # the identity is never non-identity
            state = MachineState(machine)
            chunk = 1024
            halted = False
            while not halted:
                executed = 0
                while executed < chunk:
                    state.step()
                    executed += 1
                    if state.halted:
                        halted = True
                        break
                if not halted:
                    yield (executed, None)
                elif k % 2 == 1:
                    yield (executed, ("accept", None))
                    return
                else:
                    yield (executed, None)
            while True:
                yield (4096, None)  # even powers are the identity in Z/2

        return AtomComputation(SEMIDECIDER, atoms())


def co_re_gadget(machine: Machine) -> CoReDescription:
    """Co-r.e. description on one generator: recognizes the non-identity
    elements of the order-two group if the machine halts; recognizes
    nothing (the trivial group) if it runs forever."""
    return _CoReGadget(machine)


class _QuotientAlgoRun(Computation):
    """Accept if the candidate proves itself trivial (accepts a); once the
    machine halts, also accept candidates that absorb a^2."""

    kind = SEMIDECIDER

    def __init__(self, candidate: ReDescription, f: Substitution, machine: Machine):
        super().__init__()
        self._query_a = candidate.query_all([substitute_letters((1,), f)])
        self._query_a2: Optional[Computation] = None
        self._candidate = candidate
        self._f = f
        self._mstate = MachineState(machine)
        self._slot = 0

    def _step_impl(self) -> Any:
        slots = 2 if self._query_a2 is None else 3
        slot = self._slot
        self._slot = (slot + 1) % slots
        if slot == 0:
            self._query_a.step()
            if self._query_a.is_terminal:
                self._accept(certificate="trivial-branch")
            return _NO_EMIT
        if slot == 1:
            if not self._mstate.halted:
                self._mstate.step()
                if self._mstate.halted:
                    self._query_a2 = self._candidate.query_all(
                        [substitute_letters((1, 1), self._f)]
                    )
            return _NO_EMIT
        self._query_a2.step()
        if self._query_a2.is_terminal:
            self._accept(certificate="order-two-branch")
        return _NO_EMIT


class _QuotientAlgoGadget(QuotientDescription):
    def __init__(self, machine: Machine):
        self.machine = machine
        self.arity = 1

    def _make(self, candidate: ReDescription, f: Substitution) -> Computation:
        return _QuotientAlgoRun(candidate, f, self.machine)


def quotient_algo_gadget(machine: Machine) -> QuotientDescription:
    """Marked quotient algorithm on one generator: the quotient algorithm
    of the order-two group if the machine halts, of the trivial group
    otherwise."""
    return _QuotientAlgoGadget(machine)


class _LockhartWp(WpDescription):
    def __init__(self, machine: Machine):
        self.machine = machine
        self.arity = 1

    def _decider(self, w: Word) -> Computation:
        k = sum(w.letters)
        machine = self.machine

        def atoms() -> Iterator[tuple[int, Any]]:
            if k == 0:
                yield (1 + len(w.letters), ("answer", True))
                return
            state = MachineState(machine)
            halted_at = None
            for step in range(1, abs(k) + 1):
                state.step()
                if state.halted:
                    halted_at = step
                    break
                yield (1, None)
            if halted_at is None:
                yield (1, ("answer", False))
            else:
                yield (1, ("answer", k % halted_at == 0))

        return AtomComputation(DECIDER, atoms())


def lockhart_wp_gadget(machine: Machine) -> WpDescription:
    """Word problem description on one generator: simulates the machine
    for |k| steps on the query a^k; if it halts at step p within the run,
    behaves as the word problem of Z/pZ, otherwise answers non-identity.
    The answers cohere into the word problem of Z/pZ (machine halts at
    step p) or of Z (machine never halts)."""
    return _LockhartWp(machine)


def freeze_gadget(machine: Machine, rel: RelatorEnumerator) -> RelatorEnumerator:
    """Relator stream that forwards the inner stream while the machine
    runs; on halt it freezes the prefix emitted so far and switches to
    enumerating that prefix's consequence closure.  If the machine never
    halts the output equals the inner stream position by position."""

    def factory() -> Computation:
        def atoms() -> Iterator[tuple[int, Any]]:
            mstate = MachineState(machine)
            inner = rel.computation()
            prefix: list[Word] = []
            while True:
                mstate.step()
                if mstate.halted:
                    break
                yield (1, None)
                item = inner.step()
                if item is not _NO_EMIT:
                    prefix.append(item)
                    yield (1, ("emit", item))
                else:
                    yield (1, None)
            state = ClosureState(rel.arity, (w.letters for w in prefix))
            yield (1, ("emit", Word((), rel.arity)))
            for cost, w in state.atoms():
                yield (cost, ("emit", Word(w, rel.arity)) if w is not None else None)

        return AtomComputation(ENUMERATOR, atoms())

    return RelatorEnumerator(rel.arity, factory)
