"""Marked quotient algorithms and what can be built from them.

A QuotientDescription semi-decides, for a candidate group given by its
r.e. description and a generator map, whether the map extends to a marked
epimorphism.  A WpiQuotientDescription is the always-terminating variant
whose candidates are given by word-problem deciders.  On top of these live
the marking-change construction, the lamplighter group's finite quotient
algorithm, the presentation extraction (plain and inside a variety), and
the Pickel separator for finite-quotient sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional, Sequence

from .engine import (
    DECIDER,
    SEMIDECIDER,
    Computation,
    EngineError,
    _NO_EMIT,
    dovetail_and,
    immediate_accept,
)
from .oracles import CayleyTable, Marking, WpDescription, finite_wp, group_table_atoms
from .presentations import (
    FinitePresentation,
    Law,
    RelatorEnumerator,
    ReDescription,
    RewrittenRe,
    consequences,
    variety_consequences,
)
from .words import (
    Substitution,
    Word,
    WordError,
    concat_reduced,
    shortlex_letters,
    substitute,
    substitute_letters,
)


@dataclass(frozen=True)
class ClassTag:
    """Name of the class a relative quotient algorithm is restricted to.

    The contract is documentation only: behavior on candidates outside the
    class is unspecified (typically non-termination), and no runtime check
    is possible in general.
    """

    name: str


class QuotientDescription:
    """Recipe: (candidate r.e. description, generator map) -> semi-decider."""

    arity: int
    class_tag: Optional[ClassTag] = None

    def make(
        self, candidate: ReDescription, f: Optional[Substitution] = None
    ) -> Computation:
        if f is None:
            f = Substitution.identity(self.arity)
        if f.source_arity != self.arity:
            raise WordError(
                f"map source arity {f.source_arity} != quotient arity {self.arity}"
            )
        if f.target_arity != candidate.arity:
            raise WordError(
                f"map target arity {f.target_arity} != candidate arity {candidate.arity}"
            )
        return self._make(candidate, f)

    def _make(self, candidate: ReDescription, f: Substitution) -> Computation:
        raise NotImplementedError


class WpiQuotientDescription:
    """Recipe: (candidate word-problem decider, generator map) -> decider."""

    arity: int
    class_tag: Optional[ClassTag] = None

    def make(
        self, candidate: WpDescription, f: Optional[Substitution] = None
    ) -> Computation:
        if f is None:
            f = Substitution.identity(self.arity)
        if f.source_arity != self.arity:
            raise WordError(
                f"map source arity {f.source_arity} != quotient arity {self.arity}"
            )
        if f.target_arity != candidate.arity:
            raise WordError(
                f"map target arity {f.target_arity} != candidate arity {candidate.arity}"
            )
        return self._make(candidate, f)

    def _make(self, candidate: WpDescription, f: Substitution) -> Computation:
        raise NotImplementedError


class _FpQuotient(QuotientDescription):
    """The quotient algorithm of a finitely presented group: the candidate
    must accept every (substituted) relator."""

    def __init__(self, presentation: FinitePresentation):
        self.presentation = presentation
        self.arity = presentation.arity

    def _make(self, candidate: ReDescription, f: Substitution) -> Computation:
        relators = self.presentation.relators
        if not relators:
            # a free group has every marked group as a quotient
            return immediate_accept()
        targets = []
        seen = set()
        for r in relators:
            t = substitute_letters(r.letters, f)
            if t not in seen:
                seen.add(t)
                targets.append(t)
        return candidate.query_all(targets)


def fp_quotient(presentation: FinitePresentation) -> QuotientDescription:
    return _FpQuotient(presentation)


class _SequentialAllDecider(Computation):
    """Drives child deciders in order; answers False at the first False,
    True once every child has answered True."""

    kind = DECIDER

    def __init__(self, factories: Sequence[Callable[[], Computation]]):
        super().__init__()
        self._factories = list(factories)
        self._index = 0
        self._child: Optional[Computation] = None

    def _step_impl(self) -> Any:
        if self._child is None:
            if self._index >= len(self._factories):
                self._answer(True)
                return _NO_EMIT
            self._child = self._factories[self._index]()
        self._child.step()
        if self._child.is_terminal:
            if self._child.answer is False:
                self._answer(False)
                return _NO_EMIT
            self._index += 1
            self._child = None
            if self._index >= len(self._factories):
                self._answer(True)
        return _NO_EMIT


class _FpWpiQuotient(WpiQuotientDescription):
    """Decides quotienthood by evaluating each relator through the
    candidate's word problem; total on total candidates."""

    def __init__(self, presentation: FinitePresentation):
        self.presentation = presentation
        self.arity = presentation.arity

    def _make(self, candidate: WpDescription, f: Substitution) -> Computation:
        factories = [
            (lambda r=r: candidate.decide(substitute(r, f)))
            for r in self.presentation.relators
        ]
        return _SequentialAllDecider(factories)


def fp_wpi_quotient(presentation: FinitePresentation) -> WpiQuotientDescription:
    return _FpWpiQuotient(presentation)


def _stream_targets(
    stream: Computation, f: Optional[Substitution]
) -> Iterator[tuple[int, Optional[tuple[int, ...]]]]:
    while True:
        item = stream.step()
        if item is _NO_EMIT:
            yield (1, None)
        else:
            letters = item.letters if f is None else substitute_letters(item.letters, f)
            yield (1 + len(letters), letters)


class _StreamQuotient(QuotientDescription):
    """Quotient semi-decider induced by a relator stream: the candidate
    must absorb every relator the stream ever emits.

    Sound for any stream; since no finite run can confirm an infinite
    relator family, it never accepts when the stream is infinite -- which
    is exactly why groups that are not finitely presented admit no marked
    quotient algorithm.
    """

    def __init__(self, rel: RelatorEnumerator):
        self.rel = rel
        self.arity = rel.arity

    def _make(self, candidate: ReDescription, f: Substitution) -> Computation:
        return candidate.query_all_growing(
            _stream_targets(self.rel.computation(), f)
        )


def quotient_from_relator_stream(rel: RelatorEnumerator) -> QuotientDescription:
    return _StreamQuotient(rel)


class _ChangedMarking(QuotientDescription):
    """Lemma-style marking change: a quotient algorithm over the marking S
    yields one over another marking T of the same group.

    Given mutually inverse expression lists (each S-generator as a T-word,
    each T-generator as an S-word), the produced semi-decider dovetails
    three obligations against a candidate (H, T):
      1. each T-generator of H is expressible in the images S' of the
         S-expressions (searched through H's r.e. description);
      2. the original algorithm accepts H remarked by S' (queries rewritten
         through the S-expressions);
      3. the induced endomorphism fixes each T-generator of H.
    All three terminate exactly on marked quotients.
    """

    def __init__(
        self,
        base: QuotientDescription,
        s_in_t: Substitution,
        t_in_s: Substitution,
    ):
        if s_in_t.source_arity != base.arity:
            raise WordError("s_in_t must express the base generators")
        if t_in_s.target_arity != base.arity:
            raise WordError("t_in_s must land in the base generators")
        if s_in_t.target_arity != t_in_s.source_arity:
            raise WordError("s_in_t and t_in_s do not describe the same new marking")
        self.base = base
        self.s_in_t = s_in_t
        self.t_in_s = t_in_s
        self.arity = t_in_s.source_arity

    def _expression_search(
        self, candidate: ReDescription, j: int
    ) -> Computation:
        s_in_t = self.s_in_t

        def targets() -> Iterator[tuple[int, Optional[tuple[int, ...]]]]:
            for v in shortlex_letters(self.base.arity):
                t = concat_reduced(substitute_letters(v, s_in_t), (-j,))
                yield (1 + len(v) + len(t), t)

        return candidate.query_any_growing(targets())

    def _make(self, candidate: ReDescription, f: Substitution) -> Computation:
        cand = candidate if _is_identity(f) else RewrittenRe(candidate, f)
        children = [
            self._expression_search(cand, j) for j in range(1, self.arity + 1)
        ]
        rebuilt = RewrittenRe(cand, self.s_in_t)
        children.append(self.base.make(rebuilt, Substitution.identity(self.base.arity)))
        fix_targets = []
        for j in range(1, self.arity + 1):
            expr = substitute_letters(self.t_in_s.images[j - 1].letters, self.s_in_t)
            fix_targets.append(concat_reduced(expr, (-j,)))
        children.append(cand.query_all(fix_targets))
        return dovetail_and(children)


def _is_identity(sub: Substitution) -> bool:
    return sub.source_arity == sub.target_arity and all(
        w.letters == (i,) for i, w in enumerate(sub.images, start=1)
    )


def change_marking(
    base: QuotientDescription, s_in_t: Substitution, t_in_s: Substitution
) -> QuotientDescription:
    return _ChangedMarking(base, s_in_t, t_in_s)


def _lamplighter_relators(order: int) -> list[Word]:
    """Relators of the finite wreath product: the lamplighter presentation
    truncated at shift order N (a = generator 1, toggle = generator 2)."""
    words = [Word((2, 2), 2), Word(tuple([1] * order), 2)]
    for n in range(order + 1):
        conj = tuple([-1] * n + [2] + [1] * n)
        letters = concat_reduced(
            concat_reduced((-2,), tuple(-l for l in reversed(conj))),
            concat_reduced((2,), conj),
        )
        if letters:
            words.append(Word(letters, 2))
    return words


class _LamplighterRun(Computation):
    """Find the exact order N of the image of the shift generator, then
    decide the relators of the order-N truncated presentation."""

    kind = DECIDER

    def __init__(self, candidate: WpDescription, f: Substitution):
        super().__init__()
        self._candidate = candidate
        self._f = f
        self._m = 1
        self._child = candidate.decide(substitute(Word((1,), 2), f))
        self._phase = "order"
        self._relator_check: Optional[Computation] = None

    def _step_impl(self) -> Any:
        if self._phase == "order":
            self._child.step()
            if self._child.is_terminal:
                if self._child.answer is True:
                    order = self._m
                    factories = [
                        (lambda r=r: self._candidate.decide(substitute(r, self._f)))
                        for r in _lamplighter_relators(order)
                    ]
                    self._relator_check = _SequentialAllDecider(factories)
                    self._phase = "relators"
                    self.certificate = {"order": order}
                else:
                    self._m += 1
                    self._child = self._candidate.decide(
                        substitute(Word(tuple([1] * self._m), 2), self._f)
                    )
            return _NO_EMIT
        check = self._relator_check
        check.step()
        if check.is_terminal:
            self._answer(check.answer, certificate=self.certificate)
        return _NO_EMIT


class _LamplighterFiniteQuotient(WpiQuotientDescription):
    def __init__(self) -> None:
        self.arity = 2
        self.class_tag = ClassTag("finite")

    def _make(self, candidate: WpDescription, f: Substitution) -> Computation:
        return _LamplighterRun(candidate, f)


def lamplighter_finite_quotient() -> WpiQuotientDescription:
    """The lamplighter group's finite marked quotient algorithm: candidates
    must be finite groups given by their word problem; the order search is
    unbounded on off-contract (infinite) candidates."""
    return _LamplighterFiniteQuotient()


class _ExtractionSearch(Computation):
    """Dovetail over truncation points of a relator stream: the first
    prefix whose consequences the quotient algorithm accepts is the
    answer.  Terminates iff the described group is finitely presented
    (relative to the candidate factory's closure notion)."""

    kind = DECIDER

    def __init__(
        self,
        stream: Computation,
        arity: int,
        candidate_factory: Callable[[tuple[Word, ...]], ReDescription],
        q: QuotientDescription,
    ):
        super().__init__()
        self._stream = stream
        self._arity = arity
        self._factory = candidate_factory
        self._q = q
        self._identity = Substitution.identity(arity)
        self._emitted: list[Word] = []
        self._children: list[Computation] = [
            q.make(candidate_factory(()), self._identity)
        ]
        self._prefixes: list[tuple[Word, ...]] = [()]
        self._next = 0  # 0 pumps the stream, i >= 1 steps child i-1

    def _step_impl(self) -> Any:
        if self._next == 0:
            item = self._stream.step()
            if item is not _NO_EMIT:
                self._emitted.append(item)
                prefix = tuple(self._emitted)
                self._prefixes.append(prefix)
                self._children.append(
                    self._q.make(self._factory(prefix), self._identity)
                )
            self._next = 1
            return _NO_EMIT
        child = self._children[self._next - 1]
        child.step()
        if child.is_terminal:
            prefix = self._prefixes[self._next - 1]
            self._answer(
                FinitePresentation(self._arity, prefix),
                certificate={"truncation": len(prefix)},
            )
            return _NO_EMIT
        self._next = self._next + 1 if self._next < len(self._children) else 0
        return _NO_EMIT


def extract_presentation(
    rel: RelatorEnumerator, q: QuotientDescription
) -> Computation:
    """Retrieve a finite presentation from an (r.e. stream, quotient
    algorithm) pair describing the same marked group; semi-decision that
    terminates iff the group is finitely presented."""
    if q.arity != rel.arity:
        raise WordError(f"stream arity {rel.arity} != quotient arity {q.arity}")

    def factory(prefix: tuple[Word, ...]) -> ReDescription:
        return consequences(FinitePresentation(rel.arity, prefix))

    return _ExtractionSearch(rel.computation(), rel.arity, factory, q)


def extract_in_variety(
    rel: RelatorEnumerator, q: QuotientDescription, laws: Sequence[Law]
) -> Computation:
    """As extract_presentation, but prefixes are closed inside the variety
    defined by the laws; the returned relator list is finite modulo the
    laws, which are carried alongside, not inside, the presentation."""
    if q.arity != rel.arity:
        raise WordError(f"stream arity {rel.arity} != quotient arity {q.arity}")
    laws = tuple(laws)

    def factory(prefix: tuple[Word, ...]) -> ReDescription:
        return variety_consequences(FinitePresentation(rel.arity, prefix), laws)

    return _ExtractionSearch(rel.computation(), rel.arity, factory, q)


class _PickelSeparator(Computation):
    """Accepts iff some finite group is a marked quotient of exactly one of
    the two groups (existentially over markings of the given arity).

    Enumerates Cayley tables of growing order; for each table computes
    whether either group has an accepted marking, and accepts on the first
    table where the answers differ.  With a bounded order schedule the
    search eventually idles with tables_done set.
    """

    kind = SEMIDECIDER

    def __init__(
        self,
        gq: WpiQuotientDescription,
        hq: WpiQuotientDescription,
        k: int,
        max_order: Optional[int] = None,
    ):
        super().__init__()
        if gq.arity != k or hq.arity != k:
            raise WordError("separator arity must match both quotient algorithms")
        self._gq = gq
        self._hq = hq
        self._k = k
        self._atoms = group_table_atoms(max_order)
        self._debt = 0
        self._pending_table: Optional[CayleyTable] = None
        self.tables_done = False
        self.tables_seen = 0
        self._table: Optional[CayleyTable] = None
        self._tuples: Optional[Iterator[tuple[int, ...]]] = None
        self._marking: Optional[Marking] = None
        self._side = "g"
        self._found = {"g": False, "h": False}
        self._child: Optional[Computation] = None
        self._identity = Substitution.identity(k)

    def _pump_tables(self) -> None:
        """One unit step of the table stream; may install the next table."""
        if self._debt == 0:
            try:
                cost, event = next(self._atoms)
            except StopIteration:
                self.tables_done = True
                return
            self._debt = cost
            self._pending_table = event[1] if event is not None else None
        self._debt -= 1
        if self._debt == 0 and self._pending_table is not None:
            self._start_table(self._pending_table)
            self._pending_table = None

    def _next_marking(self) -> None:
        """Advance one candidate tuple; install it when it generates."""
        if self._found["g"] and self._found["h"]:
            self._table = None  # both sides settled equal: next table
            return
        tup = next(self._tuples, None)
        if tup is None:
            # all markings tried: compare the two sides
            if self._found["g"] != self._found["h"]:
                self._accept(
                    certificate={
                        "order": self._table.order,
                        "table": self._table.table,
                        "quotient_of_first": self._found["g"],
                        "quotient_of_second": self._found["h"],
                    }
                )
            else:
                self._table = None
            return
        if len(self._table.generated_by(tup)) == self._table.order:
            self._marking = Marking(self._table, tup)
            self._side = "g" if not self._found["g"] else "h"
            self._child = None

    def _step_impl(self) -> Any:
        if self._table is None:
            self._pump_tables()
            return _NO_EMIT
        if self._marking is None:
            self._next_marking()
            return _NO_EMIT
        # decide the current side's quotient question for this marking
        if self._child is None:
            side_q = self._gq if self._side == "g" else self._hq
            self._child = side_q.make(finite_wp(self._marking), self._identity)
        self._child.step()
        if self._child.is_terminal:
            if self._child.answer is True:
                self._found[self._side] = True
            if self._found["g"] and self._found["h"]:
                self._table = None  # settled equal: move on
            elif self._side == "g" and not self._found["h"]:
                self._side = "h"
                self._child = None
            else:
                self._marking = None  # next candidate tuple
        return _NO_EMIT

    def _start_table(self, table: CayleyTable) -> None:
        self._table = table
        self.tables_seen += 1
        self._tuples = itertools.product(range(table.order), repeat=self._k)
        self._marking = None
        self._found = {"g": False, "h": False}
        self._child = None


def pickel_separator(
    gq: WpiQuotientDescription,
    hq: WpiQuotientDescription,
    k: int,
    max_order: Optional[int] = None,
) -> Computation:
    """Semi-decider that terminates iff the two groups' sets of finite
    quotients differ (existential over markings of arity k per table)."""
    return _PickelSeparator(gq, hq, k, max_order)
