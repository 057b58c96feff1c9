"""Isomorphism and recognition procedures.

Marked isomorphism of finite presentations is two quotient checks run
against each other; abstract isomorphism blindly searches substitution
pairs and verifies four obligations per pair.  Kuznetsov's word problem
for simple groups races "w is a relation" against "adding w kills the
group", and McKinsey's word problem for residually finite groups races
the consequence search against a hunt for a finite quotient separating w.
"""

from __future__ import annotations

import itertools
from typing import Any, Callable, Iterator, Optional

from .engine import (
    ACCEPTED,
    DECIDER,
    SEMIDECIDER,
    Computation,
    _NO_EMIT,
    dovetail_and,
    race,
)
from .oracles import CayleyTable, Marking, WpDescription, finite_wp, group_table_atoms
from .presentations import (
    CoReDescription,
    FinitePresentation,
    RelatorEnumerator,
    ReDescription,
    _StreamRe,
    consequences,
    re_from_enumerator,
)
from .quotients import fp_quotient, fp_wpi_quotient
from .words import (
    Substitution,
    Word,
    WordError,
    concat_reduced,
    invert_letters,
    substitute_letters,
)


def marked_iso_semidecider(
    p1: FinitePresentation, p2: FinitePresentation
) -> Computation:
    """Accepts iff the two presentations define the same marked group:
    each group's quotient algorithm must accept the other's description."""
    if p1.arity != p2.arity:
        raise WordError(f"arity mismatch: {p1.arity} vs {p2.arity}")
    return dovetail_and(
        [
            fp_quotient(p1).make(consequences(p2)),
            fp_quotient(p2).make(consequences(p1)),
        ]
    )


class _GrowingRace(Computation):
    """Accepts when any child from a (possibly infinite) labeled stream
    accepts; the winning label is the certificate."""

    kind = SEMIDECIDER

    def __init__(self, stream: Iterator[tuple[Any, Callable[[], Computation]]]):
        super().__init__()
        self._stream = stream
        self._children: list[tuple[Any, Computation]] = []
        self._next = 0  # 0 spawns from the stream, i >= 1 steps child i-1

    def _step_impl(self) -> Any:
        if self._next == 0:
            entry = next(self._stream, None)
            if entry is not None:
                label, factory = entry
                self._children.append((label, factory()))
            self._next = 1 if self._children else 0
            return _NO_EMIT
        label, child = self._children[self._next - 1]
        child.step()
        if child.status == ACCEPTED:
            self._accept(certificate=label)
            return _NO_EMIT
        self._next = self._next + 1 if self._next < len(self._children) else 0
        return _NO_EMIT


def _substitution_pairs(
    k1: int, k2: int
) -> Iterator[tuple[Substitution, Substitution]]:
    """All pairs (phi: gens1 -> words over gens2, psi: gens2 -> words over
    gens1), fair by total shortlex rank of all images."""
    from .words import _ShortlexPool

    pool1 = _ShortlexPool(k2)  # images of phi live over arity k2
    pool2 = _ShortlexPool(k1)
    for total in itertools.count(0):
        for ranks in itertools.product(range(total + 1), repeat=k1 + k2):
            if sum(ranks) != total:
                continue
            phi = Substitution(
                k1, tuple(Word(pool1.get(r), k2) for r in ranks[:k1])
            )
            psi = Substitution(
                k2, tuple(Word(pool2.get(r), k1) for r in ranks[k1:])
            )
            yield phi, psi


def abstract_iso_semidecider(
    p1: FinitePresentation, p2: FinitePresentation
) -> Computation:
    """Accepts iff the presentations define the same abstract group.

    For each substitution pair (phi, psi), four obligations are dovetailed:
    phi maps the first group's relators to relations of the second, psi
    vice versa, and the two composites fix each generator modulo the
    respective groups.  A pair passing all four is a mutually inverse pair
    of isomorphisms and is returned as the certificate.
    """
    d1 = consequences(p1)
    d2 = consequences(p2)
    gens1 = [(i,) for i in range(1, p1.arity + 1)]
    gens2 = [(j,) for j in range(1, p2.arity + 1)]

    def checker(phi: Substitution, psi: Substitution) -> Callable[[], Computation]:
        def build() -> Computation:
            obligations = []
            if p1.relators:
                obligations.append(
                    d2.query_all(
                        [substitute_letters(r.letters, phi) for r in p1.relators]
                    )
                )
            if p2.relators:
                obligations.append(
                    d1.query_all(
                        [substitute_letters(r.letters, psi) for r in p2.relators]
                    )
                )
            obligations.append(
                d1.query_all(
                    [
                        concat_reduced(
                            substitute_letters(substitute_letters(g, phi), psi),
                            invert_letters(g),
                        )
                        for g in gens1
                    ]
                )
            )
            obligations.append(
                d2.query_all(
                    [
                        concat_reduced(
                            substitute_letters(substitute_letters(g, psi), phi),
                            invert_letters(g),
                        )
                        for g in gens2
                    ]
                )
            )
            return dovetail_and(obligations)

        return build

    stream = (
        ((phi, psi), checker(phi, psi))
        for phi, psi in _substitution_pairs(p1.arity, p2.arity)
    )
    return _GrowingRace(stream)


class _KuznetsovWp(WpDescription):
    """Word problem for a nontrivial simple group given by a relator
    stream: races the relation search against killing the group with w."""

    def __init__(self, rel: RelatorEnumerator):
        self.rel = rel
        self.arity = rel.arity

    def _decider(self, w: Word) -> Computation:
        gens = [(i,) for i in range(1, self.arity + 1)]
        relation_branch = re_from_enumerator(self.rel).accepts(w)
        killed_branch = _StreamRe(self.rel, seeds=(w,)).query_all(gens)
        return race([(True, relation_branch), (False, killed_branch)])


def kuznetsov_wp(rel: RelatorEnumerator, arity: Optional[int] = None) -> WpDescription:
    """Uniform word problem for nontrivial simple groups described by
    recursive presentations.  Contract: the stream presents a nontrivial
    simple group (for the trivial group the killing branch would win
    vacuously); off-contract queries may never terminate."""
    if arity is not None and arity != rel.arity:
        raise WordError(f"arity {arity} != stream arity {rel.arity}")
    return _KuznetsovWp(rel)


class _McKinseyRun(Computation):
    """Hunt for a finite quotient in which the query word survives.

    Enumerates Cayley tables, then generating k-tuples per table; each
    marking is first checked to be a quotient (every relator evaluates to
    the identity) and then the query word is evaluated: acceptance means
    some finite quotient certifies w != 1.
    """

    kind = SEMIDECIDER

    def __init__(self, presentation: FinitePresentation, letters: tuple[int, ...]):
        super().__init__()
        self._presentation = presentation
        self._wpi = fp_wpi_quotient(presentation)
        self._word = Word(letters, presentation.arity)
        self._k = presentation.arity
        self._atoms = group_table_atoms(None)
        self._debt = 0
        self._pending: Optional[CayleyTable] = None
        self._table: Optional[CayleyTable] = None
        self._table_index = -1
        self._tuples: Optional[Iterator[tuple[int, ...]]] = None
        self._marking: Optional[Marking] = None
        self._child: Optional[Computation] = None
        self._phase = "quotient"
        self._identity = Substitution.identity(self._k)

    def _pump_tables(self) -> None:
        if self._debt == 0:
            cost, event = next(self._atoms)
            self._debt = cost
            self._pending = event[1] if event is not None else None
        self._debt -= 1
        if self._debt == 0 and self._pending is not None:
            self._table = self._pending
            self._table_index += 1
            self._tuples = itertools.product(range(self._table.order), repeat=self._k)
            self._marking = None
            self._pending = None

    def _step_impl(self) -> Any:
        if self._table is None:
            self._pump_tables()
            return _NO_EMIT
        if self._marking is None:
            tup = next(self._tuples, None)
            if tup is None:
                self._table = None
                return _NO_EMIT
            if len(self._table.generated_by(tup)) == self._table.order:
                self._marking = Marking(self._table, tup)
                self._child = self._wpi.make(finite_wp(self._marking), self._identity)
                self._phase = "quotient"
            return _NO_EMIT
        self._child.step()
        if not self._child.is_terminal:
            return _NO_EMIT
        if self._phase == "quotient":
            if self._child.answer is True:
                self._phase = "evaluate"
                self._child = finite_wp(self._marking).decide(self._word)
            else:
                self._marking = None
            return _NO_EMIT
        # evaluate: answer True means the image is the identity
        if self._child.answer is False:
            self._accept(
                certificate={
                    "table_index": self._table_index,
                    "order": self._table.order,
                    "table": self._table.table,
                    "marking": self._marking.tuple_,
                }
            )
        else:
            self._marking = None
        return _NO_EMIT


class _McKinseyNontrivial(CoReDescription):
    def __init__(self, presentation: FinitePresentation):
        self.presentation = presentation
        self.arity = presentation.arity

    def _accepts(self, w: Word) -> Computation:
        return _McKinseyRun(self.presentation, w.letters)


def mckinsey_nontrivial(
    presentation: FinitePresentation, k: Optional[int] = None
) -> CoReDescription:
    """Semi-decider for non-identity words via finite quotients; accepts
    exactly the non-identity words when the group is residually finite."""
    if k is not None and k != presentation.arity:
        raise WordError(f"arity {k} != presentation arity {presentation.arity}")
    return _McKinseyNontrivial(presentation)


class _McKinseyWp(WpDescription):
    def __init__(self, presentation: FinitePresentation):
        self.presentation = presentation
        self.arity = presentation.arity
        self._co = _McKinseyNontrivial(presentation)
        self._re = consequences(presentation)

    def _decider(self, w: Word) -> Computation:
        return race([(True, self._re.accepts(w)), (False, self._co.accepts(w))])


def mckinsey_wp(presentation: FinitePresentation) -> WpDescription:
    """Word problem for a finitely presented residually finite group:
    races the consequence search against the finite-quotient hunt.
    Off-contract (non residually finite) queries may never terminate."""
    return _McKinseyWp(presentation)
