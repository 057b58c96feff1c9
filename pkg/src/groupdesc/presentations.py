"""Presentations and their recursive-enumeration descriptions.

An ReDescription is a recipe for the semi-decider that accepts exactly the
words equal to the identity in a marked group (equivalently, the normal
closure of a relator set), together with an enumerator view of that set.
Recipes are immutable; every query or enumerator instantiates fresh,
independent computation state, so runs replay deterministically.

The closure search keeps a growing pool of conjugates u r^e u^-1 (relators
r in rotation, conjugators u in shortlex order) and a growing set of
discovered consequences, closed under right multiplication by pool
elements.  Every product of conjugates is reached at some finite stage, so
the accepted set is exactly the normal closure in the limit.  Step costs
are proportional to the letters actually processed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence

from .engine import (
    ENUMERATOR,
    SEMIDECIDER,
    AtomComputation,
    Computation,
    enumerator_from_iterable,
    semidecider_to_enumerator,
)
from .words import (
    Substitution,
    Word,
    WordError,
    _ShortlexPool,
    concat_reduced,
    format_word,
    invert_letters,
    parse_word,
    shortlex_words,
    substitute,
    substitute_letters,
)

# Products per pool-growth step; growth alternates between pumping the
# relator source (if any) and adding the next conjugate.
_GROW_EVERY = 6
# Engine atoms per pump of a growing target stream.
_PUMP_EVERY = 4
# Unit steps granted to a relator source per pump (stop early on emission).
_PUMP_BURST = 16
# Newly discovered words are eagerly paired with this many leading pool ops.
_EAGER_POOL = 64


@dataclass(frozen=True)
class FinitePresentation:
    """Arity plus a finite relator list."""

    arity: int
    relators: tuple[Word, ...]

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise WordError("arity must be positive")
        for r in self.relators:
            if r.arity != self.arity:
                raise WordError(f"relator arity {r.arity} != presentation arity {self.arity}")

    def canonical(self) -> "FinitePresentation":
        """Shortlex-sorted, deduplicated relator list."""
        seen = []
        for r in sorted(self.relators, key=Word.shortlex_key):
            if not seen or seen[-1] != r:
                seen.append(r)
        return FinitePresentation(self.arity, tuple(seen))

    def __repr__(self) -> str:
        return f"FinitePresentation({format_presentation(self)!r})"


def _split_top_level(text: str) -> list[str]:
    # split on commas not nested in [] or ()
    parts, depth, current = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def parse_presentation(text: str) -> FinitePresentation:
    """Parse ``< a, b | a^2, [a,b] >``; ``< a, b | >`` is free."""
    stripped = text.strip()
    if not (stripped.startswith("<") and stripped.endswith(">")):
        raise WordError("presentation must be enclosed in < >")
    body = stripped[1:-1]
    if "|" not in body:
        raise WordError("presentation needs a | between generators and relators")
    gen_part, rel_part = body.split("|", 1)
    names = [g.strip() for g in gen_part.split(",") if g.strip()]
    if not names:
        raise WordError("presentation needs at least one generator")
    for index, name in enumerate(names):
        if name != chr(ord("a") + index):
            raise WordError(
                f"generators must be consecutive letters from 'a', got {name!r}"
            )
    arity = len(names)
    relators = []
    for chunk in _split_top_level(rel_part):
        chunk = chunk.strip()
        if chunk:
            relators.append(parse_word(chunk, arity))
    return FinitePresentation(arity, tuple(relators))


def format_presentation(p: FinitePresentation) -> str:
    gens = ", ".join(chr(ord("a") + i) for i in range(p.arity))
    rels = ", ".join(format_word(r) for r in p.relators)
    return f"< {gens} | {rels} >" if rels else f"< {gens} | >"


@dataclass(frozen=True)
class Law:
    """A universally quantified identity W(x_1..x_n) = 1 defining a variety."""

    variable_count: int
    word: Word

    def __post_init__(self) -> None:
        if self.word.arity != self.variable_count:
            raise WordError("law word arity must equal its variable count")

    def instantiate(self, args: Sequence[Word]) -> Word:
        return substitute(self.word, Substitution(self.variable_count, tuple(args)))


def law_instances(laws: Sequence[Law], arity: int) -> Iterator[Word]:
    """All law instances law(w_1..w_n), fair over shortlex tuples of words.

    Tuples are enumerated by total shortlex rank, laws interleaved at each
    total; identity instances are skipped (they add nothing to a closure).
    """
    pool = _ShortlexPool(arity)
    for total in itertools.count(0):
        for law in laws:
            n = law.variable_count
            for ranks in itertools.product(range(total + 1), repeat=n):
                if sum(ranks) != total:
                    continue
                args = tuple(Word(pool.get(r), arity) for r in ranks)
                instance = law.instantiate(args)
                if instance.letters:
                    yield instance


@dataclass(frozen=True)
class RelatorEnumerator:
    """A recipe for an enumerator of relator words of a fixed arity.

    The factory builds a fresh, independent enumerator computation each
    time, so descriptions built on a stream can be re-instantiated and
    replayed.
    """

    arity: int
    factory: Callable[[], Computation]

    def computation(self) -> Computation:
        return self.factory()

    @staticmethod
    def from_words(arity: int, relators: Sequence[Word]) -> "RelatorEnumerator":
        rels = tuple(relators)
        for r in rels:
            if r.arity != arity:
                raise WordError(f"relator arity {r.arity} != {arity}")
        return RelatorEnumerator(arity, lambda: enumerator_from_iterable(rels))


class ClosureState:
    """Normal-closure search state: pool of conjugates, discovered set.

    One atom is either a growth step (pump the relator source, or add the
    two conjugates u r^{+-1} u^-1 for the next (relator, conjugator) pair)
    or a product step (multiply one discovered element by one pool
    element).  Costs count letters processed, so budgets track real work.
    """

    def __init__(
        self,
        arity: int,
        relators: Iterable[tuple[int, ...]],
        source: Optional[Computation] = None,
        follow: Optional["ClosureState"] = None,
        seed: tuple[int, ...] = (),
    ):
        self.arity = arity
        self.relators: list[tuple[int, ...]] = []
        self._relator_set: set[tuple[int, ...]] = set()
        self.source = source
        self._conjugators = _ShortlexPool(arity)
        self._next_rank: list[int] = []
        self._rel_ptr = 0
        # pool ops: ("mul", g) multiplies on the right by the conjugate g;
        # ("conj", s) conjugates by the single generator letter s.  The
        # closure is conjugation-invariant, so the conj ops stay inside it
        # while letting the search rotate words cheaply.
        #
        # A follower state explores the orbit of its seed word under the
        # owner's (append-only, shared) pool: every op preserves
        # membership of the coset, so the seed lies in the closure iff
        # the follower's orbit meets the owner's discovered set.
        self._owner = follow
        self.pool: list[tuple[str, tuple[int, ...]]]
        self.pool = [] if follow is None else follow.pool
        self._pool_known = 0
        self._pool_set: set[tuple[int, ...]] = set()
        self._next_d: list[int] = []
        # Pairs (discovered word, pool op) are processed best-first by
        # total letter count; finitely many words exist under any length
        # bound, so every pair is eventually processed and the search
        # stays complete.  Side A walks, per pool op, the discovered list
        # in commit order (the completeness backbone); side B walks, per
        # newly committed word, the first _EAGER_POOL ops, so fresh short
        # words interact with the core ops without waiting behind the
        # backlog.  A pair hit by both sides just rediscovers a known
        # word.
        self._heap: list[tuple[int, int, int]] = []
        self._dormant: list[int] = []
        self._b_cursor: list[int] = []
        self._b_dormant: list[int] = []
        self.d_list: list[tuple[int, ...]] = []
        self.d_set: set[tuple[int, ...]] = set()
        self._since_grow = _GROW_EVERY  # start by growing
        self._grow_toggle = False
        self._pending_inverse: Optional[tuple[int, ...]] = None
        if follow is None:
            for i in range(1, arity + 1):
                for s in (i, -i):
                    self.pool.append(("conj", (s,)))
            for r in relators:
                self.add_relator(r)
        self._commit_new(seed)
        self._sync_pool()

    def _sync_pool(self) -> None:
        fresh = self._pool_known < len(self.pool)
        while self._pool_known < len(self.pool):
            self._next_d.append(0)
            self._push_a(self._pool_known)
            self._pool_known += 1
        if fresh and self._b_dormant:
            for i in self._b_dormant:
                self._push_b(i)
            self._b_dormant.clear()

    def add_relator(self, letters: tuple[int, ...]) -> None:
        if letters and letters not in self._relator_set:
            self._relator_set.add(letters)
            self.relators.append(letters)
            self._next_rank.append(0)

    def _push_a(self, j: int) -> None:
        if j < _EAGER_POOL:
            return  # side B owns pairs against the leading pool ops
        key = len(self.pool[j][1]) + len(self.d_list[self._next_d[j]])
        heappush(self._heap, (key, 0, j))

    def _push_b(self, i: int) -> None:
        cursor = self._b_cursor[i]
        if cursor >= _EAGER_POOL:
            return
        if cursor >= len(self.pool):
            self._b_dormant.append(i)
            return
        key = len(self.d_list[i]) + len(self.pool[cursor][1])
        heappush(self._heap, (key, 1, i))

    def _add_pool(self, conj: tuple[int, ...]) -> None:
        if conj and conj not in self._pool_set:
            self._pool_set.add(conj)
            self.pool.append(("mul", conj))
            self._sync_pool()

    def _pop_pair(self) -> Optional[tuple[tuple[int, ...], tuple[str, tuple[int, ...]]]]:
        """Next (word, op) pair in key order, advancing the owning cursor."""
        while self._heap:
            _, side, idx = heappop(self._heap)
            if side == 0:
                if self._next_d[idx] >= len(self.d_list):
                    self._dormant.append(idx)
                    continue
                x = self.d_list[self._next_d[idx]]
                self._next_d[idx] += 1
                if self._next_d[idx] < len(self.d_list):
                    self._push_a(idx)
                else:
                    self._dormant.append(idx)
                return x, self.pool[idx]
            cursor = self._b_cursor[idx]
            if cursor >= len(self.pool):
                self._b_dormant.append(idx)
                continue
            op = self.pool[cursor]
            self._b_cursor[idx] = cursor + 1
            self._push_b(idx)
            return self.d_list[idx], op
        return None

    def _commit_new(self, w: tuple[int, ...]) -> None:
        self.d_set.add(w)
        self.d_list.append(w)
        self._b_cursor.append(0)
        self._push_b(len(self.d_list) - 1)
        if self._dormant:
            for dj in self._dormant:
                self._push_a(dj)
            self._dormant.clear()

    def _commit(self, w: tuple[int, ...]) -> bool:
        if w in self.d_set:
            return False
        self._commit_new(w)
        return True

    def next_atom(self) -> tuple[int, Optional[tuple[int, ...]]]:
        """One unit of closure work: (cost, newly discovered word or None)."""
        pending = self._pending_inverse
        if pending is not None:
            self._pending_inverse = None
            return (1 + len(pending) // 4, pending)
        if self._owner is not None:
            self._sync_pool()
            pair = self._pop_pair()
            if pair is None:
                return (1, None)  # waiting for the owner's pool to grow
        else:
            pair = None if self._since_grow >= _GROW_EVERY else self._pop_pair()
            if pair is None:
                cost = self._grow()
                if cost:
                    self._since_grow = 0
                    return (cost, None)
                pair = self._pop_pair()
                if pair is None:
                    return (64, None)  # permanently idle (free presentation)
        self._since_grow += 1
        x, (kind, g) = pair
        if kind == "mul":
            w = concat_reduced(x, g)
        else:
            w = concat_reduced(concat_reduced(g, x), (-g[0],))
        cost = 1 + (len(x) + len(g)) // 4
        if not self._commit(w):
            return (cost, None)
        # the closure is inverse-closed, so the inverse is a member too;
        # committing it directly shortens many product chains
        w_inv = invert_letters(w)
        if self._commit(w_inv):
            self._pending_inverse = w_inv
        return (cost, w)

    def atoms(self) -> Iterator[tuple[int, Optional[tuple[int, ...]]]]:
        """Yield (cost, newly discovered element or None) forever."""
        while True:
            yield self.next_atom()

    def _grow(self) -> int:
        """One growth step; returns its cost, or 0 if nothing can grow."""
        pump = self.source is not None and (self._grow_toggle or not self.relators)
        self._grow_toggle = not self._grow_toggle
        if pump:
            # burst so that sources which are themselves closure streams
            # are not starved by the work happening at this level
            from .engine import _NO_EMIT  # local to avoid exporting the sentinel

            steps = 0
            while steps < _PUMP_BURST:
                item = self.source.step()
                steps += 1
                if item is not _NO_EMIT:
                    if not isinstance(item, Word) or item.arity != self.arity:
                        raise WordError(
                            "relator source must emit words of the closure arity"
                        )
                    self.add_relator(item.letters)
                    break
            return steps
        if not self.relators:
            return 0
        index = self._rel_ptr % len(self.relators)
        self._rel_ptr = (index + 1) % len(self.relators)
        rank = self._next_rank[index]
        self._next_rank[index] = rank + 1
        u = self._conjugators.get(rank)
        r = self.relators[index]
        u_inv = invert_letters(u)
        for signed in (r, invert_letters(r)):
            self._add_pool(concat_reduced(concat_reduced(u, signed), u_inv))
        return 1 + 2 * len(u) + len(r)


GrowingTargets = Iterator[tuple[int, Optional[tuple[int, ...]]]]


def _closure_query_atoms(
    state: ClosureState,
    static_targets: Sequence[tuple[int, ...]],
    growing: Optional[GrowingTargets],
    mode: str,
) -> Iterator[tuple[int, Any]]:
    """Semi-decide membership of a growing target stream in the closure.

    mode "all": accept once every target (static plus all pumped ones, the
    stream permitting) has been discovered; a growing stream that never
    ends therefore never accepts, which is exactly the honest behavior for
    an infinite relator family.  mode "any": accept on the first hit.
    """
    targets: set[tuple[int, ...]] = set()
    remaining: set[tuple[int, ...]] = set()
    for t in static_targets:
        targets.add(t)
        if t not in state.d_set:
            remaining.add(t)
    if mode == "any" and len(remaining) < len(targets):
        yield (1, ("accept", None))
        return
    growing_done = growing is None
    if mode == "all" and not remaining and growing_done:
        yield (1, ("accept", None))
        return
    atoms = state.atoms()
    pump_in = 0
    while True:
        if not growing_done and pump_in <= 0:
            pump_in = _PUMP_EVERY
            try:
                cost, t = next(growing)
            except StopIteration:
                growing_done = True
                if mode == "all" and not remaining:
                    yield (1, ("accept", None))
                    return
                continue
            if t is not None and t not in targets:
                targets.add(t)
                if t in state.d_set:
                    if mode == "any":
                        yield (cost, ("accept", t))
                        return
                else:
                    remaining.add(t)
            yield (cost, None)
            continue
        pump_in -= 1
        cost, w = next(atoms)
        if w is not None and w in targets:
            if mode == "any":
                yield (cost, ("accept", w))
                return
            remaining.discard(w)
            if not remaining and growing_done:
                yield (cost, ("accept", None))
                return
        yield (cost, None)


def _meet_query_atoms(
    state: ClosureState,
    static_targets: Sequence[tuple[int, ...]],
    mode: str,
) -> Iterator[tuple[int, Any]]:
    """Semi-decide membership of fixed targets, meeting in the middle.

    Each unresolved target seeds a follower orbit over the same pool;
    every op preserves membership of the coset, so a target lies in the
    closure iff its orbit intersects the forward discovered set.  Both
    directions advance alternately, which typically meets at half the
    search depth of a one-sided scan.
    """
    fronts: dict[int, ClosureState] = {}
    watch: dict[tuple[int, ...], list[int]] = {}
    seen = set()
    for tid, t in enumerate(static_targets):
        if t in seen:
            continue
        seen.add(t)
        if t in state.d_set:
            if mode == "any":
                yield (1, ("accept", t))
                return
            continue
        fronts[tid] = ClosureState(state.arity, (), follow=state, seed=t)
        watch.setdefault(t, []).append(tid)
    if not fronts:
        yield (1, ("accept", None))
        return
    live = sorted(fronts)
    forward_set = state.d_set
    rotation = 0  # even steps advance the forward front
    # silent work is coalesced into batch atoms: acceptance still lands at
    # its exact cumulative step, and all coalesced steps carry no events
    batched = 0
    batch_atoms = 0

    while True:
        if batch_atoms >= 64:
            yield (batched, None)
            batched = 0
            batch_atoms = 0
        if rotation % 2 == 0 or not fronts:
            cost, w = state.next_atom()
            rotation += 1
            batch_atoms += 1
            hit = watch.get(w) if w is not None else None
            if hit:
                for tid in hit:
                    fronts.pop(tid, None)
                live = sorted(fronts)
                if mode == "any" or not fronts:
                    if batched:
                        yield (batched, None)
                    yield (cost, ("accept", w))
                    return
            batched += cost
            continue
        index = (rotation // 2) % len(live)
        rotation += 1
        tid = live[index]
        front = fronts.get(tid)
        if front is None:
            live = sorted(fronts)
            batched += 1
            batch_atoms += 1
            continue
        cost, u = front.next_atom()
        batch_atoms += 1
        if u is not None:
            if u in forward_set:
                fronts.pop(tid, None)
                live = sorted(fronts)
                if mode == "any" or not fronts:
                    if batched:
                        yield (batched, None)
                    yield (cost, ("accept", u))
                    return
                batched += cost
                continue
            watch.setdefault(u, []).append(tid)
        batched += cost


class ReDescription:
    """Recipe for the r.e. description of a marked group.

    accepts(w) builds a fresh semi-decider for "w = 1 in the group";
    enumerator() builds a fresh enumerator of the identity words.
    """

    arity: int

    def accepts(self, w: Word) -> Computation:
        if w.arity != self.arity:
            raise WordError(f"query arity {w.arity} != description arity {self.arity}")
        return self.query_all([w.letters])

    def query_all(self, targets: Sequence[tuple[int, ...]]) -> Computation:
        raise NotImplementedError

    def query_any_growing(self, growing: GrowingTargets) -> Computation:
        raise NotImplementedError

    def query_all_growing(self, growing: GrowingTargets) -> Computation:
        raise NotImplementedError

    def enumerator(self) -> Computation:
        # generic fallback: filter the shortlex stream through accepts
        domain = enumerator_from_iterable(shortlex_words(self.arity))
        return semidecider_to_enumerator(self.accepts, domain)


class CoReDescription:
    """Recipe for the co-r.e. description of a marked group: accepts(w)
    builds a semi-decider for "w is NOT the identity"."""

    arity: int

    def accepts(self, w: Word) -> Computation:
        if w.arity != self.arity:
            raise WordError(f"query arity {w.arity} != description arity {self.arity}")
        return self._accepts(w)

    def _accepts(self, w: Word) -> Computation:
        raise NotImplementedError


class _ClosureRe(ReDescription):
    """ReDescription backed by a fresh ClosureState per computation."""

    def _fresh_state(self) -> ClosureState:
        raise NotImplementedError

    def query_all(self, targets: Sequence[tuple[int, ...]]) -> Computation:
        return AtomComputation(
            SEMIDECIDER, _meet_query_atoms(self._fresh_state(), targets, "all")
        )

    def query_any_growing(self, growing: GrowingTargets) -> Computation:
        return AtomComputation(
            SEMIDECIDER, _closure_query_atoms(self._fresh_state(), [], growing, "any")
        )

    def query_all_growing(self, growing: GrowingTargets) -> Computation:
        return AtomComputation(
            SEMIDECIDER, _closure_query_atoms(self._fresh_state(), [], growing, "all")
        )

    def enumerator(self) -> Computation:
        state = self._fresh_state()
        arity = self.arity

        def atoms() -> Iterator[tuple[int, Any]]:
            yield (1, ("emit", Word((), arity)))
            for cost, w in state.atoms():
                yield (cost, ("emit", Word(w, arity)) if w is not None else None)

        return AtomComputation(ENUMERATOR, atoms())


class _PresentationRe(_ClosureRe):
    def __init__(self, presentation: FinitePresentation):
        self.presentation = presentation
        self.arity = presentation.arity

    def _fresh_state(self) -> ClosureState:
        return ClosureState(self.arity, (r.letters for r in self.presentation.relators))


class _StreamRe(_ClosureRe):
    def __init__(
        self,
        stream: RelatorEnumerator,
        seeds: Sequence[Word] = (),
    ):
        self.stream = stream
        self.arity = stream.arity
        for s in seeds:
            if s.arity != self.arity:
                raise WordError("seed relator arity mismatch")
        self.seeds = tuple(seeds)

    def _fresh_state(self) -> ClosureState:
        return ClosureState(
            self.arity,
            (s.letters for s in self.seeds),
            source=self.stream.computation(),
        )


class _VarietyRe(_ClosureRe):
    def __init__(self, presentation: FinitePresentation, laws: Sequence[Law]):
        self.presentation = presentation
        self.laws = tuple(laws)
        self.arity = presentation.arity

    def _fresh_state(self) -> ClosureState:
        source = enumerator_from_iterable(law_instances(self.laws, self.arity))
        return ClosureState(
            self.arity,
            (r.letters for r in self.presentation.relators),
            source=source,
        )


class RewrittenRe(ReDescription):
    """View a description over another basis by rewriting queries.

    Queries over the source basis are substituted into the base
    description's basis; this is the r.e. algorithm of the marked subgroup
    generated by the substituted images.
    """

    def __init__(self, base: ReDescription, sub: Substitution):
        if sub.target_arity != base.arity:
            raise WordError(
                f"substitution target arity {sub.target_arity} != base arity {base.arity}"
            )
        self.base = base
        self.sub = sub
        self.arity = sub.source_arity

    def _rewrite(self, letters: tuple[int, ...]) -> tuple[int, ...]:
        return substitute_letters(letters, self.sub)

    def query_all(self, targets: Sequence[tuple[int, ...]]) -> Computation:
        return self.base.query_all([self._rewrite(t) for t in targets])

    def query_any_growing(self, growing: GrowingTargets) -> Computation:
        return self.base.query_any_growing(
            (cost, self._rewrite(t) if t is not None else None) for cost, t in growing
        )

    def query_all_growing(self, growing: GrowingTargets) -> Computation:
        return self.base.query_all_growing(
            (cost, self._rewrite(t) if t is not None else None) for cost, t in growing
        )


def consequences(presentation: FinitePresentation) -> ReDescription:
    """The r.e. description of the group presented by finitely many relators:
    accepts exactly the normal closure of the relator set."""
    return _PresentationRe(presentation)


def re_from_enumerator(rel: RelatorEnumerator) -> ReDescription:
    """The r.e. description generated by a (possibly infinite) relator stream."""
    return _StreamRe(rel)


def variety_consequences(
    presentation: FinitePresentation, laws: Sequence[Law]
) -> ReDescription:
    """Consequences of the relators together with all instances of the laws,
    i.e. the r.e. description of the group presented inside the variety."""
    return _VarietyRe(presentation, laws)
