"""Trusted word-problem deciders and finite-group machinery.

These oracles decide identity of words directly (tables, permutations,
exponent vectors, lamplighter normal forms) and serve as the independent
cross-checks for everything the closure machinery semi-decides.  All are
pure after construction and safe for concurrent queries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Optional, Sequence

from .engine import DECIDER, ENUMERATOR, AtomComputation, Computation
from .presentations import Law
from .words import Word, WordError

# letter order used by table/permutation evaluation: word letters are read
# left to right, each letter multiplying on the right.


class OracleError(ValueError):
    """Malformed oracle input: bad table, permutation, or marking."""


class WpDescription:
    """Recipe for a total word-problem decider: answers True iff w = 1."""

    arity: int

    def decide(self, w: Word) -> Computation:
        if w.arity != self.arity:
            raise WordError(f"query arity {w.arity} != oracle arity {self.arity}")
        return self._decider(w)

    def _decider(self, w: Word) -> Computation:
        raise NotImplementedError


class _AtomWp(WpDescription):
    def _decider(self, w: Word) -> Computation:
        return AtomComputation(DECIDER, self._atoms(w.letters))

    def _atoms(self, letters: tuple[int, ...]) -> Iterator[tuple[int, Any]]:
        raise NotImplementedError


class _CyclicWp(_AtomWp):
    """Word problem of Z/nZ on one generator; n = 0 means Z."""

    def __init__(self, n: int):
        if n < 0:
            raise OracleError("modulus must be non-negative")
        self.n = n
        self.arity = 1

    def _atoms(self, letters: tuple[int, ...]) -> Iterator[tuple[int, Any]]:
        k = sum(letters)
        identity = (k == 0) if self.n == 0 else (k % self.n == 0)
        yield (1 + len(letters), ("answer", identity))


def cyclic_wp(n: int) -> WpDescription:
    return _CyclicWp(n)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


class _AbelianWp(_AtomWp):
    """Word problem of Z^k modulo the row span of an integer matrix.

    The matrix rows are triangulated once (integer row echelon via extended
    gcd); a word is the identity iff its exponent vector reduces to zero.
    """

    def __init__(self, arity: int, rows: Sequence[Sequence[int]]):
        if arity < 1:
            raise OracleError("arity must be positive")
        self.arity = arity
        basis: dict[int, list[int]] = {}
        for row in rows:
            if len(row) != arity:
                raise OracleError(f"row length {len(row)} != arity {arity}")
            self._insert(basis, list(row))
        self._basis = basis

    def _insert(self, basis: dict[int, list[int]], vec: list[int]) -> None:
        k = self.arity
        for col in range(k):
            if vec[col] == 0:
                continue
            if col in basis:
                piv = basis[col]
                g, x, y = _xgcd(piv[col], vec[col])
                a_over, b_over = piv[col] // g, vec[col] // g
                new_piv = [x * p + y * v for p, v in zip(piv, vec)]
                new_vec = [a_over * v - b_over * p for p, v in zip(piv, vec)]
                basis[col] = new_piv
                vec = new_vec
            else:
                if vec[col] < 0:
                    vec = [-v for v in vec]
                basis[col] = vec
                return

    def _in_span(self, vec: list[int]) -> bool:
        for col in range(self.arity):
            if vec[col] == 0:
                continue
            piv = self._basis.get(col)
            if piv is None or vec[col] % piv[col] != 0:
                return False
            q = vec[col] // piv[col]
            vec = [v - q * p for v, p in zip(vec, piv)]
        return True

    def _atoms(self, letters: tuple[int, ...]) -> Iterator[tuple[int, Any]]:
        vec = [0] * self.arity
        for l in letters:
            vec[abs(l) - 1] += 1 if l > 0 else -1
        yield (1 + len(letters), ("answer", self._in_span(vec)))


def abelian_wp(arity: int, rows: Sequence[Sequence[int]] = ()) -> WpDescription:
    return _AbelianWp(arity, rows)


@dataclass(frozen=True)
class CayleyTable:
    """A finite group as a multiplication table; element 0 is the identity."""

    table: tuple[tuple[int, ...], ...]

    @property
    def order(self) -> int:
        return len(self.table)

    def __post_init__(self) -> None:
        n = len(self.table)
        if n == 0:
            raise OracleError("empty table")
        for row in self.table:
            if len(row) != n or any(not (0 <= v < n) for v in row):
                raise OracleError("table is not n x n over 0..n-1")

    def mult(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        row = self.table[a]
        for b, v in enumerate(row):
            if v == 0:
                return b
        raise OracleError(f"element {a} has no inverse")

    def validate(self) -> None:
        """Full invariant check: identity, Latin property, associativity."""
        n = self.order
        t = self.table
        for i in range(n):
            if t[0][i] != i or t[i][0] != i:
                raise OracleError("row/column 0 must be the identity")
            if len(set(t[i])) != n or len({t[j][i] for j in range(n)}) != n:
                raise OracleError(f"row or column {i} is not a permutation")
        for x in range(n):
            for y in range(n):
                txy = t[x][y]
                for z in range(n):
                    if t[txy][z] != t[x][t[y][z]]:
                        raise OracleError(f"associativity fails at ({x},{y},{z})")

    def element_order(self, a: int) -> int:
        x = a
        k = 1
        while x != 0:
            x = self.table[x][a]
            k += 1
        return k

    def generated_by(self, elements: Sequence[int]) -> frozenset[int]:
        """Closure of the elements under multiplication (a subgroup)."""
        closure = {0}
        closure.update(elements)
        frontier = sorted(closure)
        while frontier:
            new = []
            for x in frontier:
                for g in elements:
                    y = self.table[x][g]
                    if y not in closure:
                        closure.add(y)
                        new.append(y)
            frontier = new
        return frozenset(closure)


def parse_cayley(text: str) -> CayleyTable:
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not lines or not lines[0].startswith("order"):
        raise OracleError("table text must start with 'order n'")
    try:
        n = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise OracleError("bad order line") from exc
    if len(lines) != n + 1:
        raise OracleError(f"expected {n} rows, got {len(lines) - 1}")
    rows = []
    for line in lines[1:]:
        row = tuple(int(v) for v in line.split())
        rows.append(row)
    return CayleyTable(tuple(rows))


def format_cayley(t: CayleyTable) -> str:
    lines = [f"order {t.order}"]
    for row in t.table:
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Marking:
    """A generating tuple of a finite group given by its table."""

    table: CayleyTable
    tuple_: tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.table.order
        if any(not (0 <= g < n) for g in self.tuple_):
            raise OracleError("marking entries out of range")
        if len(self.table.generated_by(self.tuple_)) != n:
            raise OracleError("tuple does not generate the group")

    @property
    def arity(self) -> int:
        return len(self.tuple_)


class _FiniteWp(_AtomWp):
    """Word problem of a finite marked group, by table evaluation."""

    def __init__(self, marking: Marking):
        self.marking = marking
        self.arity = marking.arity
        table = marking.table
        gens = marking.tuple_
        self._step_of = {}
        for i, g in enumerate(gens, start=1):
            self._step_of[i] = g
            self._step_of[-i] = table.inv(g)

    def _atoms(self, letters: tuple[int, ...]) -> Iterator[tuple[int, Any]]:
        table = self.marking.table.table
        x = 0
        for l in letters:
            x = table[x][self._step_of[l]]
        yield (1 + len(letters), ("answer", x == 0))


def finite_wp(marking: Marking) -> WpDescription:
    return _FiniteWp(marking)


@dataclass(frozen=True)
class Permutation:
    """A permutation of {0..d-1} given by its image list."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        d = len(self.images)
        if sorted(self.images) != list(range(d)):
            raise OracleError("images are not a bijection of 0..d-1")

    @property
    def degree(self) -> int:
        return len(self.images)

    @staticmethod
    def identity(degree: int) -> "Permutation":
        return Permutation(tuple(range(degree)))

    def __mul__(self, other: "Permutation") -> "Permutation":
        """self then other (left-to-right composition)."""
        if self.degree != other.degree:
            raise OracleError("degree mismatch")
        o = other.images
        return Permutation(tuple(o[i] for i in self.images))

    def inverse(self) -> "Permutation":
        out = [0] * self.degree
        for i, v in enumerate(self.images):
            out[v] = i
        return Permutation(tuple(out))

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.images))

    def __call__(self, i: int) -> int:
        return self.images[i]


def perm_commutator(p: Permutation, q: Permutation) -> Permutation:
    return p.inverse() * q.inverse() * p * q


def parse_permutation(text: str) -> Permutation:
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise OracleError("permutation text must look like (p0 p1 ...)")
    try:
        images = tuple(int(v) for v in body[1:-1].split())
    except ValueError as exc:
        raise OracleError("bad permutation entry") from exc
    return Permutation(images)


def format_permutation(p: Permutation) -> str:
    return "(" + " ".join(str(v) for v in p.images) + ")"


class _PermWp(_AtomWp):
    """Word problem of a permutation group on given generators."""

    def __init__(self, gens: Sequence[Permutation]):
        if not gens:
            raise OracleError("need at least one generator")
        degrees = {g.degree for g in gens}
        if len(degrees) != 1:
            raise OracleError(f"generators have mixed degrees {sorted(degrees)}")
        self.gens = tuple(gens)
        self.arity = len(gens)
        self.degree = self.gens[0].degree
        self._images = {}
        for i, g in enumerate(gens, start=1):
            self._images[i] = g.images
            self._images[-i] = g.inverse().images

    def _atoms(self, letters: tuple[int, ...]) -> Iterator[tuple[int, Any]]:
        current = list(range(self.degree))
        for l in letters:
            img = self._images[l]
            current = [img[x] for x in current]
        identity = all(i == v for i, v in enumerate(current))
        yield (1 + len(letters), ("answer", identity))


def perm_wp(gens: Sequence[Permutation]) -> WpDescription:
    return _PermWp(gens)


@dataclass(frozen=True)
class LamplighterElement:
    """Normal form: a shift plus the finite set of lit lamps."""

    shift: int
    support: frozenset[int]

    def is_identity(self) -> bool:
        return self.shift == 0 and not self.support


def lamplighter_eval(letters: Iterable[int]) -> LamplighterElement:
    """Read a word left to right: the first generator shifts by +1, the
    second toggles the lamp at the accumulated shift position."""
    shift = 0
    support: set[int] = set()
    for l in letters:
        if abs(l) == 1:
            shift += 1 if l > 0 else -1
        else:
            if shift in support:
                support.discard(shift)
            else:
                support.add(shift)
    return LamplighterElement(shift, frozenset(support))


class _LamplighterWp(_AtomWp):
    """Word problem of the lamplighter group (arity 2: shift, toggle)."""

    def __init__(self) -> None:
        self.arity = 2

    def _atoms(self, letters: tuple[int, ...]) -> Iterator[tuple[int, Any]]:
        yield (1 + len(letters), ("answer", lamplighter_eval(letters).is_identity()))


def lamplighter_wp() -> WpDescription:
    return _LamplighterWp()


# --- finite group enumeration -----------------------------------------------


class _TableSearch:
    """Backtracking over group tables of one order, identity fixed at 0.

    Rows are the left-multiplication permutations; choosing the first
    undetermined row and propagating the closure constraints
    row[x] o row[y] = row[x*y] enforces associativity incrementally and
    forces most rows, so the search touches few nodes.  Tables are emitted
    in lexicographic order of the flattened table.
    """

    def __init__(self, n: int):
        self.n = n
        self.rows: list[Optional[tuple[int, ...]]] = [None] * n
        self.rows[0] = tuple(range(n))
        self.col_used: list[set[int]] = [{j} for j in range(n)]
        # t[i][0] = i, so candidate rows for index i start with i.

    def _candidates(self, i: int) -> Iterator[tuple[int, ...]]:
        """Valid rows for index i: start with i, column-Latin, ascending."""
        n = self.n
        col_used = self.col_used
        if i in col_used[0]:
            return
        row = [i] + [-1] * (n - 1)
        used = {i}

        def rec(j: int) -> Iterator[tuple[int, ...]]:
            if j == n:
                yield tuple(row)
                return
            for v in range(n):
                if v not in used and v not in col_used[j]:
                    row[j] = v
                    used.add(v)
                    yield from rec(j + 1)
                    used.discard(v)
            row[j] = -1

        yield from rec(1)

    def _assign(self, i: int, row: tuple[int, ...], trail: list[int]) -> bool:
        """Set row i; returns False on column clash."""
        for j in range(self.n):
            if row[j] in self.col_used[j]:
                for jj in range(j):
                    self.col_used[jj].discard(row[jj])
                return False
            self.col_used[j].add(row[j])
        self.rows[i] = row
        trail.append(i)
        return True

    def _undo(self, trail: list[int]) -> None:
        for i in reversed(trail):
            row = self.rows[i]
            self.rows[i] = None
            for j in range(self.n):
                self.col_used[j].discard(row[j])

    def _propagate(self, trail: list[int]) -> bool:
        """Close under row[x] o row[y] = row[x*y]; False on contradiction."""
        rows = self.rows
        queue = list(trail)
        seen_pairs: set[tuple[int, int]] = set()
        index = 0
        while index < len(queue):
            fresh = queue[index]
            index += 1
            known = [x for x in range(self.n) if rows[x] is not None]
            for other in known:
                for x, y in ((fresh, other), (other, fresh)):
                    if (x, y) in seen_pairs or rows[x] is None or rows[y] is None:
                        continue
                    seen_pairs.add((x, y))
                    rx, ry = rows[x], rows[y]
                    comp = tuple(rx[ry[z]] for z in range(self.n))
                    k = rx[ry[0]]
                    if rows[k] is not None:
                        if rows[k] != comp:
                            return False
                    else:
                        if not self._assign(k, comp, trail):
                            return False
                        queue.append(k)
        return True

    def search(self) -> Iterator[tuple[int, Optional[CayleyTable]]]:
        """Atoms: (cost, table or None), one atom per candidate attempt."""
        n = self.n
        if n == 1:
            yield (1, CayleyTable(((0,),)))
            return
        # stack of (row_index, candidate_iterator, trail)
        stack: list[tuple[int, Iterator[tuple[int, ...]], list[int]]] = []
        first = self.rows.index(None)
        stack.append((first, self._candidates(first), []))
        while stack:
            i, candidates, trail = stack[-1]
            self._undo(trail)
            trail.clear()
            advanced = False
            for candidate in candidates:
                if not self._assign(i, candidate, trail):
                    yield (n, None)
                    continue
                if not self._propagate(trail):
                    self._undo(trail)
                    trail.clear()
                    yield (n, None)
                    continue
                advanced = True
                break
            if not advanced:
                stack.pop()
                yield (1, None)
                continue
            if None in self.rows:
                nxt = self.rows.index(None)
                stack.append((nxt, self._candidates(nxt), []))
                yield (n, None)
            else:
                table = CayleyTable(tuple(self.rows))  # type: ignore[arg-type]
                yield (n, table)
                # leave the frame; its next candidate resumes the search


def group_table_atoms(max_order: Optional[int]) -> Iterator[tuple[int, Any]]:
    """Atom stream emitting every group table of order 1..max_order
    (unbounded when max_order is None), smaller orders first."""
    orders = itertools.count(1) if max_order is None else range(1, max_order + 1)
    for n in orders:
        search = _TableSearch(n)
        for cost, table in search.search():
            yield (cost, ("emit", table) if table is not None else None)


def enumerate_finite_groups(max_order: int) -> Computation:
    """Enumerator of all Cayley tables with identity 0, orders 1..max_order,
    in lexicographic order of the flattened table within each order."""
    if max_order < 1:
        raise OracleError("max_order must be >= 1")
    return AtomComputation(ENUMERATOR, group_table_atoms(max_order))


def generating_tuples(table: CayleyTable, k: int) -> Iterator[tuple[int, ...]]:
    """All k-tuples whose closure is the whole group, lexicographic."""
    n = table.order
    for tup in itertools.product(range(n), repeat=k):
        if len(table.generated_by(tup)) == n:
            yield tup


def enumerate_markings(table: CayleyTable, k: int) -> Computation:
    """Enumerator of every generating k-tuple of the table, lexicographic."""
    if k < 1:
        raise OracleError("marking arity must be >= 1")

    def atoms() -> Iterator[tuple[int, Any]]:
        n = table.order
        for tup in itertools.product(range(n), repeat=k):
            if len(table.generated_by(tup)) == n:
                yield (1 + n, ("emit", Marking(table, tup)))
            else:
                yield (1 + n, None)

    return AtomComputation(ENUMERATOR, atoms())


def check_law(table: CayleyTable, law: "Law") -> bool:
    """True iff the law holds for every assignment of table elements."""
    n = table.order
    t = table.table
    letters = law.word.letters
    inv = [table.inv(x) for x in range(n)]
    for assignment in itertools.product(range(n), repeat=law.variable_count):
        x = 0
        for l in letters:
            g = assignment[abs(l) - 1]
            x = t[x][g if l > 0 else inv[g]]
        if x != 0:
            return False
    return True


def sigma_witness(N: int) -> tuple[Permutation, Permutation]:
    """The two permutations of degree 5N witnessing that the lamplighter
    group's finite quotient algorithm is not elementary.

    In 1-based terms the first maps i to i+2 (wrapping past 5N) and the
    second swaps 1,2 and 2N+4, 2N+5; internally everything is 0-based, so
    the rotation sends j to (j+2) mod 5N and the swapped pairs are (0,1)
    and (2N+3, 2N+4).
    """
    if N < 1:
        raise OracleError("N must be >= 1")
    d = 5 * N
    sigma0 = Permutation(tuple((j + 2) % d for j in range(d)))
    images = list(range(d))
    images[0], images[1] = 1, 0
    images[2 * N + 3], images[2 * N + 4] = 2 * N + 4, 2 * N + 3
    sigma1 = Permutation(tuple(images))
    return sigma0, sigma1
