"""Freely reduced words over a fixed numbered basis, and maps between bases.

Letters are nonzero integers: ``i > 0`` is the i-th generator, ``-i`` its
inverse.  Generator names exist only in the text grammar (a=1, b=2, ...,
z=26; uppercase means inverse).  Every word carries its arity so that
mismatches between descriptions of different rank are detectable.

All values here are immutable and safe to share between threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class WordError(ValueError):
    """Malformed word input: bad letter, arity mismatch, or syntax error."""


def _check_letters(letters: Iterable[int], arity: int) -> None:
    if arity < 1:
        raise WordError(f"arity must be positive, got {arity}")
    for pos, letter in enumerate(letters):
        if letter == 0 or abs(letter) > arity:
            raise WordError(f"letter {letter} at index {pos} out of range for arity {arity}")


def reduce_letters(raw: Iterable[int]) -> tuple[int, ...]:
    """Freely reduce a raw letter sequence (no arity check)."""
    stack: list[int] = []
    for letter in raw:
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


def invert_letters(letters: Sequence[int]) -> tuple[int, ...]:
    return tuple(-l for l in reversed(letters))


def concat_reduced(x: tuple[int, ...], y: tuple[int, ...]) -> tuple[int, ...]:
    """Reduce the concatenation of two already-reduced words.

    Only the boundary can cancel, so this strips the matching border and
    splices, which is much cheaper than a full reduction pass.
    """
    k = 0
    nx, ny = len(x), len(y)
    limit = nx if nx < ny else ny
    while k < limit and x[nx - 1 - k] == -y[k]:
        k += 1
    return x[: nx - k] + y[k:]


@dataclass(frozen=True)
class Word:
    """A freely reduced word of a fixed arity."""

    letters: tuple[int, ...]
    arity: int

    def __post_init__(self) -> None:
        _check_letters(self.letters, self.arity)
        for i in range(len(self.letters) - 1):
            if self.letters[i] == -self.letters[i + 1]:
                raise WordError(f"word not freely reduced at index {i}")

    @staticmethod
    def identity(arity: int) -> "Word":
        return Word((), arity)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        if self.arity != other.arity:
            raise WordError(f"arity mismatch: {self.arity} vs {other.arity}")
        return Word(concat_reduced(self.letters, other.letters), self.arity)

    def inverse(self) -> "Word":
        return Word(invert_letters(self.letters), self.arity)

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        out: tuple[int, ...] = ()
        for _ in range(abs(n)):
            out = concat_reduced(out, base.letters)
        return Word(out, self.arity)

    def is_identity(self) -> bool:
        return not self.letters

    def shortlex_key(self) -> tuple:
        return (len(self.letters), tuple(_letter_rank(l) for l in self.letters))

    def __repr__(self) -> str:
        return f"Word({format_word(self)!r}, arity={self.arity})"


def reduce(raw: Sequence[int], arity: int) -> Word:
    """Freely reduce a raw letter sequence into a Word of the given arity."""
    _check_letters(raw, arity)
    return Word(reduce_letters(raw), arity)


def commutator(u: Word, v: Word) -> Word:
    """[u, v] = u^-1 v^-1 u v."""
    if u.arity != v.arity:
        raise WordError(f"arity mismatch: {u.arity} vs {v.arity}")
    letters = reduce_letters(
        invert_letters(u.letters) + invert_letters(v.letters) + u.letters + v.letters
    )
    return Word(letters, u.arity)


@dataclass(frozen=True)
class Substitution:
    """A map sending generator i of the source basis to images[i-1].

    Substitution is the free extension: inverse letters map to inverse
    images.  All images live over one common target arity.
    """

    source_arity: int
    images: tuple[Word, ...]

    def __post_init__(self) -> None:
        if self.source_arity < 1:
            raise WordError("source arity must be positive")
        if len(self.images) != self.source_arity:
            raise WordError(
                f"expected {self.source_arity} images, got {len(self.images)}"
            )
        arities = {w.arity for w in self.images}
        if len(arities) > 1:
            raise WordError(f"images have mixed arities {sorted(arities)}")

    @property
    def target_arity(self) -> int:
        return self.images[0].arity

    @staticmethod
    def identity(arity: int) -> "Substitution":
        return Substitution(arity, tuple(Word((i,), arity) for i in range(1, arity + 1)))


def substitute_letters(letters: Sequence[int], sub: Substitution) -> tuple[int, ...]:
    out: list[int] = []
    images = sub.images
    for letter in letters:
        image = images[abs(letter) - 1].letters
        if letter < 0:
            image = invert_letters(image)
        for l in image:
            if out and out[-1] == -l:
                out.pop()
            else:
                out.append(l)
    return tuple(out)


def substitute(w: Word, sub: Substitution) -> Word:
    """Apply a substitution to a word and reduce; a monoid hom up to reduction."""
    if w.arity != sub.source_arity:
        raise WordError(f"word arity {w.arity} != substitution source {sub.source_arity}")
    return Word(substitute_letters(w.letters, sub), sub.target_arity)


def _letter_rank(letter: int) -> int:
    # letter order 1 < -1 < 2 < -2 < ...
    return 2 * abs(letter) - (1 if letter > 0 else 0)


_RANK_TO_LETTER_CACHE: dict[int, tuple[int, ...]] = {}


def _letter_order(arity: int) -> tuple[int, ...]:
    order = _RANK_TO_LETTER_CACHE.get(arity)
    if order is None:
        order = tuple(l for i in range(1, arity + 1) for l in (i, -i))
        _RANK_TO_LETTER_CACHE[arity] = order
    return order


def shortlex_letters(arity: int) -> Iterator[tuple[int, ...]]:
    """All freely reduced letter tuples in shortlex order (shorter first,
    ties by letter order 1 < -1 < 2 < -2 < ...)."""
    order = _letter_order(arity)
    current: list[tuple[int, ...]] = [()]
    while True:
        yield from current
        current = [
            w + (l,) for w in current for l in order if not (w and w[-1] == -l)
        ]


def shortlex_words(arity: int) -> Iterator[Word]:
    for letters in shortlex_letters(arity):
        yield Word(letters, arity)


def words_up_to_length(arity: int, max_len: int) -> list[Word]:
    """The finite shortlex prefix of all words of length <= max_len."""
    out = []
    for w in shortlex_words(arity):
        if len(w) > max_len:
            break
        out.append(w)
    return out


class _ShortlexPool:
    """Lazily materialized shortlex list with random access by rank."""

    def __init__(self, arity: int):
        self._iter = shortlex_letters(arity)
        self._cache: list[tuple[int, ...]] = []

    def get(self, rank: int) -> tuple[int, ...]:
        while len(self._cache) <= rank:
            self._cache.append(next(self._iter))
        return self._cache[rank]


# --- text grammar -----------------------------------------------------------
#
#   word   := term*
#   term   := '1' | letter | letter '^' int | '(' word ')' '^' int
#           | '[' word ',' word ']'
#   letter := [a-z] (generator) | [A-Z] (inverse)
#
# Whitespace is ignored; the empty word is written "1".
# [u,v] denotes u^-1 v^-1 u v.


class _Parser:
    def __init__(self, text: str, arity: int):
        self.text = text
        self.arity = arity
        self.pos = 0

    def error(self, message: str) -> WordError:
        return WordError(f"{message} at position {self.pos}")

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def parse_int(self) -> int:
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start or self.text[start:self.pos] == "-":
            raise self.error("expected integer")
        return int(self.text[start:self.pos])

    def parse_letter(self, ch: str) -> int:
        index = ord(ch.lower()) - ord("a") + 1
        if index > self.arity:
            raise self.error(f"letter {ch!r} beyond arity {self.arity}")
        return -index if ch.isupper() else index

    def parse_word(self, closers: str = "") -> list[int]:
        out: list[int] = []
        while True:
            ch = self.peek()
            if ch == "" or ch in closers:
                return out
            if ch == "1":
                self.pos += 1
            elif ch.isalpha():
                self.pos += 1
                letter = self.parse_letter(ch)
                if self.peek() == "^":
                    self.pos += 1
                    out.extend(self._power([letter], self.parse_int()))
                else:
                    out.append(letter)
            elif ch == "(":
                self.pos += 1
                inner = self.parse_word(")")
                self.expect(")")
                self.expect("^")
                out.extend(self._power(inner, self.parse_int()))
            elif ch == "[":
                self.pos += 1
                left = self.parse_word(",")
                self.expect(",")
                right = self.parse_word("]")
                self.expect("]")
                out.extend([-l for l in reversed(left)])
                out.extend([-l for l in reversed(right)])
                out.extend(left)
                out.extend(right)
            else:
                raise self.error(f"unexpected character {ch!r}")

    @staticmethod
    def _power(base: list[int], n: int) -> list[int]:
        if n < 0:
            base = [-l for l in reversed(base)]
            n = -n
        return base * n


def parse_word(text: str, arity: int) -> Word:
    """Parse the word grammar; the result is freely reduced."""
    parser = _Parser(text, arity)
    letters = parser.parse_word()
    parser.skip_ws()
    if parser.pos != len(text):
        raise parser.error(f"unexpected character {text[parser.pos]!r}")
    return Word(reduce_letters(letters), arity)


def format_word(w: Word) -> str:
    """Render a word; parse_word(format_word(w), w.arity) == w."""
    if not w.letters:
        return "1"
    if any(abs(l) > 26 for l in w.letters):
        raise WordError("text grammar only names generators a..z (arity <= 26)")
    parts: list[str] = []
    for letter, run in itertools.groupby(w.letters):
        name = chr(ord("a") + abs(letter) - 1)
        if letter < 0:
            name = name.upper()
        count = len(list(run))
        parts.append(name if count == 1 else f"{name}^{count}")
    return "".join(parts)
