"""Words over {L, R} and their coding by odd integers.

A word ``w1...wk`` is the odd number with binary digits ``1 b(w1) ... b(wk) 1``
where ``b(L) = 0`` and ``b(R) = 1``; the empty word is 3.  Reading the
letters left to right is the same as applying ``t -> 2t - 1`` (L) or
``t -> 2t + 1`` (R) starting from 3.  The number 1 has no word and is
represented by :data:`BOTTOM`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

__all__ = [
    "Word",
    "Bottom",
    "BOTTOM",
    "EMPTY",
    "word_to_odd",
    "odd_to_word",
    "bar",
    "rev",
    "block_count",
    "letter_counts",
    "chain_prefix",
    "parse_word",
    "alternating",
]


class Bottom:
    """The bottom element ``t = 1`` of the order; it has no word."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"

    def __reduce__(self):
        return (Bottom, ())


BOTTOM = Bottom()


@dataclass(frozen=True)
class Word:
    """Packed word: bit ``i`` (from the most significant end) is letter ``i``.

    ``bits`` holds the letters as a binary number of ``length`` digits,
    first letter most significant, with L=0 and R=1.
    """

    bits: int = 0
    length: int = 0

    def __post_init__(self):
        if self.length < 0 or self.bits < 0 or self.bits >> self.length:
            raise ValueError("bits do not fit in length")

    @classmethod
    def from_str(cls, text: str) -> "Word":
        if text == "eps":
            return EMPTY
        bits = 0
        for ch in text:
            if ch == "L":
                bits <<= 1
            elif ch == "R":
                bits = (bits << 1) | 1
            else:
                raise ValueError(f"invalid letter {ch!r} in word {text!r}")
        return cls(bits, len(text))

    def __str__(self):
        if not self.length:
            return "eps"
        return "".join(self)

    def __repr__(self):
        return f"Word({str(self)!r})"

    def __len__(self):
        return self.length

    def __iter__(self) -> Iterator[str]:
        for i in range(self.length - 1, -1, -1):
            yield "R" if (self.bits >> i) & 1 else "L"

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Word.from_str("".join(list(self)[i]))
        if i < 0:
            i += self.length
        if not 0 <= i < self.length:
            raise IndexError(i)
        return "R" if (self.bits >> (self.length - 1 - i)) & 1 else "L"

    def __add__(self, other: "Word | str") -> "Word":
        if isinstance(other, str):
            other = Word.from_str(other) if other else EMPTY
        return Word((self.bits << other.length) | other.bits, self.length + other.length)

    def __mul__(self, n: int) -> "Word":
        out = EMPTY
        for _ in range(n):
            out = out + self
        return out

    def prefix(self, n: int) -> "Word":
        if not 0 <= n <= self.length:
            raise ValueError(f"prefix length {n} outside 0..{self.length}")
        return Word(self.bits >> (self.length - n), n)

    @property
    def first(self) -> str | None:
        return self[0] if self.length else None


EMPTY = Word(0, 0)

WordLike = Union[Word, str]


def parse_word(text: str) -> Word | Bottom:
    """Parse the textual syntax: letters ``L``/``R``, ``eps``, or ``bottom``."""
    if text == "bottom":
        return BOTTOM
    if not text:
        raise ValueError("the empty word is written 'eps'")
    return Word.from_str(text)


def _as_word(w: WordLike) -> Word:
    return Word.from_str(w) if isinstance(w, str) else w


def word_to_odd(w: WordLike) -> int:
    w = _as_word(w)
    return (((1 << w.length) | w.bits) << 1) | 1


def odd_to_word(t: int) -> Word:
    if t < 3 or t % 2 == 0:
        raise ValueError(f"{t} is not an odd integer >= 3")
    n = t.bit_length() - 2
    return Word((t >> 1) & ((1 << n) - 1), n)


def bar(w: WordLike) -> Word:
    """Swap every L with R."""
    w = _as_word(w)
    return Word(w.bits ^ ((1 << w.length) - 1), w.length)


def rev(w: WordLike) -> Word:
    w = _as_word(w)
    if not w.length:
        return w
    return Word(int(format(w.bits, f"0{w.length}b")[::-1], 2), w.length)


def block_count(w: WordLike) -> int:
    """Number of maximal runs of a single letter; undefined for the empty word."""
    w = _as_word(w)
    if not w.length:
        raise ValueError("block count is undefined for the empty word")
    changes = (w.bits ^ (w.bits >> 1)) & ((1 << (w.length - 1)) - 1)
    return 1 + changes.bit_count()


def letter_counts(w: WordLike) -> tuple[int, int]:
    """``(number of L, number of R)``."""
    w = _as_word(w)
    r = w.bits.bit_count()
    return w.length - r, r


def chain_prefix(w: WordLike, t: int) -> int:
    """Odd integer of the length-``t`` prefix; ``t = -1`` gives 1, ``t = 0`` gives 3."""
    w = _as_word(w)
    if t < -1:
        raise ValueError("prefix index must be >= -1")
    if t > w.length:
        raise ValueError(f"word has only {w.length} letters, asked for {t}")
    if t == -1:
        return 1
    return word_to_odd(w.prefix(t))


def alternating(n: int, start: str = "L") -> Word:
    """``LRLR...`` (or ``RLRL...``) of length ``n``."""
    other = "R" if start == "L" else "L"
    return Word.from_str("".join(start if i % 2 == 0 else other for i in range(n)) or "eps")
