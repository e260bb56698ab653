"""Exact finitely supported distributions on the integers.

Every probability handled by the package is a dyadic rational, so a
distribution is stored as a contiguous run of integer numerators over one
shared power-of-two denominator.  Values are immutable.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Iterator, Sequence

__all__ = [
    "DyadicMass",
    "SpanDist",
    "delta",
    "shift",
    "phi",
    "convolve",
    "mean",
    "variance",
    "tail_nonneg",
    "tail_nonpos",
    "reflect",
    "support_bounds",
    "combine",
]


def _twos(n: int) -> int:
    """Number of trailing zero bits of a nonzero integer."""
    return (n & -n).bit_length() - 1


@total_ordering
@dataclass(frozen=True)
class DyadicMass:
    """The exact value ``numerator / 2**exponent`` in canonical form."""

    numerator: int
    exponent: int = 0

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be nonnegative")
        if self.numerator == 0:
            if self.exponent != 0:
                raise ValueError("zero must be stored with exponent 0")
        elif self.exponent and self.numerator % 2 == 0:
            raise ValueError("numerator must be odd when exponent > 0")

    @classmethod
    def of(cls, numerator: int, exponent: int = 0) -> "DyadicMass":
        """Build the canonical representative of ``numerator / 2**exponent``.

        A negative exponent is allowed here and folded into the numerator.
        """
        if exponent < 0:
            return cls(numerator << -exponent, 0)
        if numerator == 0:
            return cls(0, 0)
        k = min(_twos(numerator), exponent)
        return cls(numerator >> k, exponent - k)

    @classmethod
    def from_fraction(cls, value: Fraction | int) -> "DyadicMass":
        value = Fraction(value)
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        return cls.of(value.numerator, den.bit_length() - 1)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def scaled_to(self, exponent: int) -> int:
        """Numerator of this value over ``2**exponent`` (must be exact)."""
        if exponent < self.exponent:
            raise ValueError("cannot rescale to a smaller exponent")
        return self.numerator << (exponent - self.exponent)

    def _coerce(self, other) -> "DyadicMass":
        if isinstance(other, DyadicMass):
            return other
        if isinstance(other, (int, Fraction)):
            return DyadicMass.from_fraction(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        e = max(self.exponent, other.exponent)
        return DyadicMass.of(self.scaled_to(e) + other.scaled_to(e), e)

    __radd__ = __add__

    def __neg__(self):
        return DyadicMass(-self.numerator, self.exponent)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return DyadicMass.of(
            self.numerator * other.numerator, self.exponent + other.exponent
        )

    __rmul__ = __mul__

    def halve(self, times: int = 1) -> "DyadicMass":
        return DyadicMass.of(self.numerator, self.exponent + times)

    def __eq__(self, other):
        if isinstance(other, DyadicMass):
            return self.numerator == other.numerator and self.exponent == other.exponent
        if isinstance(other, (int, Fraction)):
            return self.as_fraction() == other
        if isinstance(other, float):
            return math.isfinite(other) and self.as_fraction() == Fraction(other)
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, DyadicMass):
            other = other.as_fraction()
        if isinstance(other, (int, Fraction)):
            return self.as_fraction() < other
        if isinstance(other, float):
            return float(self) < other
        return NotImplemented

    def __hash__(self):
        return hash(self.as_fraction())

    def __float__(self):
        return self.numerator / (1 << self.exponent)

    def __bool__(self):
        return self.numerator != 0

    def __str__(self):
        if self.exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}/2^{self.exponent}"

    def __repr__(self):
        return f"DyadicMass({self.numerator}, {self.exponent})"


class SpanDist:
    """Probability distribution on a contiguous integer window.

    ``numerators[i] / 2**exponent`` is the mass at ``min_offset + i``.  The
    constructor trims zero padding, reduces the shared exponent and checks
    that the masses are nonnegative and sum to one.
    """

    __slots__ = ("min_offset", "exponent", "numerators")

    def __init__(self, min_offset: int, numerators: Sequence[int], exponent: int):
        nums = [int(x) for x in numerators]
        lo, hi = 0, len(nums)
        while lo < hi and nums[lo] == 0:
            lo += 1
        while hi > lo and nums[hi - 1] == 0:
            hi -= 1
        if lo == hi:
            raise ValueError("distribution has no mass")
        nums = nums[lo:hi]
        if any(x < 0 for x in nums):
            raise ValueError("negative mass")
        if exponent < 0:
            nums = [x << -exponent for x in nums]
            exponent = 0
        if sum(nums) != 1 << exponent:
            raise ValueError("masses do not sum to one")
        common = exponent
        for x in nums:
            if x:
                common = min(common, _twos(x))
                if common == 0:
                    break
        if common:
            nums = [x >> common for x in nums]
            exponent -= common
        object.__setattr__(self, "min_offset", min_offset + lo)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "numerators", tuple(nums))

    def __setattr__(self, name, value):
        raise AttributeError("SpanDist is immutable")

    @property
    def max_offset(self) -> int:
        return self.min_offset + len(self.numerators) - 1

    def __len__(self):
        return len(self.numerators)

    def __getitem__(self, d: int) -> DyadicMass:
        i = d - self.min_offset
        if 0 <= i < len(self.numerators):
            return DyadicMass.of(self.numerators[i], self.exponent)
        return DyadicMass(0)

    def numerator_at(self, d: int, exponent: int | None = None) -> int:
        """Raw numerator at ``d``, optionally rescaled to a larger exponent."""
        i = d - self.min_offset
        if not 0 <= i < len(self.numerators):
            return 0
        x = self.numerators[i]
        if exponent is None:
            return x
        return x << (exponent - self.exponent)

    def offsets(self) -> range:
        return range(self.min_offset, self.max_offset + 1)

    def items(self) -> Iterator[tuple[int, DyadicMass]]:
        """Pairs ``(d, mass)`` over the support, zeros skipped."""
        for i, x in enumerate(self.numerators):
            if x:
                yield self.min_offset + i, DyadicMass.of(x, self.exponent)

    def as_dict(self) -> dict[int, Fraction]:
        return {d: m.as_fraction() for d, m in self.items()}

    def __eq__(self, other):
        if not isinstance(other, SpanDist):
            return NotImplemented
        return (
            self.min_offset == other.min_offset
            and self.exponent == other.exponent
            and self.numerators == other.numerators
        )

    def __hash__(self):
        return hash((self.min_offset, self.exponent, self.numerators))

    def __repr__(self):
        body = ", ".join(f"{d}: {m}" for d, m in self.items())
        return f"SpanDist({{{body}}})"

    @classmethod
    def from_masses(cls, masses: dict[int, Fraction | int | DyadicMass]) -> "SpanDist":
        """Build from an ``offset -> mass`` mapping of dyadic values."""
        if not masses:
            raise ValueError("distribution has no mass")
        vals = {
            d: m if isinstance(m, DyadicMass) else DyadicMass.from_fraction(m)
            for d, m in masses.items()
        }
        e = max(v.exponent for v in vals.values())
        lo, hi = min(vals), max(vals)
        nums = [0] * (hi - lo + 1)
        for d, v in vals.items():
            nums[d - lo] = v.scaled_to(e)
        return cls(lo, nums, e)

    # -- serialization -------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "min_offset": self.min_offset,
            "exponent": self.exponent,
            "numerators": list(self.numerators),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SpanDist":
        dist = cls(int(obj["min_offset"]), obj["numerators"], int(obj["exponent"]))
        if dist.to_json_obj() != {
            "min_offset": obj["min_offset"],
            "exponent": obj["exponent"],
            "numerators": list(obj["numerators"]),
        }:
            raise ValueError("serialized distribution is not in canonical form")
        return dist

    @classmethod
    def from_json(cls, text: str) -> "SpanDist":
        return cls.from_json_obj(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["offset", "numerator", "exponent"])
        for i, x in enumerate(self.numerators):
            w.writerow([self.min_offset + i, x, self.exponent])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpanDist":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        exps = {int(r["exponent"]) for r in rows}
        if len(exps) != 1:
            raise ValueError("rows disagree on the exponent")
        offs = [int(r["offset"]) for r in rows]
        if offs != list(range(offs[0], offs[0] + len(offs))):
            raise ValueError("offsets must be contiguous and increasing")
        return cls(offs[0], [int(r["numerator"]) for r in rows], exps.pop())


def delta(k: int = 0) -> SpanDist:
    """Point mass at ``k``."""
    return SpanDist(k, (1,), 0)


def combine(terms: Iterable[tuple[DyadicMass | Fraction | int, int, SpanDist]]) -> SpanDist:
    """Mixture ``sum w * shift(d, k)`` over ``(w, k, d)`` triples.

    The weights must be dyadic and sum to one.
    """
    terms = [
        (w if isinstance(w, DyadicMass) else DyadicMass.from_fraction(w), k, d)
        for w, k, d in terms
    ]
    terms = [t for t in terms if t[0]]
    if not terms:
        raise ValueError("no terms")
    e = max(w.exponent + d.exponent for w, _, d in terms)
    lo = min(d.min_offset + k for _, k, d in terms)
    hi = max(d.max_offset + k for _, k, d in terms)
    acc = [0] * (hi - lo + 1)
    for w, k, d in terms:
        scale = w.numerator << (e - w.exponent - d.exponent)
        base = d.min_offset + k - lo
        for i, x in enumerate(d.numerators):
            acc[base + i] += scale * x
    return SpanDist(lo, acc, e)


def shift(d: SpanDist, k: int) -> SpanDist:
    """Translate ``d`` by ``k``: the result at ``j`` is ``d`` at ``j - k``."""
    return SpanDist(d.min_offset + k, d.numerators, d.exponent)


_HALF = DyadicMass(1, 1)


def phi(left: SpanDist, right: SpanDist) -> SpanDist:
    """Half of ``left`` moved one step down plus half of ``right`` one step up."""
    return combine([(_HALF, -1, left), (_HALF, 1, right)])


def convolve(a: SpanDist, b: SpanDist) -> SpanDist:
    acc = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a.numerators):
        if x:
            for j, y in enumerate(b.numerators):
                acc[i + j] += x * y
    return SpanDist(a.min_offset + b.min_offset, acc, a.exponent + b.exponent)


def reflect(d: SpanDist) -> SpanDist:
    return SpanDist(-d.max_offset, d.numerators[::-1], d.exponent)


def support_bounds(d: SpanDist) -> tuple[int, int]:
    return d.min_offset, d.max_offset


def mean(d: SpanDist) -> Fraction:
    s = sum((d.min_offset + i) * x for i, x in enumerate(d.numerators))
    return Fraction(s, 1 << d.exponent)


def variance(d: SpanDist) -> Fraction:
    den = 1 << d.exponent
    s1 = s2 = 0
    for i, x in enumerate(d.numerators):
        k = d.min_offset + i
        s1 += k * x
        s2 += k * k * x
    m = Fraction(s1, den)
    return Fraction(s2, den) - m * m


def tail_nonneg(d: SpanDist) -> DyadicMass:
    """Mass on ``{0, 1, 2, ...}``."""
    start = max(0, -d.min_offset)
    return DyadicMass.of(sum(d.numerators[start:]), d.exponent)


def tail_nonpos(d: SpanDist) -> DyadicMass:
    """Mass on ``{..., -1, 0}``."""
    stop = max(0, 1 - d.min_offset)
    return DyadicMass.of(sum(d.numerators[:stop]), d.exponent)
