"""The measures ``P_t`` and ``mu_t`` and the tools around them.

``P_t`` comes from the recursion ``P_1 = delta_0``, ``P_{2t} = P_t``,
``P_{2t+1} = phi(P_{t+1}, P_t)``.  The digit-difference densities satisfy
``mu_t = mu_1 * P_t`` where ``mu_1(k) = 2**(k-2)`` for ``k <= 1``; that
geometric tail is handled in closed form so every ``mu_t`` value stays exact.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .dist import (
    DyadicMass,
    SpanDist,
    combine,
    delta,
    phi,
    support_bounds,
    tail_nonneg,
    variance,
)
from .words import BOTTOM, Bottom, Word, alternating, letter_counts, odd_to_word, word_to_odd

__all__ = [
    "MeasureCache",
    "MuView",
    "binary_weight",
    "mu1_value",
    "p_of",
    "pair_of",
    "canonical_odd",
    "mu_window",
    "p_from_mu",
    "mu_nonneg_mass",
    "limit_iterate",
    "empirical_frequency",
    "clt_probe",
    "measure_report",
    "DEFAULT_CACHE",
]

Index = Union[int, Word, Bottom, str]


def binary_weight(n: int) -> int:
    if n < 0:
        raise ValueError("binary weight of a negative number")
    return n.bit_count()


def mu1_value(k: int) -> DyadicMass:
    """Density of ``{n : s(n+1) - s(n) = k}``."""
    if k > 1:
        return DyadicMass(0)
    return DyadicMass.of(1, 2 - k)


def canonical_odd(t: Index) -> int:
    """Reduce an index (integer, word, or bottom) to its odd integer key."""
    if isinstance(t, Bottom):
        return 1
    if isinstance(t, str):
        t = BOTTOM if t == "bottom" else Word.from_str(t)
        if isinstance(t, Bottom):
            return 1
    if isinstance(t, Word):
        return word_to_odd(t)
    t = int(t)
    if t < 1:
        raise ValueError(f"P_t is defined for t >= 1, got {t}")
    return t >> ((t & -t).bit_length() - 1)


class MeasureCache:
    """Memo table ``odd t -> P_t``, safe for concurrent readers.

    With ``max_entries`` set, the largest keys are evicted first once the
    table is full.
    """

    def __init__(self, max_entries: int | None = None):
        self.max_entries = max_entries
        self._table: dict[int, SpanDist] = {1: delta(0)}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.cells = 1
        self.peak_cells = 1

    @property
    def entries(self) -> int:
        return len(self._table)

    def stats(self) -> dict:
        return {
            "hits": self.hits,
            "misses": self.misses,
            "entries": self.entries,
            "peak_cells": self.peak_cells,
        }

    def clear(self):
        with self._lock:
            self._table = {1: delta(0)}
            self.cells = 1

    def _store(self, t: int, dist: SpanDist):
        with self._lock:
            old = self._table.get(t)
            self.cells += len(dist) - (len(old) if old is not None else 0)
            self._table[t] = dist
            self.peak_cells = max(self.peak_cells, self.cells)
            if self.max_entries is not None and len(self._table) > self.max_entries:
                for key in sorted(self._table, reverse=True):
                    if len(self._table) <= self.max_entries:
                        break
                    if key != 1:
                        self.cells -= len(self._table.pop(key))

    def get(self, t: Index) -> SpanDist:
        t = canonical_odd(t)
        hit = self._table.get(t)
        if hit is not None:
            self.hits += 1
            return hit
        # Iterative descent: collect the odd keys this t depends on.
        order = []
        stack = [t]
        seen = set()
        while stack:
            u = stack.pop()
            if u in seen or u in self._table:
                continue
            seen.add(u)
            order.append(u)
            s = u >> 1
            stack.append(canonical_odd(s + 1))
            stack.append(canonical_odd(s))
        computed: dict[int, SpanDist] = {}

        def lookup(u):
            return computed.get(u) or self._table[u]

        for u in sorted(order):
            s = u >> 1
            computed[u] = phi(lookup(canonical_odd(s + 1)), lookup(canonical_odd(s)))
        self.misses += 1
        for u in sorted(order):
            self._store(u, computed[u])
        return computed[t]

    __call__ = get


DEFAULT_CACHE = MeasureCache()


def p_of(t: Index, cache: MeasureCache | None = None) -> SpanDist:
    """``P_t`` for ``t >= 1``; also accepts a word, ``"eps"`` or :data:`BOTTOM`."""
    return (cache or DEFAULT_CACHE).get(t)


def pair_of(t: Index, cache: MeasureCache | None = None) -> tuple[SpanDist, SpanDist]:
    """``(P_{s+1}, P_s)`` for ``t = 2s + 1 >= 3``, so that ``P_t = phi(*pair)``."""
    t = canonical_odd(t)
    if t < 3:
        raise ValueError("the bottom element has no pair")
    s = t >> 1
    return p_of(s + 1, cache), p_of(s, cache)


@dataclass(frozen=True)
class MuView:
    """Exact view of ``mu_t = mu_1 * P_t`` on a window plus both tails.

    ``values[i]`` is ``mu_t(lo + i)``.  Below ``base.min_offset + 2`` the
    measure is exactly ``tail_coefficient * 2**d``.
    """

    base: SpanDist
    lo: int
    hi: int
    values: tuple[DyadicMass, ...]
    tail_coefficient: DyadicMass
    below: DyadicMass
    above: DyadicMass

    def __call__(self, d: int) -> DyadicMass:
        if self.lo <= d <= self.hi:
            return self.values[d - self.lo]
        return _mu_point(self.base, d)

    def window(self) -> dict[int, DyadicMass]:
        return {self.lo + i: v for i, v in enumerate(self.values)}

    def nonneg_mass(self) -> DyadicMass:
        """``mu_t({0, 1, 2, ...})``, exact."""
        edge = self.base.min_offset + 2
        total = DyadicMass(0)
        start = 0
        if edge > 0:
            total = self.tail_coefficient * ((1 << edge) - 1)
            start = edge
        for d in range(start, self.base.max_offset + 2):
            total = total + self(d)
        return total


def _mu_point(p: SpanDist, d: int) -> DyadicMass:
    # mu(d) = sum over k >= d - 1 of 2**(d - k - 2) * P(k)
    if d > p.max_offset + 1:
        return DyadicMass(0)
    e = p.exponent + p.max_offset + 2 - d
    num = 0
    for k in range(max(d - 1, p.min_offset), p.max_offset + 1):
        num += p.numerator_at(k) << (p.max_offset - k)
    return DyadicMass.of(num, e)


def _tail_coefficient(p: SpanDist) -> DyadicMass:
    # c = sum_k 2**(-k-2) P(k); rescale to the smallest exponent that keeps it integral
    num = 0
    for k in p.offsets():
        num += p.numerator_at(k) << (p.max_offset - k)
    return DyadicMass.of(num, p.exponent + p.max_offset + 2)


def mu_window(t: Index, a: int | None = None, b: int | None = None,
              cache: MeasureCache | None = None) -> MuView:
    """Exact ``mu_t`` on ``[a, b]`` with the masses below ``a`` and above ``b``.

    Defaults to ``[min supp P_t - 8, max supp P_t + 1]``.
    """
    p = p_of(t, cache)
    lo = p.min_offset - 8 if a is None else a
    hi = p.max_offset + 1 if b is None else b
    if lo > hi:
        raise ValueError("empty window")
    c = _tail_coefficient(p)
    values = tuple(_mu_point(p, d) for d in range(lo, hi + 1))
    edge = p.min_offset + 2  # geometric formula holds for d < edge
    if lo <= edge:
        below = c * DyadicMass.of(1, -lo)
    else:
        below = c * DyadicMass.of(1, -edge)
        for d in range(edge, lo):
            below = below + _mu_point(p, d)
    above = 1 - below - sum(values, DyadicMass(0))
    return MuView(p, lo, hi, values, c, below, above)


def p_from_mu(mu: Callable[[int], DyadicMass | Fraction], d: int) -> DyadicMass:
    """Recover ``P_t(d)`` from ``mu_t`` by ``2 mu(d+1) - mu(d+2)``."""
    x, y = mu(d + 1), mu(d + 2)
    if not isinstance(x, DyadicMass):
        x = DyadicMass.from_fraction(x)
    if not isinstance(y, DyadicMass):
        y = DyadicMass.from_fraction(y)
    return 2 * x - y


def _word_of(v: Index) -> Word | Bottom:
    t = canonical_odd(v)
    return BOTTOM if t == 1 else odd_to_word(t)


def mu_nonneg_mass(v: Index, cache: MeasureCache | None = None) -> DyadicMass:
    """Exact ``mu_v({0, 1, ...})`` via the finite word ``v R L^k``, ``k = #R(v) + 2``."""
    w = _word_of(v)
    if isinstance(w, Bottom):
        return mu1_value(1) + mu1_value(0)
    k = letter_counts(w)[1] + 2
    return tail_nonneg(p_of(w + "R" + "L" * k, cache))


def limit_iterate(v: Index, n: int, cache: MeasureCache | None = None) -> SpanDist:
    """``P_{v R L^n}`` assembled in closed form from ``P_v`` and its left parent."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    w = _word_of(v)
    if isinstance(w, Bottom):
        raise ValueError("the bottom element has no children")
    pv = p_of(w, cache)
    pl, _ = pair_of(w, cache)
    terms = [(DyadicMass.of(1, n + 1), -(n + 1), pl)]
    terms += [(DyadicMass.of(1, 2 - i), i, pv) for i in range(-(n - 1), 2)]
    return combine(terms)


_BLOCK = 1 << 16


def empirical_frequency(t: int, N: int) -> dict[int, Fraction]:
    """Exact frequencies of ``s(n + t) - s(n) = d`` over ``0 <= n < N``."""
    if N < 1:
        raise ValueError("N must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t + N >= 1 << 63:
        raise OverflowError("t + N exceeds the 64-bit range")
    counts: dict[int, int] = {}
    for start in range(0, N, _BLOCK):
        n = np.arange(start, min(start + _BLOCK, N), dtype=np.uint64)
        diff = np.bitwise_count(n + np.uint64(t)).astype(np.int64) - np.bitwise_count(n)
        vals, cnt = np.unique(diff, return_counts=True)
        for d, c in zip(vals.tolist(), cnt.tolist()):
            counts[d] = counts.get(d, 0) + c
    return {d: Fraction(c, N) for d, c in sorted(counts.items())}


def _normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def clt_probe(n: int, cache: MeasureCache | None = None) -> float:
    """Kolmogorov distance between the standardized ``P`` of ``LRLR...`` (length n) and N(0,1).

    The exact CDF is compared at half-integer points, i.e. with a
    continuity correction.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = p_of(alternating(n), cache)
    sigma = math.sqrt(variance(p))
    den = 1 << p.exponent
    worst = 0.0
    cum = 0
    for k in range(p.min_offset - 1, p.max_offset + 1):
        cum += p.numerator_at(k)
        exact = float(Fraction(cum, den))
        worst = max(worst, abs(exact - _normal_cdf((k + 0.5) / sigma)))
    return worst


def _frac(x) -> str:
    x = x.as_fraction() if isinstance(x, DyadicMass) else Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def measure_report(t: Index, cache: MeasureCache | None = None) -> dict:
    """JSON-ready summary of ``P_t`` and ``mu_t``."""
    key = canonical_odd(t)
    p = p_of(key, cache)
    view = mu_window(key, cache=cache)
    word = "bottom" if key == 1 else str(odd_to_word(key))
    lo, hi = support_bounds(p)
    return {
        "t": key,
        "word": word,
        "P": p.to_json_obj(),
        "support": [lo, hi],
        "variance": _frac(variance(p)),
        "V": _frac(tail_nonneg(p)),
        "mu_window": [
            {"d": d, "numerator": v.numerator, "exponent": v.exponent}
            for d, v in view.window().items()
        ],
        "mu_tail_coeff": {
            "numerator": view.tail_coefficient.numerator,
            "exponent": view.tail_coefficient.exponent,
        },
        "mu_nonneg": _frac(mu_nonneg_mass(key, cache)),
    }
