"""Exhaustive and randomized checks of the structural properties of ``P_w``.

Each suite returns a :class:`SuiteReport`; the CLI's ``verify`` command and
the acceptance tests both run these.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

from .dist import DyadicMass, reflect, support_bounds, tail_nonneg, variance
from .measures import limit_iterate, mu_window, p_from_mu, p_of
from .trees import enumerate_distribution, expected_stop, tree_of
from .words import (
    Word,
    alternating,
    bar,
    block_count,
    letter_counts,
    odd_to_word,
    rev,
    word_to_odd,
)

__all__ = ["SuiteReport", "SUITES", "run_suite", "all_words", "alt_variance", "min_variance"]


@dataclass
class SuiteReport:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, cond: bool, what: str):
        self.checked += 1
        if not cond and len(self.failures) < 50:
            self.failures.append(what)
        elif not cond:
            self.notes["more_failures"] = self.notes.get("more_failures", 0) + 1

    def to_json_obj(self) -> dict:
        return {
            "suite": self.name,
            "ok": self.ok,
            "checked": self.checked,
            "failures": self.failures,
            **({"notes": self.notes} if self.notes else {}),
        }


def all_words(max_len: int, min_len: int = 0) -> Iterator[Word]:
    for n in range(min_len, max_len + 1):
        for bits in range(1 << n):
            yield Word(bits, n)


def alt_variance(n: int) -> Fraction:
    """Variance of the alternating word of length ``n``: the maximum over length ``n``."""
    return Fraction(2 * n, 3) + Fraction(8, 9) + Fraction((-1) ** n, 9 * 2**n)


def min_variance(n: int) -> Fraction:
    """Variance of a constant word of length ``n``: the minimum over length ``n``."""
    return 2 - Fraction(1, 2**n)


def _is_alternating(w: Word) -> bool:
    return w.length <= 1 or block_count(w) == w.length


def _is_constant(w: Word) -> bool:
    return w.length == 0 or block_count(w) == 1


def suite_codec(max_len: int = 12, **_) -> SuiteReport:
    rep = SuiteReport("codec")
    rep.check(word_to_odd("RR") == 15, "RR != 15")
    rep.check(word_to_odd("RRRLR") == 123, "RRRLR != 123")
    for w in all_words(max_len):
        t = word_to_odd(w)
        rep.check(odd_to_word(t) == w, f"round trip failed for {w}")
        rep.check(word_to_odd(w + "L") == 2 * t - 1 and word_to_odd(w + "R") == 2 * t + 1,
                  f"child coding failed for {w}")
    return rep


def suite_symmetries(max_len: int = 12, **_) -> SuiteReport:
    rep = SuiteReport("symmetries")
    for w in all_words(max_len):
        p = p_of(w)
        rep.check(p == reflect(p_of(bar(w))), f"P_w != reflect(P_bar(w)) for {w}")
        rep.check(p == p_of(rev(w)), f"P_w != P_rev(w) for {w}")
    return rep


def suite_variance(max_len: int = 12, closed_form_len: int = 30, order_len: int = 10, **_) -> SuiteReport:
    rep = SuiteReport("variance")
    for k in range(closed_form_len + 1):
        rep.check(variance(p_of(Word(0, k))) == min_variance(k), f"var(L^{k})")
        rep.check(variance(p_of(alternating(k))) == alt_variance(k), f"var(alternating {k})")
    for w in all_words(max_len):
        v = variance(p_of(w))
        n = w.length
        lo, hi = min_variance(n), alt_variance(n)
        rep.check(lo <= v <= hi, f"length bounds fail for {w}")
        rep.check((v == lo) == _is_constant(w), f"lower equality mismatch for {w}")
        rep.check((v == hi) == _is_alternating(w), f"upper equality mismatch for {w}")
        if n:
            nb = block_count(w)
            rep.check(alt_variance(nb) <= v < 2 * nb, f"block bounds fail for {w}")
            rep.check((v == alt_variance(nb)) == _is_alternating(w),
                      f"block equality mismatch for {w}")
    # order monotonicity: compare each word with every prefix
    for w in all_words(order_len):
        v = variance(p_of(w))
        for k in range(w.length):
            rep.check(variance(p_of(w.prefix(k))) <= v, f"variance drops from prefix {k} of {w}")
    return rep


def suite_support(max_len: int = 12, **_) -> SuiteReport:
    rep = SuiteReport("support")
    for w in all_words(max_len):
        p = p_of(w)
        nl, nr = letter_counts(w)
        rep.check(support_bounds(p) == (-(nl + 1), nr + 1), f"support of {w}")
        rep.check(p[-(nl + 1)] == Fraction(1, 2 ** (nl + 1)), f"left boundary mass of {w}")
        rep.check(p[nr + 1] == Fraction(1, 2 ** (nr + 1)), f"right boundary mass of {w}")
        rep.check(p.exponent <= w.length + 1, f"denominator of {w} exceeds 2^(len+1)")
    return rep


def suite_oracle(max_len: int = 12, **_) -> SuiteReport:
    rep = SuiteReport("oracle")
    for w in all_words(max_len):
        rep.check(enumerate_distribution(tree_of(w)) == p_of(w), f"tree law differs for {w}")
    return rep


def suite_wald(max_len: int = 12, **_) -> SuiteReport:
    rep = SuiteReport("wald")
    for w in all_words(max_len):
        rep.check(expected_stop(tree_of(w)) == variance(p_of(w)), f"E[tau] != variance for {w}")
    return rep


def _convex_tests():
    tests: list[tuple[str, Callable[[int], int]]] = [("abs", abs), ("square", lambda x: x * x)]
    for a in range(-2, 3):
        tests.append((f"hinge{a:+d}", lambda x, a=a: max(x - a, 0)))
    return tests


def suite_peacock(chains: int = 100, length: int = 30, seed: int = 2024, **_) -> SuiteReport:
    """Convex-order growth along random chains ``1, 3, w(1), w(2), ...``."""
    rep = SuiteReport("peacock")
    rng = random.Random(seed)
    tests = _convex_tests()
    flat = {"abs": 0, "square": 0, "variance": 0}
    for _c in range(chains):
        letters = "".join(rng.choice("LR") for _ in range(length))
        w = Word.from_str(letters)
        chain = [p_of(1)] + [p_of(w.prefix(k)) for k in range(length + 1)]
        for i in range(len(chain) - 1):
            a, b = chain[i], chain[i + 1]
            for name, psi in tests:
                ea = sum(psi(d) * m.as_fraction() for d, m in a.items())
                eb = sum(psi(d) * m.as_fraction() for d, m in b.items())
                rep.check(ea <= eb, f"{name} decreases at step {i} of {letters}")
                if name in flat and not ea < eb:
                    flat[name] += 1
            va, vb = variance(a), variance(b)
            rep.check(va <= vb, f"variance decreases at step {i} of {letters}")
            flat["variance"] += not va < vb
            if i >= 1:
                da = a.max_offset - a.min_offset
                db = b.max_offset - b.min_offset
                rep.check(db == da + 1, f"span grows by {db - da} at step {i} of {letters}")
    # strict growth is not asserted; flat steps are only counted
    rep.notes["flat_steps"] = flat
    return rep


def suite_stabilization(max_len: int = 10, iterate_len: int = 8, iterate_steps: int = 8, **_) -> SuiteReport:
    rep = SuiteReport("stabilization")
    for v in all_words(max_len):
        k0 = letter_counts(v)[1] + 2
        vals = {tail_nonneg(p_of(v + "R" + "L" * k)) for k in range(k0, k0 + 5)}
        rep.check(len(vals) == 1, f"V(vRL^k) not constant for v={v}")
    for v in all_words(iterate_len):
        for n in range(iterate_steps + 1):
            rep.check(limit_iterate(v, n) == p_of(v + "R" + "L" * n), f"closed form differs v={v} n={n}")
    return rep


def suite_deconvolution(max_t: int = 1 << 12, **_) -> SuiteReport:
    rep = SuiteReport("deconvolution")
    for t in range(1, max_t + 1, 2):
        p = p_of(t)
        view = mu_window(t)
        total = view.below + view.above + sum(view.values, DyadicMass(0))
        rep.check(total == 1 and view.above == 0, f"mu window mass for t={t}")
        for d in range(p.min_offset - 2, p.max_offset + 3):
            rep.check(p_from_mu(view, d) == p[d], f"deconvolution at t={t}, d={d}")
    return rep


SUITES = {
    "codec": suite_codec,
    "symmetries": suite_symmetries,
    "variance": suite_variance,
    "support": suite_support,
    "oracle": suite_oracle,
    "wald": suite_wald,
    "peacock": suite_peacock,
    "stabilization": suite_stabilization,
    "deconvolution": suite_deconvolution,
}


def run_suite(name: str, **kwargs) -> SuiteReport:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn(**{k: v for k, v in kwargs.items() if v is not None})
