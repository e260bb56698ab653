from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cusickwalk.dist import (
    DyadicMass,
    SpanDist,
    combine,
    convolve,
    delta,
    mean,
    phi,
    reflect,
    shift,
    support_bounds,
    tail_nonneg,
    tail_nonpos,
    variance,
)


@st.composite
def span_dists(draw, max_len=8, max_exp=6):
    n = draw(st.integers(1, max_len))
    e = draw(st.integers(0, max_exp))
    total = 1 << e
    # random composition of 2**e into n nonnegative parts
    cuts = sorted(draw(st.lists(st.integers(0, total), min_size=n - 1, max_size=n - 1)))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    if not any(parts):
        parts[0] = total
    lo = draw(st.integers(-10, 10))
    return SpanDist(lo, parts, e)


# -- DyadicMass ---------------------------------------------------------------


def test_dyadic_canonical_form():
    assert DyadicMass.of(4, 3) == DyadicMass(1, 1)
    assert DyadicMass.of(0, 7) == DyadicMass(0, 0)
    assert DyadicMass.of(3, -2) == DyadicMass(12, 0)
    with pytest.raises(ValueError):
        DyadicMass(2, 3)


def test_dyadic_arithmetic_and_compare():
    a, b = DyadicMass.of(1, 2), DyadicMass.of(3, 3)
    assert a + b == Fraction(5, 8)
    assert b - a == Fraction(1, 8)
    assert a * b == Fraction(3, 32)
    assert 2 * a == Fraction(1, 2)
    assert a < b and b > Fraction(1, 4) and a <= 0.25
    assert a.halve(2) == Fraction(1, 16)
    assert str(DyadicMass.of(11, 4)) == "11/2^4"
    assert DyadicMass.from_fraction(Fraction(5, 16)).scaled_to(6) == 20


def test_dyadic_rejects_non_dyadic():
    with pytest.raises(ValueError):
        DyadicMass.from_fraction(Fraction(1, 3))
    with pytest.raises(ValueError):
        DyadicMass.of(1, 2).scaled_to(1)


# -- SpanDist -----------------------------------------------------------------


def test_spandist_normalizes_representation():
    d = SpanDist(-2, [0, 2, 0, 2, 0], 2)
    assert (d.min_offset, d.numerators, d.exponent) == (-1, (1, 0, 1), 1)
    assert d[-1] == Fraction(1, 2) and d[0] == 0 and d[5] == 0
    assert d.numerator_at(1, 4) == 8


@pytest.mark.parametrize(
    "args",
    [(0, [1, 1], 2), (0, [3, -1], 1), (0, [0, 0], 0), (0, [], 0)],
)
def test_spandist_invalid(args):
    with pytest.raises(ValueError):
        SpanDist(*args)


def test_spandist_immutable():
    d = delta(0)
    with pytest.raises(AttributeError):
        d.exponent = 3


def test_phi_small_cases():
    p3 = phi(delta(), delta())
    assert p3.as_dict() == {-1: Fraction(1, 2), 1: Fraction(1, 2)}
    assert shift(p3, 2).as_dict() == {1: Fraction(1, 2), 3: Fraction(1, 2)}


def test_combine_requires_unit_weight():
    with pytest.raises(ValueError):
        combine([(Fraction(1, 2), 0, delta())])


def test_tails_and_moments():
    p5 = SpanDist.from_masses({-2: Fraction(1, 4), 0: Fraction(1, 4), 1: Fraction(1, 2)})
    assert tail_nonneg(p5) == Fraction(3, 4)
    assert tail_nonpos(p5) == Fraction(1, 2)
    assert mean(p5) == 0
    assert variance(p5) == Fraction(3, 2)
    assert support_bounds(p5) == (-2, 1)


def test_csv_rejects_gaps():
    with pytest.raises(ValueError):
        SpanDist.from_csv("offset,numerator,exponent\n0,1,1\n2,1,1\n")


def test_json_rejects_noncanonical():
    with pytest.raises(ValueError):
        SpanDist.from_json('{"min_offset":0,"exponent":2,"numerators":[2,2]}')


# -- properties ---------------------------------------------------------------


@given(span_dists())
def test_normalized(d):
    assert sum(m.as_fraction() for _, m in d.items()) == 1
    assert d.numerators[0] and d.numerators[-1]


@given(span_dists())
def test_serialization_round_trip(d):
    assert SpanDist.from_json(d.to_json()) == d
    assert SpanDist.from_csv(d.to_csv()) == d


@given(span_dists())
def test_reflect_is_involution(d):
    r = reflect(d)
    assert reflect(r) == d
    assert mean(r) == -mean(d)
    assert variance(r) == variance(d)
    assert tail_nonneg(r) == tail_nonpos(d)


@given(span_dists(), span_dists(), span_dists())
@settings(max_examples=60)
def test_convolution_algebra(a, b, c):
    assert convolve(a, b) == convolve(b, a)
    assert convolve(convolve(a, b), c) == convolve(a, convolve(b, c))
    assert convolve(a, delta(3)) == shift(a, 3)
    assert reflect(convolve(a, b)) == convolve(reflect(a), reflect(b))
    assert mean(convolve(a, b)) == mean(a) + mean(b)
    assert variance(convolve(a, b)) == variance(a) + variance(b)


@given(span_dists(), span_dists())
def test_phi_moments(a, b):
    # half-half mixture of a shifted down and b shifted up
    p = phi(a, b)
    assert mean(p) == (mean(a) + mean(b)) / 2
    second = lambda d: variance(d) + mean(d) ** 2
    assert variance(p) + mean(p) ** 2 == (second(shift(a, -1)) + second(shift(b, 1))) / 2
    assert reflect(p) == phi(reflect(b), reflect(a))
