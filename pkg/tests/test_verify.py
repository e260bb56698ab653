from fractions import Fraction as F

import pytest

from cusickwalk.dist import variance
from cusickwalk.measures import p_of
from cusickwalk.verify import SUITES, all_words, alt_variance, min_variance, run_suite
from cusickwalk.words import Word, alternating


def test_all_words_count():
    assert sum(1 for _ in all_words(5)) == 63
    assert sum(1 for _ in all_words(5, min_len=5)) == 32


def test_closed_forms_small():
    assert [min_variance(k) for k in range(3)] == [1, F(3, 2), F(7, 4)]
    assert alt_variance(0) == 1 and alt_variance(2) == variance(p_of("LR"))
    assert variance(p_of(alternating(7))) == alt_variance(7)
    assert variance(p_of(Word(0, 9))) == min_variance(9)


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suites_small(name):
    kwargs = {"max_len": 6}
    if name == "peacock":
        kwargs = {"chains": 10, "length": 12}
    if name == "deconvolution":
        kwargs = {"max_t": 255}
    rep = run_suite(name, **kwargs)
    assert rep.ok, rep.failures
    assert rep.checked > 0
    assert rep.to_json_obj()["suite"] == name


def test_peacock_notes_flat_steps():
    rep = run_suite("peacock", chains=20, length=15, seed=1)
    flat = rep.notes["flat_steps"]
    # x^2 and the variance always grow strictly; |x| does not
    assert flat["square"] == 0 and flat["variance"] == 0 and flat["abs"] > 0


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")
