from fractions import Fraction as F

import pytest

from cusickwalk.dist import variance
from cusickwalk.measures import p_of
from cusickwalk.trees import (
    HEIGHT_BUDGET,
    LEAF,
    Node,
    enumerate_distribution,
    expected_stop,
    leaf_census,
    render_bracket,
    render_outline,
    sample_stopped,
    stopping_time,
    tree_of,
    walk,
)
from cusickwalk.verify import all_words
from cusickwalk.words import BOTTOM, Word

C = Node(LEAF, LEAF)


def test_small_trees():
    assert tree_of(BOTTOM) is LEAF
    assert tree_of("eps") == C
    assert tree_of("L") == Node(C, LEAF)
    assert tree_of("R") == Node(LEAF, C)
    assert render_bracket(tree_of("L")) == "[[•,•],•]"
    # LR: the right subtree of [[.,.],.] is replaced by the whole tree
    assert tree_of("LR") == Node(C, Node(C, LEAF))


def test_growth_rule():
    for w in all_words(6):
        t = tree_of(w)
        tl, tr = tree_of(w + "L"), tree_of(w + "R")
        assert tl.left == t and tl.right == t.right
        assert tr.left == t.left and tr.right == t


def test_structural_sharing():
    t = tree_of(Word.from_str("R" * 200))
    assert t.height == 201 and t.leaves == 202
    t = tree_of(Word.from_str("LR" * 40))
    # leaves grow like Fibonacci, but the shared DAG stays linear
    assert t.leaves > 10**16


def test_example_tree_shapes():
    # the worked example for LRLL
    assert render_bracket(tree_of("LRLL")) == "[[[[•,•],[[•,•],•]],[[•,•],•]],[[•,•],•]]"


def test_stopping_time_and_walk():
    t = tree_of("L")
    assert stopping_time(t, [-1, -1]) == 2
    assert stopping_time(t, [1, -1, -1]) == 1
    s = walk(t, [-1, 1, 1])
    assert s.stop_index == 2 and s.terminal == 0
    with pytest.raises(ValueError):
        stopping_time(t, [-1])


def test_leaf_census_total_mass():
    for w in all_words(7):
        census = leaf_census(tree_of(w))
        assert sum(n * F(1, 2**depth) for (_, depth), n in census.items()) == 1


@pytest.mark.parametrize("w", ["eps", "L", "R", "LR", "LRL", "LRLL", "RRLRLLR"])
def test_oracle_and_wald(w):
    tree = tree_of(w)
    assert enumerate_distribution(tree) == p_of(w)
    assert expected_stop(tree) == variance(p_of(w))


def test_height_budget():
    tree = tree_of(Word.from_str("L" * HEIGHT_BUDGET))
    with pytest.raises(ValueError):
        enumerate_distribution(tree)


def test_outline():
    lines = render_outline(tree_of("eps")).splitlines()
    assert lines == ["node +0", "  -1: leaf -1", "  +1: leaf +1"]


def test_sampler_basic():
    s = sample_stopped(tree_of("L"), 200_000, seed=7)
    assert s.truncated == 0 and sum(s.counts.values()) == 200_000
    assert s.total_variation(p_of("L")) < 0.01
    assert abs(s.variance - 1.5) < 4 * s.variance_stderr
    assert abs(s.mean_stop - 1.5) < 0.01


def test_sampler_reproducible_across_workers():
    tree = tree_of("RLRR")
    a = sample_stopped(tree, 150_000, seed=99, workers=1)
    b = sample_stopped(tree, 150_000, seed=99, workers=3)
    assert a == b
    c = sample_stopped(tree, 150_000, seed=100)
    assert c.counts != a.counts


def test_sampler_depth_cap():
    s = sample_stopped(tree_of("LLLL"), 10_000, seed=1, depth_cap=2)
    assert s.truncated > 0
    assert s.truncated + sum(s.counts.values()) == 10_000


def test_sampler_rejects_empty():
    with pytest.raises(ValueError):
        sample_stopped(LEAF, 0)
