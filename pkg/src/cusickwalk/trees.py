"""Planar binary trees as stopping rules for the simple random walk.

A tree is read as a stopping time: at a node, flip a fair coin; -1 moves to
the left child, +1 to the right child; stop at a leaf.  The law of the walk
at that moment is the tree's embedded distribution.  Trees for words are
grown by keeping one subtree and replacing the other with a copy of the
whole current tree.

This module deliberately does not use the measure recursion; it is the
independent route used to cross-check it.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .dist import DyadicMass, SpanDist
from .words import Bottom, Word, parse_word

__all__ = [
    "Leaf",
    "LEAF",
    "Node",
    "PlanarTree",
    "WalkSample",
    "SampleSummary",
    "tree_of",
    "height",
    "stopping_time",
    "walk",
    "leaf_census",
    "enumerate_distribution",
    "expected_stop",
    "sample_stopped",
    "render_bracket",
    "render_outline",
    "HEIGHT_BUDGET",
]

HEIGHT_BUDGET = 30
SAMPLE_CHUNK = 1 << 16


class Leaf:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    height = 0
    leaves = 1

    def __repr__(self):
        return "LEAF"

    def __reduce__(self):
        return (Leaf, ())


LEAF = Leaf()


@dataclass(frozen=True, eq=False)
class Node:
    left: "PlanarTree"
    right: "PlanarTree"
    height: int = field(init=False)
    leaves: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "height", 1 + max(self.left.height, self.right.height))
        object.__setattr__(self, "leaves", self.left.leaves + self.right.leaves)

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        return _same_shape(self, other, set())

    def __hash__(self):
        return hash((self.height, self.leaves))

    def __repr__(self):
        return render_bracket(self) if self.leaves <= 64 else f"Node(height={self.height}, leaves={self.leaves})"


def _same_shape(a, b, seen: set) -> bool:
    if a is b:
        return True
    if isinstance(a, Leaf) or isinstance(b, Leaf):
        return False
    if a.height != b.height or a.leaves != b.leaves:
        return False
    key = (id(a), id(b))
    if key in seen:
        return True
    ok = _same_shape(a.left, b.left, seen) and _same_shape(a.right, b.right, seen)
    if ok:
        seen.add(key)
    return ok


PlanarTree = Union[Leaf, Node]


def height(tree: PlanarTree) -> int:
    return tree.height


def tree_of(w: Word | Bottom | str) -> PlanarTree:
    """Grow the tree for a word.

    Starting from ``[leaf, leaf]``, letter L replaces the left subtree with
    the current tree and letter R replaces the right subtree.  Untouched
    subtrees are shared, not copied.
    """
    if isinstance(w, str):
        w = parse_word(w)
    if isinstance(w, Bottom):
        return LEAF
    tree = Node(LEAF, LEAF)
    for letter in w:
        if letter == "L":
            tree = Node(tree, tree.right)
        else:
            tree = Node(tree.left, tree)
    return tree


def stopping_time(tree: PlanarTree, path: Sequence[int]) -> int:
    """Number of steps taken before reaching a leaf along ``path``."""
    steps = 0
    node = tree
    while isinstance(node, Node):
        if steps >= len(path):
            raise ValueError("path is shorter than the stopping time")
        node = node.left if path[steps] < 0 else node.right
        steps += 1
    return steps


@dataclass(frozen=True)
class WalkSample:
    steps: tuple[int, ...]
    stop_index: int
    terminal: int


def walk(tree: PlanarTree, path: Sequence[int]) -> WalkSample:
    tau = stopping_time(tree, path)
    return WalkSample(tuple(path), tau, sum(path[:tau]))


def leaf_census(tree: PlanarTree) -> Counter:
    """Count leaves by ``(walk value, depth)``.

    Shared subtrees are visited once, so this is polynomial in the word
    length even though the number of root-to-leaf paths is exponential.
    """
    memo: dict[int, Counter] = {}

    def visit(node) -> Counter:
        if isinstance(node, Leaf):
            return Counter({(0, 0): 1})
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit
        out: Counter = Counter()
        for (x, depth), n in visit(node.left).items():
            out[x - 1, depth + 1] += n
        for (x, depth), n in visit(node.right).items():
            out[x + 1, depth + 1] += n
        memo[key] = out
        return out

    return visit(tree)


def _check_budget(tree: PlanarTree):
    if tree.height > HEIGHT_BUDGET:
        raise ValueError(f"tree height {tree.height} exceeds the budget {HEIGHT_BUDGET}")


def enumerate_distribution(tree: PlanarTree) -> SpanDist:
    """Exact law of the walk at the stopping time: each leaf carries ``2**-depth``."""
    _check_budget(tree)
    census = leaf_census(tree)
    e = tree.height
    masses: dict[int, int] = {}
    for (x, depth), n in census.items():
        masses[x] = masses.get(x, 0) + (n << (e - depth))
    lo, hi = min(masses), max(masses)
    return SpanDist(lo, [masses.get(x, 0) for x in range(lo, hi + 1)], e)


def expected_stop(tree: PlanarTree) -> Fraction:
    """Mean number of steps before stopping."""
    _check_budget(tree)
    e = tree.height
    total = sum(n * depth << (e - depth) for (_, depth), n in leaf_census(tree).items())
    return Fraction(total, 1 << e)


def render_bracket(tree: PlanarTree) -> str:
    if isinstance(tree, Leaf):
        return "•"
    return f"[{render_bracket(tree.left)},{render_bracket(tree.right)}]"


def render_outline(tree: PlanarTree, indent: str = "  ") -> str:
    """Indented outline with the walk value at every node."""
    lines = []

    def visit(node, depth, x, label):
        tag = "leaf" if isinstance(node, Leaf) else "node"
        lines.append(f"{indent * depth}{label}{tag} {x:+d}")
        if isinstance(node, Node):
            visit(node.left, depth + 1, x - 1, "-1: ")
            visit(node.right, depth + 1, x + 1, "+1: ")

    visit(tree, 0, 0, "")
    return "\n".join(lines)


# -- Monte Carlo -------------------------------------------------------------


def _flatten(tree: PlanarTree) -> tuple[np.ndarray, np.ndarray]:
    """Child index tables; leaves are encoded as -1."""
    index: dict[int, int] = {}
    lefts: list[int] = []
    rights: list[int] = []

    def visit(node) -> int:
        if isinstance(node, Leaf):
            return -1
        key = id(node)
        if key in index:
            return index[key]
        i = len(lefts)
        index[key] = i
        lefts.append(0)
        rights.append(0)
        lefts[i] = visit(node.left)
        rights[i] = visit(node.right)
        return i

    visit(tree)
    return np.array(lefts, dtype=np.int64), np.array(rights, dtype=np.int64)


@dataclass
class SampleSummary:
    """Merged Monte Carlo result.

    ``counts`` maps walk values to hit counts over the stopped samples.
    ``truncated`` counts samples still running at the depth cap.
    """

    count: int
    counts: dict[int, int]
    truncated: int
    mean: float
    variance: float
    variance_stderr: float
    mean_stop: float

    def frequencies(self) -> dict[int, Fraction]:
        return {d: Fraction(c, self.count) for d, c in sorted(self.counts.items())}

    def total_variation(self, dist: SpanDist) -> float:
        keys = set(self.counts) | {d for d, _ in dist.items()}
        return 0.5 * sum(
            abs(self.counts.get(d, 0) / self.count - float(dist[d])) for d in keys
        ) + 0.5 * self.truncated / self.count

    def to_json_obj(self) -> dict:
        return {
            "count": self.count,
            "counts": {str(d): c for d, c in sorted(self.counts.items())},
            "truncated": self.truncated,
            "mean": self.mean,
            "variance": self.variance,
            "variance_stderr": self.variance_stderr,
            "mean_stop": self.mean_stop,
        }


def _chunk_stream(seed: int, chunk: int) -> np.random.Generator:
    # Philox keyed by (seed, chunk): disjoint counter-based streams
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def _sample_chunks(lefts, rights, chunks, count, seed, depth_cap):
    values: Counter = Counter()
    moments = np.zeros(5)
    stop_sum = 0
    truncated = 0
    for c in chunks:
        n = min(SAMPLE_CHUNK, count - c * SAMPLE_CHUNK)
        rng = _chunk_stream(seed, c)
        steps = rng.integers(0, 2, size=(n, depth_cap), dtype=np.int8) * 2 - 1
        node = np.zeros(n, dtype=np.int64)
        pos = np.zeros(n, dtype=np.int64)
        tau = np.zeros(n, dtype=np.int64)
        active = np.ones(n, dtype=bool) if len(lefts) else np.zeros(n, dtype=bool)
        for k in range(depth_cap):
            if not active.any():
                break
            s = steps[:, k]
            nxt = np.where(s < 0, lefts[node], rights[node])
            pos = np.where(active, pos + s, pos)
            tau = np.where(active, k + 1, tau)
            active &= nxt >= 0
            node = np.where(active, nxt, node)
        done = ~active
        truncated += int(active.sum())
        x = pos[done]
        vals, cnt = np.unique(x, return_counts=True)
        values.update(dict(zip(vals.tolist(), cnt.tolist())))
        xf = x.astype(np.float64)
        moments += [xf.size, xf.sum(), (xf**2).sum(), (xf**3).sum(), (xf**4).sum()]
        stop_sum += int(tau[done].sum())
    return values, moments, stop_sum, truncated


def sample_stopped(
    tree: PlanarTree,
    count: int,
    seed: int = 0,
    workers: int = 1,
    depth_cap: int | None = None,
) -> SampleSummary:
    """Monte Carlo estimate of the stopped walk's law.

    The sample is cut into fixed chunks of 65536 draws and chunk ``i`` uses
    a Philox stream keyed by ``(seed, i)``.  Workers take whole chunks, so
    the merged result does not depend on ``workers``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    cap = tree.height if depth_cap is None else depth_cap
    cap = max(cap, 1)
    lefts, rights = _flatten(tree)
    n_chunks = -(-count // SAMPLE_CHUNK)
    plan = [list(range(w, n_chunks, workers)) for w in range(workers)]
    if workers == 1:
        parts = [_sample_chunks(lefts, rights, plan[0], count, seed, cap)]
    else:
        with ProcessPoolExecutor(workers) as ex:
            futs = [
                ex.submit(_sample_chunks, lefts, rights, p, count, seed, cap) for p in plan
            ]
            parts = [f.result() for f in futs]
    values: Counter = Counter()
    moments = np.zeros(5)
    stop_sum = truncated = 0
    for v, m, s, t in parts:
        values.update(v)
        moments += m
        stop_sum += s
        truncated += t
    # integer moments are exact in float64 at these sizes; sum order is irrelevant
    n, s1, s2, s3, s4 = moments
    if n:
        m1, e2, e3, e4 = s1 / n, s2 / n, s3 / n, s4 / n
        var = e2 - m1 * m1
        central4 = e4 - 4 * m1 * e3 + 6 * m1 * m1 * e2 - 3 * m1**4
        se = float(np.sqrt(max(central4 - var * var, 0.0) / n))
    else:
        m1 = var = se = float("nan")
    return SampleSummary(
        count=count,
        counts=dict(sorted(values.items())),
        truncated=truncated,
        mean=m1,
        variance=var,
        variance_stderr=se,
        mean_stop=stop_sum / n if n else float("nan"),
    )
