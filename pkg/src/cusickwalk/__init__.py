"""Exact sum-of-binary-digits measures via stopped random walks."""

from .dist import (
    DyadicMass,
    SpanDist,
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
from .measures import (
    MeasureCache,
    MuView,
    binary_weight,
    clt_probe,
    empirical_frequency,
    limit_iterate,
    mu1_value,
    mu_nonneg_mass,
    mu_window,
    p_from_mu,
    p_of,
)
from .words import (
    BOTTOM,
    EMPTY,
    Word,
    bar,
    block_count,
    chain_prefix,
    letter_counts,
    odd_to_word,
    rev,
    word_to_odd,
)

__version__ = "0.1.0"
