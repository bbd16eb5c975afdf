import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import builtin
from lochom.space import ball
from lochom.sweep import exact_prefix_sums, neighbourhood, prefix_lengths, prefix_means, scatter_max

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=150, deadline=None)
@given(st.lists(finite, min_size=1, max_size=60))
def test_prefix_sums_are_correctly_rounded(xs):
    got = exact_prefix_sums(np.array(xs))
    assert got.tolist() == [math.fsum(xs[:i + 1]) for i in range(len(xs))]


def test_prefix_sums_survive_cancellation():
    xs = np.array([1e16, 1.0, -1e16, 1.0])
    assert exact_prefix_sums(xs).tolist() == [1e16, 1e16 + 1.0, 1.0, 2.0]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 127), st.floats(1e-3, 0.3))
def test_prefixes_are_exactly_the_balls(c, cap):
    space, _ = builtin("grid1d", N=128)
    ids, ds = neighbourhood(space, c, cap)
    lengths = prefix_lengths(ds, cap)
    seen = {tuple(sorted(ids[:L].tolist())) for L in lengths}
    radii = sorted(set(space.dist_row(c)[space.dist_row(c) < cap].tolist()))
    expected = {tuple(ball(space, c, float(np.nextafter(r, np.inf))).tolist()) for r in radii}
    assert seen == expected


def test_prefix_means_match_fsum():
    rng = np.random.default_rng(1)
    w = rng.random(40)
    v = rng.standard_normal(40)
    lengths = np.array([1, 5, 17, 40])
    means, masses = prefix_means(w, v, lengths)
    for L, m, s in zip(lengths, means, masses):
        assert s == math.fsum(w[:L])
        assert m == math.fsum((w[:L] * v[:L]).tolist()) / math.fsum(w[:L])


def test_scatter_max_takes_the_best_prefix_containing_each_point():
    out = np.zeros(5)
    ids = np.array([3, 1, 4, 0, 2])
    scatter_max(out, ids, np.array([1, 3, 5]), np.array([2.0, 5.0, 1.0]))
    assert out.tolist() == [1.0, 5.0, 1.0, 5.0, 5.0]
