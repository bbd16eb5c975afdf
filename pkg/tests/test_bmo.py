import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import builtin, func
from lochom.bmo import (
    bmo_equiv_check, bmo_p_seminorm, bmo_seminorm, default_ball, distribution, gamma_bound, jn_construct,
    jn_radius_cap, jn_verify, uniform_exponent,
)
from lochom.errors import ArgumentError, PreconditionError
from lochom.functions import atom_spike, fixture_suite, indicator_halfspace, log_singularity, two_valued
from lochom.space import Level, LocalStructure, average, ball, measure


def _structure(B, eps=0.0625):
    ids = np.arange(4)
    return LocalStructure(tuple(Level(ids, eps, B, 3.0) for _ in range(3)), 4)


def test_radius_cap_examples():
    R, alpha = jn_radius_cap(_structure(1.0), 1)
    assert alpha == 8.5
    assert R == pytest.approx(0.125 / 8.5, rel=1e-15)
    assert alpha * R == pytest.approx(0.125, rel=1e-15)
    R2, alpha2 = jn_radius_cap(_structure(2.0), 1)
    assert alpha2 == 50.0
    assert R2 == pytest.approx(0.125 / 50, rel=1e-15)


def _scan_oracle(space, structure, f, cap, p=1.0):
    """Explicit balls at every realized radius, averaged with the generic helpers."""
    best = 0.0
    for c in structure.omega(1):
        d = space.dist_row(int(c))
        for r in sorted(set(d[d < cap].tolist())):
            B = ball(space, int(c), float(np.nextafter(r, np.inf)))
            m = average(f, B, space)
            dev = func(np.abs(f.effective - m) ** p)
            best = max(best, average(dev, B, space))
    return best ** (1 / p)


def test_seminorms_match_explicit_scan():
    space, structure = builtin("grid1d", N=128)
    for f in fixture_suite(space).values():
        assert bmo_seminorm(space, structure, f, 1) == pytest.approx(
            _scan_oracle(space, structure, f, 2 * structure.eps(1)), rel=1e-12, abs=1e-15)
        assert bmo_p_seminorm(space, structure, f, 1, 3.0) == pytest.approx(
            _scan_oracle(space, structure, f, jn_radius_cap(structure, 1)[0], 3.0), rel=1e-12, abs=1e-15)


def test_constant_has_zero_seminorms():
    space, structure = builtin("grid1d", N=128)
    c = func(np.full(128, 7.0))
    assert bmo_seminorm(space, structure, c, 1) == 0
    assert bmo_p_seminorm(space, structure, c, 1, 2) == 0
    with pytest.raises(ArgumentError):
        bmo_p_seminorm(space, structure, c, 1, 1.0)


def test_indicator_seminorm_is_near_one_half():
    space, structure = builtin("grid1d", N=1024)
    val = bmo_seminorm(space, structure, indicator_halfspace(space), 1)
    assert 0.5 - 1 / 1024 < val <= 0.5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50), st.integers(-6, 6))
def test_seminorm_ignores_constants_and_scales(seed, shift, e):
    space, structure = builtin("grid1d", N=128)
    f = func(np.random.default_rng(seed).integers(-8, 8, 128).astype(float))
    base = bmo_seminorm(space, structure, f, 1)
    shifted = bmo_seminorm(space, structure, func(f.values + math.floor(shift)), 1)
    assert shifted == pytest.approx(base, rel=1e-12, abs=1e-12)
    c = 2.0 ** e
    assert bmo_seminorm(space, structure, f.scaled(-c), 1) == c * base
    assert bmo_p_seminorm(space, structure, f.scaled(c), 1, 2) == pytest.approx(
        c * bmo_p_seminorm(space, structure, f, 1, 2), rel=8 * np.finfo(float).eps)


def test_cap_monotonicity_holder_and_sup_bound():
    space, structure = builtin("grid1d", N=256)
    R, _ = jn_radius_cap(structure, 1)
    for f in fixture_suite(space).values():
        full = bmo_seminorm(space, structure, f, 1)
        small = bmo_seminorm(space, structure, f, 1, cap=R)
        assert small <= full
        assert bmo_p_seminorm(space, structure, f, 1, 2) >= small * (1 - 1e-12)
        assert full <= 2 * np.max(np.abs(f.values)) + 1e-15


def test_uniform_exponent_bounds_every_small_ball():
    space, structure = builtin("grid1d", N=256)
    f = func(np.random.default_rng(5).standard_normal(256))
    sem = bmo_seminorm(space, structure, f, 1)
    b = uniform_exponent(space, structure, f, 1, sem)
    R, _ = jn_radius_cap(structure, 1)
    assert 0 < b < math.inf
    worst = math.inf
    for c in structure.omega(1):
        d = space.dist_row(int(c))
        for r in sorted(set(d[d < R].tolist())):
            B = ball(space, int(c), float(np.nextafter(r, np.inf)))
            mass = measure(space, B)
            g = np.abs(f.values[B] - average(f, B, space))
            for t in np.unique(g[g > 0]):
                D = space.weights[B][g >= t].sum()
                worst = min(worst, sem / t * math.log(2 * mass / D))
    assert b == pytest.approx(worst, rel=1e-9)


def test_gamma_bound_closed_forms():
    assert gamma_bound(1.0, 1.0) == pytest.approx(2.0)
    assert gamma_bound(2.0, 2.0) == pytest.approx(1.0)
    assert gamma_bound(math.inf, 2.0) == 0.0
    t = np.linspace(0, 60, 600001)
    integral = np.trapezoid(2 * 4 * t ** 3 * np.exp(-1.5 * t), t)
    assert gamma_bound(1.5, 4.0) == pytest.approx(integral ** 0.25, rel=1e-6)


def test_distribution_is_nonincreasing_and_bounded():
    rng = np.random.default_rng(0)
    g = np.abs(rng.standard_normal(50))
    w = rng.random(50)
    lam = np.linspace(0, 3, 40)
    D = distribution(g, w, lam)
    assert np.all(np.diff(D) <= 0) and D[0] <= w.sum()
    assert D[-1] == w[g > 3].sum()


def test_jn_verify_trivial_and_two_valued():
    space, structure = builtin("grid1d", N=1024)
    S = default_ball(space, structure, 1)
    rep = jn_verify(space, structure, func(np.ones(1024)), 1, S)
    assert rep.passed and rep.measured["b_hat"] == math.inf
    c = S[0]
    vals = np.where(np.arange(1024) < c, 1.0, -1.0)
    vals[c] = 0.0
    f = func(vals)
    sem = bmo_seminorm(space, structure, f, 1)
    rep = jn_verify(space, structure, f, 1, S, lambda_grid=[0.1, 0.5, 0.9, 1.5])
    mu = measure(space, ball(space, c, S[1]))
    assert rep.measured["b_hat"] == pytest.approx(sem / 0.9 * math.log(2 * mu / (mu - 1 / 1024)), rel=1e-12)
    assert rep.tables["jn"].columns == ("lambda", "D", "bound")


def test_jn_verify_refuses_inadmissible_balls():
    space, structure = builtin("grid1d", N=256)
    R, _ = jn_radius_cap(structure, 1)
    f = log_singularity(space)
    with pytest.raises(PreconditionError):
        jn_verify(space, structure, f, 1, (0, R))
    with pytest.raises(PreconditionError):
        jn_verify(space, structure, f, 1, (128, 2 * R))


def test_construction_on_constant_is_root_only():
    space, structure = builtin("grid1d", N=256)
    tree = jn_construct(space, structure, func(np.full(256, 2.0)), 1, default_ball(space, structure, 1))
    assert tree.report.passed
    assert tree.report.measured["nodes_per_depth"] == [1, 0, 0, 0]


def test_construction_splits_around_spikes():
    space, structure = builtin("grid1d", N=1024, levels=3)
    S = default_ball(space, structure, 1)
    c = S[0]
    vals = np.zeros(1024)
    vals[[c - 9, c + 6]] = [1.0, -2.0]
    tree = jn_construct(space, structure, func(vals), 1, S, 3)
    rep = tree.report
    assert rep.passed, rep.checks
    assert rep.measured["nodes_per_depth"][1] >= 1
    root = tree.nodes[0]
    for idx in root.children:
        child = tree.nodes[idx]
        assert set(child.members.tolist()) <= set(root.members.tolist())


def test_log_singularity_tree_satisfies_decay():
    space, structure = builtin("grid1d", N=1024)
    f = log_singularity(space)
    tree = jn_construct(space, structure, f, 1, default_ball(space, structure, 1), 3)
    assert tree.report.passed
    assert tree.lambda1 >= tree.lambda0 > 0


def test_equivalence_report_two_valued_exact_on_step_weights():
    space, structure = builtin("weighted_grid", N=1024, profile="step")
    rep = bmo_equiv_check(space, structure, two_valued(space), 1, 2.0)
    assert rep.measured["ratio"] == 1.0
    assert rep.passed


def test_equivalence_report_constant_and_spike():
    space, structure = builtin("grid1d", N=256)
    rep = bmo_equiv_check(space, structure, func(np.ones(256)), 1, 2.0)
    assert rep.measured["ratio"] == 1.0 and rep.passed
    rep = bmo_equiv_check(space, structure, atom_spike(space), 1, 4.0, S=default_ball(space, structure, 1))
    assert rep.passed and rep.measured["gamma_dominates"]
    assert rep.measured["b_hat_single_ball"] >= rep.measured["b_hat"]
