import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import builtin, func
from lochom.errors import ArgumentError, PreconditionError
from lochom.functions import atom_spike, fixture_suite
from lochom.maximal import (
    differentiation_check, local_maximal, local_maximal_naive, strong_type_check, weak_type_check,
)

ULP8 = 8 * np.finfo(float).eps


@pytest.mark.parametrize("level", [1, 2, 3])
def test_pruned_sweep_equals_naive_balls(level):
    space, structure = builtin("grid1d", N=256)
    for f in fixture_suite(space).values():
        fast = local_maximal(space, structure, f, level).array
        assert np.array_equal(fast, local_maximal_naive(space, structure, f, level))


def test_pruned_sweep_equals_naive_on_a_radius_grid_and_in_2d():
    space, structure = builtin("grid2d", side=16)
    f = func(np.random.default_rng(2).standard_normal(space.n))
    assert np.array_equal(local_maximal(space, structure, f, 1).array,
                          local_maximal_naive(space, structure, f, 1))
    space, structure = builtin("grid1d", N=256)
    grid = np.linspace(0.001, 0.02, 7)
    f = func(np.random.default_rng(3).standard_normal(space.n))
    assert np.array_equal(local_maximal(space, structure, f, 1, grid).array,
                          local_maximal_naive(space, structure, f, 1, grid))


def test_radius_grid_beyond_cap_is_refused():
    space, structure = builtin("grid1d", N=256)
    with pytest.raises(PreconditionError):
        local_maximal(space, structure, func(np.ones(256)), 1, [1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-100, 100).filter(lambda c: abs(c) > 1e-6))
def test_sublinear_and_homogeneous(seed, c):
    space, structure = builtin("grid1d", N=128)
    rng = np.random.default_rng(seed)
    f, g = func(rng.standard_normal(128)), func(rng.standard_normal(128) * 3)
    Mf = local_maximal(space, structure, f, 1).array
    Mg = local_maximal(space, structure, g, 1).array
    Mfg = local_maximal(space, structure, f + g, 1).array
    assert np.all(Mfg <= (Mf + Mg) * (1 + ULP8))
    Mcf = local_maximal(space, structure, f.scaled(c), 1).array
    assert np.allclose(Mcf, abs(c) * Mf, rtol=ULP8, atol=0)


def test_pointwise_bound_and_weak_type_on_spike():
    space, structure = builtin("grid1d", N=256)
    spike = atom_spike(space)
    assert differentiation_check(space, structure, spike, 1).passed
    rep = weak_type_check(space, structure, spike, 1, np.geomspace(1e-4, 1, 17))
    assert rep.passed and 0 < rep.measured["c_hat"] < np.inf


def test_maximal_of_constant_is_constant_on_omega():
    space, structure = builtin("grid1d", N=128)
    M = local_maximal(space, structure, func(np.full(128, -2.0)), 1).array
    omega = structure.omega(1)
    assert np.all(M[omega] == 2.0)
    assert np.all(np.delete(M, omega) == 0.0)


def test_strong_type_rejects_p_at_most_one():
    space, structure = builtin("grid1d", N=128)
    with pytest.raises(ArgumentError):
        strong_type_check(space, structure, func(np.ones(128)), 1, 1.0)
    rep = strong_type_check(space, structure, func(np.arange(128.0)), 1, 2.0)
    assert rep.passed and rep.measured["ratio"] > 0
