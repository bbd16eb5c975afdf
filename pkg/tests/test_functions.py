import numpy as np
import pytest

from conftest import builtin
from lochom.errors import UsageError
from lochom.functions import FIXTURES, LIBRARY, fixture_suite, function_library


def test_library_values_on_grid():
    space, _ = builtin("grid1d", N=8)
    x = space.coords[:, 0]
    assert np.all(function_library("constant", {"c": 3}, space).values == 3.0)
    assert function_library("indicator_halfspace", None, space).values.tolist() == [1, 1, 1, 1, 0, 0, 0, 0]
    assert function_library("two_valued", {"threshold": 0.25}, space).values.tolist() == [1, 1] + [-1] * 6
    spike = function_library("atom_spike", {"location": [0.9], "height": 2}, space).values
    assert spike.tolist() == [0] * 7 + [2.0]
    log = function_library("log_singularity", None, space).values
    anchor = space.nearest([0.5])
    assert log[anchor] == pytest.approx(np.log(1 / 8))
    assert np.allclose(log[x > x[anchor]], np.log(x[x > x[anchor]] - x[anchor]))


def test_random_piecewise_is_seeded_and_piecewise():
    space, _ = builtin("grid1d", N=512)
    a = function_library("random_piecewise", {"seed": 3, "pieces": 5}, space).values
    b = function_library("random_piecewise", {"seed": 3, "pieces": 5}, space).values
    c = function_library("random_piecewise", {"seed": 4, "pieces": 5}, space).values
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert len(np.unique(a)) <= 5
    assert np.count_nonzero(np.diff(a)) <= 4


def test_fixture_suite_order_and_keys():
    space, _ = builtin("grid1d", N=64)
    suite = fixture_suite(space)
    assert tuple(suite) == FIXTURES
    assert set(FIXTURES) <= set(LIBRARY)


def test_unknown_names_and_bad_parameters():
    space, _ = builtin("grid1d", N=16)
    with pytest.raises(UsageError):
        function_library("sawtooth", None, space)
    with pytest.raises(UsageError):
        function_library("constant", {"height": 2}, space)
