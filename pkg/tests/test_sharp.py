import numpy as np
import pytest

from conftest import builtin, func
from lochom.dyadic import build_forest, depth_for_singletons
from lochom.errors import PreconditionError
from lochom.experiment import cz_lambdas
from lochom.functions import fixture_suite
from lochom.sharp import (
    admissible_generation, ball_sharp, choose_root, corollary_ball_check, cover_lp_check, cube_abs_averages,
    cz_bruteforce, cz_decompose, cz_family_properties, dyadic_maximal, dyadic_sharp, fs_verify,
    left_half_pattern, sharp_comparison_check, subtree,
)


@pytest.fixture(scope="module")
def setting():
    space, structure = builtin("grid1d", N=512)
    forest = build_forest(space, structure, 1, 0.25, depth_for_singletons(space, 0.25))
    return space, structure, forest


def _functions(space):
    fx = list(fixture_suite(space).values())
    rng = np.random.default_rng(11)
    fx += [func(rng.standard_normal(space.n)), func(rng.exponential(size=space.n))]
    return fx


def test_decomposition_matches_bruteforce(setting):
    space, structure, forest = setting
    for gen in (1, None):
        root = choose_root(space, structure, forest, generation=gen)
        for f in _functions(space):
            av = cube_abs_averages(space, forest, f, subtree(forest, root))
            for lam in cz_lambdas(av, root, 8):
                assert cz_decompose(space, forest, f, root, lam).cubes == cz_bruteforce(space, forest, f, root, lam)


def test_threshold_below_root_average_is_refused(setting):
    space, structure, forest = setting
    root = choose_root(space, structure, forest, generation=1)
    with pytest.raises(PreconditionError):
        cz_decompose(space, forest, func(np.ones(space.n)), root, 0.5)


def test_all_properties_on_admissible_root(setting):
    space, structure, forest = setting
    root = choose_root(space, structure, forest)
    k = admissible_generation(space, structure, forest)
    assert forest.locate(root)[0] == k
    for f in _functions(space):
        av = cube_abs_averages(space, forest, f, subtree(forest, root))
        rep = cz_family_properties(space, structure, forest, f, root, cz_lambdas(av, root))
        assert rep.passed, [c for c, ok in rep.checks.items() if not ok]
        assert np.isfinite(rep.measured["c_prime"])


def test_exact_properties_on_large_root(setting):
    space, structure, forest = setting
    root = choose_root(space, structure, forest, generation=1)
    exact = ("i_lower", "i_upper", "disjoint", "inside_root", "ii_nested", "iii_outside_bounded",
             "claim_corrected_constants")
    for f in _functions(space):
        av = cube_abs_averages(space, forest, f, subtree(forest, root))
        rep = cz_family_properties(space, structure, forest, f, root, cz_lambdas(av, root))
        assert all(rep.checks[c] for c in exact)


def test_dyadic_sharp_is_dominated_by_twice_dyadic_maximal(setting):
    space, structure, forest = setting
    root = choose_root(space, structure, forest, generation=1)
    members = forest.members(root)
    for f in _functions(space):
        s = dyadic_sharp(space, forest, f, root).effective[members]
        m = dyadic_maximal(space, forest, f, root).effective[members]
        assert np.all(s <= 2 * m * (1 + 1e-12))


def test_sharp_functions_vanish_on_constants(setting):
    space, structure, forest = setting
    root = choose_root(space, structure, forest, generation=1)
    c = func(np.full(space.n, 3.0))
    members = forest.members(root)
    assert np.all(dyadic_sharp(space, forest, c, root).effective[members] == 0)
    assert np.all(ball_sharp(space, structure, c, 2, targets=members).effective[members] == 0)


def test_comparison_and_concentric_ball_bounds(setting):
    space, structure, forest = setting
    root = choose_root(space, structure, forest, fit="sharp")
    for f in _functions(space):
        assert sharp_comparison_check(space, structure, forest, f, root).passed
        rep = corollary_ball_check(space, structure, forest, f, root, 2.0)
        assert rep.passed


def test_fefferman_stein_ratio_is_moderate(setting):
    space, structure, forest = setting
    root = choose_root(space, structure, forest, generation=1)
    for f in _functions(space)[:4]:
        for kind in ("dyadic", "ball"):
            res = fs_verify(space, structure, forest, f, root, 2.0, kind)
            assert res.report.passed
            assert res.ratio <= 50


def test_cover_lp_on_mean_zero_patterns():
    space, structure = builtin("grid1d", N=512)
    forest = build_forest(space, structure, 2, 0.25, 5)
    rep = cover_lp_check(space, structure, forest, [left_half_pattern], 1, 2.0)
    assert rep.passed and rep.measured["pieces"] > 0
