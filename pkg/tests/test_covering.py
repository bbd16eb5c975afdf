import numpy as np
import pytest

from conftest import builtin
from lochom.covering import (
    BallFamily, cover_report, finite_ball_cover, random_family, vitali_radius_cap, vitali_select,
)
from lochom.dyadic import build_forest
from lochom.errors import ArgumentError, ConfigurationError, PreconditionError, ScaleError
from lochom.space import Level, LocalStructure, ball


def test_radius_cap_formula():
    space, structure = builtin("grid1d", N=256)
    r, K = vitali_radius_cap(structure, 1)
    assert K == 5.0
    assert r == pytest.approx(2 * structure.eps(1) / 5)
    _, ps = builtin("power_rho_grid", N=256)
    _, K2 = vitali_radius_cap(ps, 1)
    assert K2 == 2 * 2 + 3 * 4


def _greedy_oracle(space, balls):
    chosen = []
    for c, r in sorted(balls, key=lambda b: (-b[1], b[0])):
        mine = set(ball(space, c, r).tolist())
        if all(not mine & set(ball(space, c2, r2).tolist()) for c2, r2 in chosen):
            chosen.append((c, r))
    return chosen


def test_selection_matches_set_based_greedy_and_covers():
    space, structure = builtin("grid1d", N=256)
    rng = np.random.default_rng(4)
    for _ in range(20):
        fam, E = random_family(space, structure, 1, 12, rng)
        selected, rep = vitali_select(space, structure, fam, E)
        assert rep.passed
        assert list(selected.balls) == _greedy_oracle(space, fam.balls)
        assert rep.measured["c_hat"] > 0


def test_inadmissible_families_are_refused():
    space, structure = builtin("grid1d", N=256)
    r, _ = vitali_radius_cap(structure, 1)
    inside = int(structure.omega(1)[0])
    with pytest.raises(PreconditionError):
        vitali_select(space, structure, BallFamily.of([(inside, 2 * r)], 1), [inside])
    with pytest.raises(PreconditionError):
        vitali_select(space, structure, BallFamily.of([(inside, r)], 1), [0])
    with pytest.raises(ArgumentError):
        vitali_select(space, structure, BallFamily.of([(999, r)], 1), [])


def test_finite_cover_reports_minimal_generation():
    space, structure = builtin("grid1d", N=512)
    forest = build_forest(space, structure, 2, 0.25, 4)
    try:
        pieces = finite_ball_cover(space, structure, forest, 1, 1)
        k = 1
    except ScaleError as exc:
        assert exc.minimal_k is not None
        k = exc.minimal_k
        pieces = finite_ball_cover(space, structure, forest, 1, k)
    rep = cover_report(space, structure, forest, 1, k, pieces)
    assert rep.passed
    assert all(p.gamma >= 1 for p in pieces)
    with pytest.raises(ArgumentError):
        finite_ball_cover(space, structure, forest, 2, 1)


def test_radius_cap_needs_next_level():
    space, structure = builtin("grid1d", N=64)
    single = LocalStructure((Level(space.ids, 0.1, 1.0, 3.0),), space.n)
    with pytest.raises(ConfigurationError):
        vitali_radius_cap(single, 1)
