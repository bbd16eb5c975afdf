import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import builtin
from lochom.dyadic import (
    all_triples, ancestor, build_forest, depth_for_singletons, forest_c1, forest_to_dot, subcubes,
    triple_ratios, triple_ratios_bruteforce, verify_forest,
)
from lochom.errors import ArgumentError


@pytest.fixture(scope="module")
def forest512():
    space, structure = builtin("grid1d", N=512)
    return space, structure, build_forest(space, structure, 1, 0.25, 4)


def test_generations_partition_omega(forest512):
    space, structure, forest = forest512
    omega = structure.omega(1)
    for k in range(1, 5):
        seen = np.concatenate([forest.members(g) for g in forest.generation(k)])
        assert sorted(seen.tolist()) == omega.tolist()


def test_cubes_nest_or_are_disjoint(forest512):
    space, _, forest = forest512
    sets = {g: set(forest.members(g).tolist()) for g in range(forest.n_cubes)}
    for a in range(forest.n_cubes):
        for b in range(a + 1, forest.n_cubes):
            inter = sets[a] & sets[b]
            assert not inter or inter == sets[a] or inter == sets[b]


def test_verify_forest_passes_and_measures_constants(forest512):
    space, structure, forest = forest512
    rep = verify_forest(space, structure, forest, 300)
    assert rep.passed
    m = rep.measured
    assert m["a0"] > 0 and np.isfinite(m["c1"]) and np.isfinite(m["c2"]) and m["c0"] > 0
    assert m["c1"] == forest_c1(space, forest)


def test_nets_are_nested(forest512):
    _, _, forest = forest512
    for k in range(1, forest.K_depth):
        assert set(forest.centers[k - 1].tolist()) <= set(forest.centers[k].tolist())


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_subcubes_and_ancestor_are_inverse(data):
    space, structure = builtin("grid1d", N=512)
    forest = build_forest(space, structure, 1, 0.25, 4)
    gid = data.draw(st.integers(0, forest.n_cubes - 1))
    k, _ = forest.locate(gid)
    target = data.draw(st.integers(k, forest.K_depth))
    kids = subcubes(forest, gid, target)
    assert all(ancestor(forest, q, k) == gid for q in kids)
    union = np.concatenate([forest.members(q) for q in kids])
    assert sorted(union.tolist()) == sorted(forest.members(gid).tolist())


def test_triple_ratios_match_bruteforce_exactly():
    space, structure = builtin("grid1d", N=64)
    forest = build_forest(space, structure, 1, 0.25, 3)
    for t in all_triples(space, forest):
        assert triple_ratios(space, forest, t) == triple_ratios_bruteforce(space, forest, t)


def test_depth_for_singletons_reaches_single_points():
    space, structure = builtin("grid1d", N=1024)
    depth = depth_for_singletons(space, 0.25)
    assert depth == 5
    forest = build_forest(space, structure, 1, 0.25, depth)
    assert all(forest.members(g).size == 1 for g in forest.generation(depth))


def test_bad_parameters_are_rejected(forest512):
    space, structure, forest = forest512
    with pytest.raises(ArgumentError):
        build_forest(space, structure, 1, 1.5, 3)
    with pytest.raises(ArgumentError):
        forest.locate(forest.n_cubes)
    with pytest.raises(ArgumentError):
        ancestor(forest, forest.generation(1)[0], 3)


def test_dot_dump_lists_every_cube(forest512):
    _, _, forest = forest512
    dot = forest_to_dot(forest)
    assert dot.startswith("digraph") and dot.count("[label=") == forest.n_cubes
