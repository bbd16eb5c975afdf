"""Named test functions sampled on a point cloud."""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .space import PointCloud, SampledFunction


def _anchor(space: PointCloud, location) -> int:
    if location is None:
        lo, hi = space.coords.min(axis=0), space.coords.max(axis=0)
        location = (lo + hi) / 2
    return space.nearest(location)


def constant(space: PointCloud, c: float = 1.0) -> SampledFunction:
    return SampledFunction(np.full(space.n, float(c)))


def indicator_halfspace(space: PointCloud, threshold: float = 0.5, axis: int = 0) -> SampledFunction:
    """1 where the chosen coordinate is below ``threshold``, else 0."""
    return SampledFunction((space.coords[:, axis] < threshold).astype(float))


def two_valued(space: PointCloud, threshold: float = 0.5, axis: int = 0) -> SampledFunction:
    """+1 below ``threshold`` along ``axis``, -1 elsewhere."""
    return SampledFunction(np.where(space.coords[:, axis] < threshold, 1.0, -1.0))


def log_singularity(space: PointCloud, location=None) -> SampledFunction:
    """ln rho(x, anchor), clipped below at the log of the smallest pairwise distance."""
    a = _anchor(space, location)
    d = space.dist_row(a)
    return SampledFunction(np.log(np.maximum(d, space.min_separation())))


def atom_spike(space: PointCloud, location=None, height: float = 1.0) -> SampledFunction:
    """``height`` at the point nearest ``location``, zero elsewhere."""
    v = np.zeros(space.n)
    v[_anchor(space, location)] = float(height)
    return SampledFunction(v)


def random_piecewise(space: PointCloud, seed: int = 0, pieces: int = 8, axis: int = 0) -> SampledFunction:
    """Piecewise constant along ``axis`` with random breakpoints and normal levels."""
    rng = np.random.default_rng(seed)
    x = space.coords[:, axis]
    cuts = np.sort(rng.uniform(x.min(), x.max(), pieces - 1))
    levels = rng.standard_normal(pieces)
    return SampledFunction(levels[np.searchsorted(cuts, x, side="right")])


LIBRARY = {
    "constant": constant,
    "indicator_halfspace": indicator_halfspace,
    "log_singularity": log_singularity,
    "two_valued": two_valued,
    "atom_spike": atom_spike,
    "random_piecewise": random_piecewise,
}

FIXTURES = ("constant", "indicator_halfspace", "log_singularity", "two_valued", "atom_spike",
            "random_piecewise")


def function_library(name: str, params: dict | None, space: PointCloud) -> SampledFunction:
    if name not in LIBRARY:
        raise UsageError(f"unknown function {name!r}; choose from {sorted(LIBRARY)}")
    try:
        return LIBRARY[name](space, **(params or {}))
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name}: {exc}") from exc


def fixture_suite(space: PointCloud, seed: int = 7) -> dict:
    """The six standard fixtures with default parameters."""
    out = {name: function_library(name, None, space) for name in FIXTURES if name != "random_piecewise"}
    out["random_piecewise"] = random_piecewise(space, seed=seed)
    return {name: out[name] for name in FIXTURES}
