"""Radius sweeps over sorted neighbourhoods.

Around a fixed center the ball B(c, r) = {y : rho(c, y) < r} only changes
when r crosses a realized distance, so every ball of radius r <= cap is a
prefix of the neighbours sorted by distance. Sweeping those prefixes visits
every distinct ball exactly once, which turns the continuum suprema of the
theory into exact finite maxima.

Prefix sums are computed exactly (integer arithmetic on the binary
expansions) and rounded once, so a prefix sum agrees bit-for-bit with
``math.fsum`` over the same set in any order.
"""

from __future__ import annotations

import math
from itertools import accumulate

import numpy as np

from .errors import PreconditionError

# Matrices bigger than this are processed in row blocks.
BLOCK_CELLS = 1 << 22


def neighbourhood(space, center: int, reach: float):
    """Ids with rho(center, y) < reach sorted by (distance, id), and their distances."""
    d = space.dist_row(center)
    sel = np.flatnonzero(d < reach)
    ds = d[sel]
    order = np.lexsort((sel, ds))
    return sel[order], ds[order]


def prefix_lengths(dists: np.ndarray, cap: float, radii=None) -> np.ndarray:
    """Lengths of the distinct balls B(c, r), 0 < r <= cap, as prefixes of ``dists``.

    ``dists`` must be sorted. Without ``radii`` every realized ball is
    returned (one per distinct distance below ``cap``); otherwise only the
    balls of the listed radii.
    """
    if radii is None:
        ds = dists[dists < cap]
        if ds.size == 0:
            return np.zeros(0, dtype=np.intp)
        ends = np.flatnonzero(np.diff(ds) > 0) + 1
        return np.append(ends, ds.size).astype(np.intp)
    radii = np.asarray(radii, dtype=float)
    radii = radii[(radii > 0) & (radii <= cap)]
    lengths = np.unique(np.searchsorted(dists, radii, side="left"))
    return lengths[lengths > 0].astype(np.intp)


def exact_prefix_sums(x: np.ndarray) -> np.ndarray:
    """Correctly rounded cumulative sums of ``x``."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(x)):
        return np.cumsum(x)
    mant, expo = np.frexp(x)
    mant = (mant * (1 << 53)).astype(np.int64)
    expo = expo.astype(np.int64) - 53
    nz = mant != 0
    if not nz.any():
        return np.zeros(x.size)
    base = int(expo[nz].min())
    shifts = (expo - base).tolist()
    ints = [m << s if m else 0 for m, s in zip(mant.tolist(), shifts)]
    sums = accumulate(ints)
    if base >= 0:
        scale = 1 << base
        return np.array([float(s * scale) for s in sums])
    den = 1 << -base
    return np.array([s / den for s in sums])


def exact_sum(x) -> float:
    return math.fsum(np.asarray(x, dtype=float).tolist())


def prefix_means(weights: np.ndarray, values: np.ndarray, lengths: np.ndarray):
    """(means, masses) of ``values`` over each prefix, both exactly rounded sums."""
    num = exact_prefix_sums(weights * values)
    den = exact_prefix_sums(weights)
    return num[lengths - 1] / den[lengths - 1], den[lengths - 1]


def prefix_oscillations(weights, values, lengths, means, p: float = 1.0) -> np.ndarray:
    """avg over prefix j of |values - means[j]|**p."""
    m = int(lengths[-1]) if lengths.size else 0
    out = np.empty(lengths.size)
    if m == 0:
        return out
    w = weights[:m]
    v = values[:m]
    pos = np.arange(m)
    step = max(1, BLOCK_CELLS // m)
    for lo in range(0, lengths.size, step):
        L = lengths[lo:lo + step]
        mu = means[lo:lo + step]
        dev = np.abs(v[None, :] - mu[:, None])
        if p != 1.0:
            dev = dev ** p
        dev = np.where(pos[None, :] < L[:, None], dev * w[None, :], 0.0)
        out[lo:lo + step] = dev.sum(axis=1)
    den = exact_prefix_sums(w)[lengths - 1]
    return out / den


def suffix_best(lengths: np.ndarray, values: np.ndarray) -> np.ndarray:
    """best[i] = max of values[j] over prefixes j that contain position i."""
    m = int(lengths[-1])
    slot = np.full(m, -np.inf)
    np.maximum.at(slot, lengths - 1, values)
    return np.maximum.accumulate(slot[::-1])[::-1]


def scatter_max(out: np.ndarray, ids: np.ndarray, lengths: np.ndarray, values: np.ndarray):
    """out[y] = max(out[y], sup of values over prefixes containing y)."""
    if lengths.size == 0:
        return
    best = suffix_best(lengths, values)
    tgt = ids[:best.size]
    out[tgt] = np.maximum(out[tgt], best)


def check_radii(radius_grid, cap: float):
    if radius_grid is None:
        return None
    grid = np.asarray(radius_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise PreconditionError("radius grid must be nonempty and positive")
    if np.any(grid > cap):
        raise PreconditionError(f"radius grid exceeds the cap {cap!r}")
    return np.unique(grid)
