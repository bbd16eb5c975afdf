"""Local Hardy-Littlewood maximal function and its boundedness checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covering import vitali_radius_cap
from .errors import ArgumentError
from .report import Report, Table
from .space import LocalStructure, PointCloud, SampledFunction, ball
from .sweep import check_radii, neighbourhood, prefix_lengths, prefix_means, scatter_max


@dataclass
class MaximalResult:
    values: SampledFunction
    cap_r: float
    candidate_count: int

    @property
    def array(self) -> np.ndarray:
        return self.values.effective


def local_maximal(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                  radius_grid=None, cap: float | None = None) -> MaximalResult:
    """Mf on Omega_n: sup of |f| averages over balls B(c, r) containing x, c in Omega_n, r <= r_n.

    Without ``radius_grid`` every realized ball is visited, which is the
    exact discrete supremum. ``cap`` lowers r_n (smaller caps are allowed).
    """
    r_n, _ = vitali_radius_cap(structure, n)
    cap = r_n if cap is None else min(cap, r_n)
    grid = check_radii(radius_grid, cap)
    absf = np.abs(f.effective)
    w = space.weights
    out = np.zeros(space.n)
    count = 0
    for c in structure.omega(n):
        ids, ds = neighbourhood(space, int(c), cap)
        lengths = prefix_lengths(ds, cap, grid)
        if lengths.size == 0:
            continue
        means, _ = prefix_means(w[ids], absf[ids], lengths)
        scatter_max(out, ids, lengths, means)
        count += lengths.size
    return MaximalResult(SampledFunction(out, structure.in_omega(n).copy()), cap, count)


def local_maximal_naive(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                        radius_grid=None, cap: float | None = None) -> np.ndarray:
    """All-pairs reference: explicit balls and fsum averages at every point of Omega_n."""
    r_n, _ = vitali_radius_cap(structure, n)
    cap = r_n if cap is None else min(cap, r_n)
    grid = check_radii(radius_grid, cap)
    absf = np.abs(f.effective)
    w = space.weights
    omega = structure.omega(n)
    out = np.zeros(space.n)
    for c in omega:
        d = space.dist_row(int(c))
        if grid is None:
            realized = np.unique(d[d < cap])
            # r just above each realized distance, capped
            radii = [min(cap, np.nextafter(v, np.inf)) for v in realized]
        else:
            radii = grid
        for r in radii:
            B = ball(space, int(c), float(r))
            avg = math.fsum((w[B] * absf[B]).tolist()) / math.fsum(w[B].tolist())
            out[B] = np.maximum(out[B], avg)
    mask = structure.in_omega(n)
    return np.where(mask, out, 0.0)


def _lp(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(values), initial=0.0))
    return math.fsum((weights * np.abs(values) ** p).tolist()) ** (1.0 / p)


def weak_type_check(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                    t_grid, bound: float | None = None) -> Report:
    """c(t) = t mu{x in Omega_n : Mf > t} / ||f||_{L1(Omega_{n+1})} over ``t_grid``."""
    Mf = local_maximal(space, structure, f, n).array
    omega = structure.omega(n)
    nxt = structure.omega(n + 1)
    w = space.weights
    norm1 = math.fsum((w[nxt] * np.abs(f.effective[nxt])).tolist())
    rows = []
    worst = 0.0
    for t in np.asarray(t_grid, dtype=float):
        level = omega[Mf[omega] > t]
        mass = math.fsum(w[level].tolist())
        c = t * mass / norm1 if norm1 > 0 else (0.0 if mass == 0 else math.inf)
        worst = max(worst, c)
        rows.append([float(t), mass, c])
    rep = Report("weak_type", "weak (1,1) bound for the local maximal function")
    rep.check("finite", math.isfinite(worst))
    if bound is not None:
        rep.check("within_bound", worst <= bound)
    rep.measured.update({"c_hat": worst, "l1_norm": norm1})
    rep.tables["weak"] = Table(("t", "level_mass", "c"), rows)
    return rep


def strong_type_check(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                      p: float) -> Report:
    """||Mf||_{Lp(Omega_n)} / ||f||_{Lp(Omega_{n+1})}."""
    if not p > 1:
        raise ArgumentError("strong type needs p > 1; use weak_type_check for p = 1")
    Mf = local_maximal(space, structure, f, n).array
    omega = structure.omega(n)
    nxt = structure.omega(n + 1)
    w = space.weights
    num = _lp(Mf[omega], w[omega], p)
    den = _lp(f.effective[nxt], w[nxt], p)
    ratio = 1.0 if num == 0 and den == 0 else (num / den if den > 0 else math.inf)
    rep = Report("strong_type", "Lp bound for the local maximal function")
    rep.check("finite", math.isfinite(ratio))
    rep.measured.update({"p": p, "ratio": ratio, "lhs": num, "rhs": den})
    return rep


def differentiation_check(space: PointCloud, structure: LocalStructure, f: SampledFunction,
                          n: int) -> Report:
    """|f| <= Mf at every point of Omega_n, plus a first-neighbour differentiation proxy."""
    res = local_maximal(space, structure, f, n)
    Mf = res.array
    omega = structure.omega(n)
    vals = f.effective
    absf = np.abs(vals[omega])
    tol = 4 * np.spacing(np.maximum(absf, Mf[omega]))
    ok = absf <= Mf[omega] + tol
    # smallest ball around x holding more than x itself
    w = space.weights
    worst = 0.0
    for x in omega:
        ids, ds = neighbourhood(space, int(x), res.cap_r)
        lengths = prefix_lengths(ds, res.cap_r)
        if lengths.size < 2:
            continue
        L = lengths[1]
        avg = math.fsum((w[ids[:L]] * vals[ids[:L]]).tolist()) / math.fsum(w[ids[:L]].tolist())
        worst = max(worst, abs(avg - vals[x]))
    rep = Report("differentiation", "Lebesgue differentiation bound")
    rep.check("pointwise_bound", bool(ok.all()))
    rep.measured.update({"violations": int((~ok).sum()), "first_ball_deviation": worst})
    if not ok.all():
        rep.details["witnesses"] = omega[~ok][:10].tolist()
    return rep


def maximal_table(f: SampledFunction, result: MaximalResult, ids) -> Table:
    vals = f.effective
    Mf = result.array
    return Table(("point_id", "f", "Mf"), [[int(i), float(vals[i]), float(Mf[i])] for i in ids])
