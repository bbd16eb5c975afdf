"""Discrete locally homogeneous spaces.

A space is a finite weighted point cloud with a quasidistance; the exhaustion
Omega_1 c Omega_2 c ... together with the per-level constants (eps_n, B_n, C_n)
lives in a :class:`LocalStructure`. Integrals are weighted sums, so every
measure-theoretic statement becomes an exact statement about sample points.

Levels are numbered from 1, as in the mathematics.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, ConfigurationError, DomainError
from .report import Report

DENSE_LIMIT = 2048


@dataclass(frozen=True)
class Quasidistance:
    """rho(x, y) = |x - y|**s for a Euclidean or max norm."""

    s: float = 1.0
    norm: str = "euclidean"

    def __post_init__(self):
        if not self.s > 0:
            raise ArgumentError("exponent s must be positive")
        if self.norm not in ("euclidean", "max"):
            raise ArgumentError(f"unknown norm {self.norm!r}")

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        diff = np.abs(a - b)
        if diff.shape[-1] == 1:
            base = diff[..., 0]
        elif self.norm == "euclidean":
            base = np.sqrt(np.sum(diff * diff, axis=-1))
        else:
            base = np.max(diff, axis=-1)
        return base if self.s == 1.0 else base ** self.s

    @property
    def triangle_constant(self) -> float:
        # |x-y|^s is a metric for s <= 1; (a+b)^s <= 2^(s-1)(a^s+b^s) otherwise.
        return 1.0 if self.s <= 1.0 else 2.0 ** (self.s - 1.0)

    def to_dict(self) -> dict:
        return {"kind": "power", "params": {"s": self.s, "norm": self.norm}}


class PointCloud:
    """Finite sample of (Omega, mu): coordinates, atom weights and rho."""

    def __init__(self, coords, weights, rho: Quasidistance | None = None,
                 dense_limit: int = DENSE_LIMIT):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        weights = np.asarray(weights, dtype=float)
        if coords.ndim != 2 or weights.shape != (coords.shape[0],):
            raise ArgumentError("coords must be (N, d) and weights (N,)")
        if coords.shape[0] == 0:
            raise ArgumentError("empty point cloud")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ArgumentError("weights must be finite and strictly positive")
        if not np.isfinite(weights.sum()):
            raise ArgumentError("total weight overflows")
        self.coords = coords
        self.weights = weights
        self.rho = rho or Quasidistance()
        self.dense_limit = dense_limit
        self._dense = None
        self.coords.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.n)

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    def _check_id(self, i):
        if not (0 <= int(i) < self.n):
            raise ArgumentError(f"unknown point id {i}")

    def dense(self) -> np.ndarray | None:
        """Full distance matrix, cached, or None above the memory guard."""
        if self._dense is None and self.n <= self.dense_limit:
            d = self.rho(self.coords[:, None, :], self.coords[None, :, :])
            d.setflags(write=False)
            self._dense = d
        return self._dense

    def dist_row(self, i: int) -> np.ndarray:
        self._check_id(i)
        d = self.dense()
        if d is not None:
            return d[i]
        return self.rho(self.coords[i][None, :], self.coords)

    def distances(self, a: Sequence[int] | np.ndarray, b=None) -> np.ndarray:
        a = np.asarray(a, dtype=np.intp)
        b = a if b is None else np.asarray(b, dtype=np.intp)
        d = self.dense()
        if d is not None:
            return d[np.ix_(a, b)]
        return self.rho(self.coords[a][:, None, :], self.coords[b][None, :, :])

    def min_separation(self) -> float:
        """Smallest positive rho between two sample points."""
        best = math.inf
        for start in range(0, self.n, 512):
            block = self.rho(self.coords[start:start + 512][:, None, :], self.coords[None, :, :])
            block = np.where(block > 0, block, np.inf)
            best = min(best, float(block.min()))
        return best

    def nearest(self, location) -> int:
        """Sample point closest to ``location`` (ties: smaller id)."""
        loc = np.atleast_1d(np.asarray(location, dtype=float))
        d = self.rho(loc[None, :], self.coords)
        return int(np.argmin(d))

    def mask(self, ids) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[np.asarray(ids, dtype=np.intp)] = True
        return m


@dataclass(frozen=True)
class Level:
    omega: np.ndarray
    eps: float
    B: float
    C: float


@dataclass
class LocalStructure:
    """The exhaustion {Omega_n} with the constants of each level."""

    levels: tuple
    n_points: int
    _masks: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        levels = []
        for lv in self.levels:
            omega = np.unique(np.asarray(lv.omega, dtype=np.intp))
            omega.setflags(write=False)
            levels.append(Level(omega, float(lv.eps), float(lv.B), float(lv.C)))
        self.levels = tuple(levels)
        self._masks = []
        for lv in self.levels:
            if lv.omega.size and (lv.omega[0] < 0 or lv.omega[-1] >= self.n_points):
                raise ConfigurationError("level ids outside the point cloud")
            m = np.zeros(self.n_points, dtype=bool)
            m[lv.omega] = True
            self._masks.append(m)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> Level:
        if not 1 <= n <= len(self.levels):
            raise ConfigurationError(f"level {n} does not exist (have 1..{len(self.levels)})")
        return self.levels[n - 1]

    def omega(self, n: int) -> np.ndarray:
        return self.level(n).omega

    def in_omega(self, n: int) -> np.ndarray:
        self.level(n)
        return self._masks[n - 1]

    def eps(self, n: int) -> float:
        return self.level(n).eps

    def B(self, n: int) -> float:
        return self.level(n).B

    def C(self, n: int) -> float:
        return self.level(n).C


@dataclass
class SampledFunction:
    """Values at every sample point; ids outside ``support_mask`` read as 0."""

    values: np.ndarray
    support_mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.support_mask is not None:
            self.support_mask = np.asarray(self.support_mask, dtype=bool)
            if self.support_mask.shape != self.values.shape:
                raise ArgumentError("support mask and values differ in length")

    @property
    def effective(self) -> np.ndarray:
        if self.support_mask is None:
            return self.values
        return np.where(self.support_mask, self.values, 0.0)

    def restricted(self, ids) -> "SampledFunction":
        """Zero extension of f restricted to ``ids``."""
        mask = np.zeros(self.values.shape, dtype=bool)
        mask[np.asarray(ids, dtype=np.intp)] = True
        if self.support_mask is not None:
            mask &= self.support_mask
        return SampledFunction(self.values, mask)

    def scaled(self, c: float) -> "SampledFunction":
        return SampledFunction(self.values * c, self.support_mask)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        return SampledFunction(self.effective + other.effective)


def ball(space: PointCloud, center_id: int, r: float) -> np.ndarray:
    """Ids y with rho(center, y) < r, ascending."""
    if not r > 0:
        raise ArgumentError("radius must be positive")
    return np.flatnonzero(space.dist_row(center_id) < r)


def measure(space: PointCloud, ids) -> float:
    ids = np.asarray(ids, dtype=np.intp)
    if ids.size == 0:
        return 0.0
    return math.fsum(space.weights[ids])


def average(f: SampledFunction, ids, space: PointCloud) -> float:
    """Weighted mean of f over ``ids`` (masked ids count as 0 with full weight)."""
    ids = np.asarray(ids, dtype=np.intp)
    mass = measure(space, ids)
    if not mass > 0:
        raise DomainError("average over a set of zero measure")
    w = space.weights[ids]
    return math.fsum(w * f.effective[ids]) / mass


# ---------------------------------------------------------------------------
# doubling profiles


def doubling_candidates(d_sorted: np.ndarray, r_max: float) -> np.ndarray:
    """Radii representing every constant piece of r -> mu(B(x,2r))/mu(B(x,r)).

    The ratio only changes where r or 2r crosses a distance from the center,
    so one radius per open interval between consecutive breakpoints (plus the
    endpoint r_max) makes the sup over (0, r_max] exact.
    """
    bps = np.unique(np.concatenate([[0.0, r_max], d_sorted, d_sorted / 2.0]))
    bps = bps[bps <= r_max]
    mids = (bps[:-1] + bps[1:]) / 2.0
    return np.concatenate([mids, [r_max]])


def ball_masses(d_sorted: np.ndarray, cumw: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """mu(B(x, r)) for each r given sorted distances from x and cumulative weights."""
    k = np.searchsorted(d_sorted, radii, side="left")
    out = np.zeros(len(radii))
    pos = k > 0
    out[pos] = cumw[k[pos] - 1]
    return out


def _profile(space: PointCloud, x: int, reach: float):
    d = space.dist_row(x)
    sel = np.flatnonzero(d < reach)
    order = np.argsort(d[sel], kind="stable")
    ids = sel[order]
    return d[ids], np.cumsum(space.weights[ids])


def doubling_ratios(space: PointCloud, x: int, eps: float, radii=None):
    """(radii, ratios) of mu(B(x,2r))/mu(B(x,r)) for r in (0, eps]."""
    ds, cw = _profile(space, x, 2.0 * eps)
    if radii is None:
        radii = doubling_candidates(ds, eps)
    num = ball_masses(ds, cw, 2.0 * radii)
    den = ball_masses(ds, cw, radii)
    return radii, num / den


def doubling_constant(space: PointCloud, centers, eps: float) -> float:
    """Exact discrete sup of the doubling ratio over centers and r <= eps."""
    best = 1.0
    for x in np.asarray(centers, dtype=np.intp):
        _, ratio = doubling_ratios(space, int(x), eps)
        best = max(best, float(ratio.max()))
    return best


# ---------------------------------------------------------------------------
# axioms


def verify_axioms(space: PointCloud, structure: LocalStructure,
                  sample_budget: int | None = 20000, seed: int = 0) -> Report:
    """Numerically check the exhaustion, quasi-triangle and local doubling axioms.

    ``sample_budget=None`` switches to the exhaustive check over all triples
    and all (center, radius) pairs of every level.
    """
    if structure.n_points != space.n:
        raise ArgumentError("structure and point cloud disagree on N")
    rng = np.random.default_rng(seed)
    rep = Report("axioms", "locally homogeneous space axioms")
    L = structure.depth
    per_level = []

    union = np.zeros(space.n, dtype=bool)
    for n in range(1, L + 1):
        union |= structure.in_omega(n)
    rep.check("exhaustion_union_is_everything", union.all())
    eps = [lv.eps for lv in structure.levels]
    Bs = [lv.B for lv in structure.levels]
    Cs = [lv.C for lv in structure.levels]
    rep.check("eps_nonincreasing", all(a >= b for a, b in zip(eps, eps[1:])))
    rep.check("B_nondecreasing", all(a <= b for a, b in zip(Bs, Bs[1:])))
    rep.check("C_nondecreasing", all(a <= b for a, b in zip(Cs, Cs[1:])))
    rep.check("constants_in_range", all(e > 0 for e in eps) and all(b >= 1 for b in Bs)
              and all(c > 1 for c in Cs))
    rep.check("rho_symmetric_and_definite", _check_rho(space, rng, sample_budget))

    for n in range(1, L + 1):
        lv = structure.level(n)
        if lv.omega.size == 0:
            raise ConfigurationError(f"Omega_{n} is empty")
        item = {"level": n, "size": int(lv.omega.size), "eps": lv.eps, "B": lv.B, "C": lv.C}
        # exhaustion inclusion: the 2 eps_n enlargement of Omega_n stays in Omega_{n+1}
        if n < L:
            nested = bool(np.all(structure.in_omega(n + 1)[lv.omega]))
            enl = _enlargement(space, lv.omega, 2.0 * lv.eps)
            inside = bool(np.all(structure.in_omega(n + 1)[enl]))
        else:
            nested = inside = True
        item["nested"] = nested
        item["enlargement_inside_next"] = inside
        rep.check(f"level{n}_nested", nested)
        rep.check(f"level{n}_enlargement", inside)

        b_hat, n_triples = _triangle_constant(space, lv.omega, rng, sample_budget)
        item["B_hat"] = b_hat
        item["triples"] = n_triples
        rep.check(f"level{n}_quasi_triangle", b_hat <= lv.B * (1 + 1e-12))

        c_hat, n_pairs, positive = _doubling_check(space, lv.omega, lv.eps, rng, sample_budget)
        item["C_hat"] = c_hat
        item["pairs"] = n_pairs
        rep.check(f"level{n}_doubling", positive and c_hat <= lv.C)
        per_level.append(item)

    rep.details["levels"] = per_level
    rep.details["mode"] = "exhaustive" if sample_budget is None else "sampled"
    rep.measured["B_hat"] = [it["B_hat"] for it in per_level]
    rep.measured["C_hat"] = [it["C_hat"] for it in per_level]
    return rep


def _check_rho(space, rng, budget) -> bool:
    if space.n <= 512 or budget is None:
        ids = space.ids
    else:
        ids = rng.choice(space.n, size=min(space.n, 256), replace=False)
    d = space.distances(ids, ids)
    if not np.array_equal(d, d.T):
        return False
    off = ~np.eye(len(ids), dtype=bool)
    return bool(np.all(np.diag(d) == 0) and np.all(d[off] > 0))


def _enlargement(space, omega, radius) -> np.ndarray:
    hit = np.zeros(space.n, dtype=bool)
    for y in omega:
        hit |= space.dist_row(int(y)) < radius
    return np.flatnonzero(hit)


def _triangle_constant(space, omega, rng, budget):
    m = omega.size
    if m < 2:
        return 1.0, 0
    if budget is None:
        d = space.distances(omega, omega)
        off = ~np.eye(m, dtype=bool)
        best = 0.0
        for z in range(m):
            den = d[:, z][:, None] + d[z, :][None, :]
            best = max(best, float(np.max(d[off] / den[off])))
        return best, m * m * (m - 1)
    x = omega[rng.integers(0, m, budget)]
    y = omega[rng.integers(0, m, budget)]
    z = omega[rng.integers(0, m, budget)]
    keep = x != y
    x, y, z = x[keep], y[keep], z[keep]
    c = space.coords
    rho = space.rho
    ratio = rho(c[x], c[y]) / (rho(c[x], c[z]) + rho(c[z], c[y]))
    return float(ratio.max()) if ratio.size else 1.0, int(keep.sum())


def _doubling_check(space, omega, eps, rng, budget):
    best = 1.0
    count = 0
    positive = True
    if budget is None:
        for x in omega:
            radii, ratio = doubling_ratios(space, int(x), eps)
            best = max(best, float(ratio.max()))
            count += radii.size
        return best, count, positive
    centers = omega[rng.integers(0, omega.size, max(1, budget // 8))]
    for x in centers:
        ds, cw = _profile(space, int(x), 2.0 * eps)
        cand = doubling_candidates(ds, eps)
        radii = cand[rng.integers(0, cand.size, min(8, cand.size))]
        den = ball_masses(ds, cw, radii)
        positive &= bool(np.all(den > 0))
        ratio = ball_masses(ds, cw, 2.0 * radii) / den
        best = max(best, float(ratio.max()))
        count += radii.size
    return best, count, positive


# ---------------------------------------------------------------------------
# builtin instances

BUILTINS = ("grid1d", "grid2d", "power_rho_grid", "weighted_grid", "tiny4")


def instantiate_builtin(name: str, params: dict | None = None, **kw):
    """Build one of the standard spaces together with its exhaustion."""
    p = dict(params or {})
    p.update(kw)
    if name == "tiny4":
        return _tiny4()
    if name == "grid1d":
        N = int(p.get("N", 256))
        coords = _midpoints(N)[:, None]
        cloud = PointCloud(coords, np.full(N, 1.0 / N), Quasidistance(float(p.get("s", 1.0))))
    elif name == "power_rho_grid":
        N = int(p.get("N", 256))
        coords = _midpoints(N)[:, None]
        cloud = PointCloud(coords, np.full(N, 1.0 / N), Quasidistance(float(p.get("s", 2.0))))
    elif name == "grid2d":
        side = int(p.get("side", p.get("N", 32)))
        g = _midpoints(side)
        xx, yy = np.meshgrid(g, g, indexing="ij")
        coords = np.column_stack([xx.ravel(), yy.ravel()])
        cloud = PointCloud(coords, np.full(side * side, 1.0 / (side * side)),
                           Quasidistance(float(p.get("s", 1.0)), p.get("norm", "euclidean")))
    elif name == "weighted_grid":
        N = int(p.get("N", 256))
        x = _midpoints(N)
        profile = p.get("profile", "step")
        if profile == "uniform":
            w = np.full(N, 1.0 / N)
        elif profile == "step":
            ratio = float(p.get("ratio", 2.0))
            w = np.where(x < 0.5, 1.0, ratio) / N
        elif profile == "linear":
            w = (1.0 + x) / N
        else:
            raise ArgumentError(f"unknown weight profile {profile!r}")
        cloud = PointCloud(x[:, None], w, Quasidistance(float(p.get("s", 1.0))))
    else:
        raise ArgumentError(f"unknown builtin space {name!r}; choose from {BUILTINS}")
    structure = box_exhaustion(cloud, int(p.get("levels", 4)),
                               lo=p.get("lo", 0.0), hi=p.get("hi", 1.0))
    return cloud, structure


def _midpoints(N: int) -> np.ndarray:
    if N < 8:
        raise ArgumentError("grid needs at least 8 points per axis")
    return (np.arange(N) + 0.5) / N


def box_exhaustion(cloud: PointCloud, n_levels: int = 4, lo=0.0, hi=1.0,
                   headroom: float = 1.25) -> LocalStructure:
    """Nested sub-boxes shrinking toward the domain box.

    Margins are span/4, span/8, ..., 0; eps_n is half the rho-margin between
    consecutive boxes, B_n the quasi-triangle constant of rho and C_n the
    measured local doubling constant times ``headroom``.
    """
    if n_levels < 3:
        raise ArgumentError("need at least 3 levels")
    d = cloud.coords.shape[1]
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))
    span = float(np.min(hi - lo))
    margins = [span * 2.0 ** -(j + 2) for j in range(n_levels - 1)] + [0.0]
    s = cloud.rho.s
    B = cloud.rho.triangle_constant
    omegas, eps = [], []
    for j, m in enumerate(margins):
        if j == n_levels - 1:
            omegas.append(cloud.ids)
            eps.append(eps[-1])
            continue
        inside = np.all((cloud.coords > lo + m) & (cloud.coords < hi - m), axis=1)
        omega = np.flatnonzero(inside)
        if omega.size == 0:
            raise ArgumentError("too few points to form the required nonempty levels")
        omegas.append(omega)
        eps.append((margins[j] - margins[j + 1]) ** s / 2.0)
    Cs = []
    for omega, e in zip(omegas, eps):
        c = headroom * doubling_constant(cloud, omega, e)
        Cs.append(max([c] + Cs[-1:]))
    levels = tuple(Level(o, e, B, c) for o, e, c in zip(omegas, eps, Cs))
    return LocalStructure(levels, cloud.n)


def _tiny4():
    cloud = PointCloud(np.array([0.1, 0.3, 0.5, 0.7])[:, None], np.array([0.1, 0.2, 0.3, 0.4]))
    omegas = [np.array([1, 2]), cloud.ids, cloud.ids]
    eps = 0.625
    Cs = []
    for omega in omegas:
        c = 1.25 * doubling_constant(cloud, omega, eps)
        Cs.append(max([c] + Cs[-1:]))
    levels = tuple(Level(o, eps, 1.0, c) for o, c in zip(omegas, Cs))
    return cloud, LocalStructure(levels, cloud.n)


# ---------------------------------------------------------------------------
# files


def load_space(path: str | Path):
    """Read a JSON space definition: points, weights, rho, levels."""
    doc = json.loads(Path(path).read_text())
    return space_from_dict(doc)


def space_from_dict(doc: dict):
    try:
        points = np.asarray(doc["points"], dtype=float)
        weights = np.asarray(doc["weights"], dtype=float)
        rho_doc = doc.get("rho", {"kind": "power", "params": {"s": 1.0}})
        levels_doc = doc["levels"]
    except KeyError as exc:
        raise ConfigurationError(f"space file lacks field {exc.args[0]!r}") from None
    if rho_doc.get("kind", "power") != "power":
        raise ConfigurationError(f"unsupported rho kind {rho_doc.get('kind')!r}")
    rp = rho_doc.get("params", {})
    cloud = PointCloud(points, weights, Quasidistance(float(rp.get("s", 1.0)), rp.get("norm", "euclidean")))
    levels = []
    for i, item in enumerate(levels_doc):
        if "ids" in item:
            omega = np.asarray(item["ids"], dtype=np.intp)
        elif "box" in item:
            lo, hi = (np.asarray(v, dtype=float) for v in item["box"])
            omega = np.flatnonzero(np.all((cloud.coords > lo) & (cloud.coords < hi), axis=1))
        else:
            raise ConfigurationError(f"levels[{i}] needs 'ids' or 'box'")
        try:
            levels.append(Level(omega, float(item["eps"]), float(item["B"]), float(item["C"])))
        except KeyError as exc:
            raise ConfigurationError(f"levels[{i}] lacks field {exc.args[0]!r}") from None
    return cloud, LocalStructure(tuple(levels), cloud.n)


def space_to_dict(cloud: PointCloud, structure: LocalStructure) -> dict:
    return {
        "points": cloud.coords.tolist(),
        "weights": cloud.weights.tolist(),
        "rho": cloud.rho.to_dict(),
        "levels": [{"ids": lv.omega.tolist(), "eps": lv.eps, "B": lv.B, "C": lv.C}
                   for lv in structure.levels],
    }


def load_function_csv(path: str | Path, space: PointCloud) -> SampledFunction:
    """Read ``point_id,value`` rows; every id of the cloud must be present."""
    values = np.full(space.n, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["point_id", "value"]:
            raise ConfigurationError("function CSV must have header point_id,value")
        for lineno, row in enumerate(reader, start=2):
            try:
                i = int(row["point_id"])
                v = float(row["value"])
            except (TypeError, ValueError):
                raise ConfigurationError(f"line {lineno}: malformed row {row}") from None
            if not 0 <= i < space.n:
                raise ConfigurationError(f"line {lineno}: unknown point id {i}")
            values[i] = v
    if np.isnan(values).any():
        missing = np.flatnonzero(np.isnan(values))[:5].tolist()
        raise ConfigurationError(f"function CSV misses ids, e.g. {missing}")
    return SampledFunction(values)


def write_function_csv(path: str | Path, f: SampledFunction, ids: Iterable[int] | None = None):
    vals = f.effective
    ids = range(len(vals)) if ids is None else ids
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point_id", "value"])
        for i in ids:
            w.writerow([int(i), repr(float(vals[i]))])
