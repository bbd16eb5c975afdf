"""Vitali-type selection and finite ball covers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConfigurationError, PreconditionError, ScaleError
from .report import Report
from .space import LocalStructure, PointCloud, ball, measure


@dataclass(frozen=True)
class BallFamily:
    balls: tuple  # ((center_id, radius), ...)
    level_n: int

    @classmethod
    def of(cls, balls, level_n: int) -> "BallFamily":
        return cls(tuple((int(c), float(r)) for c, r in balls), int(level_n))

    def __len__(self):
        return len(self.balls)


def vitali_constant(structure: LocalStructure, n: int) -> float:
    """K_n = 2 B_{n+1} + 3 B_{n+1}^2."""
    B = structure.B(n + 1)
    return 2.0 * B + 3.0 * B * B


def vitali_radius_cap(structure: LocalStructure, n: int) -> tuple[float, float]:
    """(r_n, K_n) with r_n = 2 eps_n / K_n."""
    if n + 1 > structure.depth:
        raise ConfigurationError(f"the radius cap at level {n} needs level {n + 1}")
    K = vitali_constant(structure, n)
    return 2.0 * structure.eps(n) / K, K


def _union(space, balls) -> np.ndarray:
    hit = np.zeros(space.n, dtype=bool)
    for c, r in balls:
        hit |= space.dist_row(c) < r
    return hit


def vitali_select(space: PointCloud, structure: LocalStructure, family: BallFamily, E,
                  enforce_cap: bool = True):
    """Greedy largest-first disjoint subfamily whose K_n-enlargements cover E.

    Ties in radius go to the smaller center id. Returns the selected family
    and a report with the exact disjointness/coverage checks and
    c_hat = sum mu(B_j) / mu(E).
    """
    n = family.level_n
    cap, K = vitali_radius_cap(structure, n)
    inside = structure.in_omega(n)
    for c, r in family.balls:
        if not 0 <= c < space.n:
            raise ArgumentError(f"unknown center id {c}")
        if not r > 0:
            raise PreconditionError("radii must be positive")
        if enforce_cap and (r > cap or not inside[c]):
            raise PreconditionError(f"ball ({c}, {r}) violates the admissibility of level {n}")
    E = np.unique(np.asarray(E, dtype=np.intp))
    if E.size and not _union(space, family.balls)[E].all():
        raise PreconditionError("E is not contained in the union of the family")

    order = sorted(family.balls, key=lambda b: (-b[1], b[0]))
    taken = np.zeros(space.n, dtype=bool)
    kept = []
    for c, r in order:
        members = space.dist_row(c) < r
        if not (members & taken).any():
            kept.append((c, r))
            taken |= members
    selected = BallFamily.of(kept, n)

    rep = Report("vitali", "Vitali covering lemma")
    sets = [ball(space, c, r) for c, r in kept]
    counts = np.zeros(space.n, dtype=np.int64)
    for s in sets:
        counts[s] += 1
    rep.check("disjoint", counts.max(initial=0) <= 1)
    enlarged = _union(space, [(c, K * r) for c, r in kept])
    rep.check("enlarged_cover", bool(enlarged[E].all()) if E.size else True)
    mass_E = measure(space, E)
    selected_mass = measure(space, np.flatnonzero(counts > 0))
    c_hat = selected_mass / mass_E if mass_E > 0 else float("inf")
    rep.measured.update({"c_hat": c_hat, "K_n": K, "r_n": cap, "selected": len(kept),
                         "offered": len(family)})
    rep.details["selected"] = [[c, r] for c, r in kept]
    return selected, rep


def random_family(space: PointCloud, structure: LocalStructure, n: int, count: int,
                  rng: np.random.Generator, cover=None) -> tuple[BallFamily, np.ndarray]:
    """Random admissible family plus a set E inside its union.

    Centers are drawn from Omega_n and radii uniformly from (0, r_n]. With
    ``cover`` given, a ball of radius r_n centered at each point of that id
    set that is not yet covered is appended, so the family covers it.
    """
    cap, _ = vitali_radius_cap(structure, n)
    omega = structure.omega(n)
    centers = rng.choice(omega, size=count)
    radii = cap * (1.0 - rng.random(count))
    balls = list(zip(centers.tolist(), radii.tolist()))
    hit = _union(space, balls)
    if cover is not None:
        for y in np.asarray(cover, dtype=np.intp):
            if not hit[y]:
                balls.append((int(y), cap))
                hit |= space.dist_row(int(y)) < cap
        E = np.asarray(cover, dtype=np.intp)
    else:
        covered = np.flatnonzero(hit)
        E = covered[rng.random(covered.size) < 0.5]
        if E.size == 0:
            E = covered[:1]
    return BallFamily.of(balls, n), E


@dataclass(frozen=True)
class CoverPiece:
    cube: int
    core_radius: float
    core: np.ndarray
    region_cubes: tuple
    region: np.ndarray
    enclosing_radius: float
    gamma: float


def finite_ball_cover(space: PointCloud, structure: LocalStructure, forest, n: int, k: int,
                      c1: float | None = None):
    """Cover Omega_n by core balls B(z, c1 delta^k) of generation-k cubes.

    The forest must be subordinated to Omega_{n+1}. Each piece carries the
    region F (union of the generation-k cubes meeting the core ball) and the
    radius c' delta^k of the smallest ball around z strictly containing F.
    """
    from .dyadic import forest_c1

    if forest.n_level != n + 1:
        raise ArgumentError(f"forest lives on level {forest.n_level}, expected {n + 1}")
    if not 1 <= k <= forest.K_depth:
        raise ArgumentError(f"generation {k} outside 1..{forest.K_depth}")
    c1 = forest_c1(space, forest) if c1 is None else c1
    inside_next = structure.in_omega(n + 1)
    omega_n = structure.in_omega(n)

    def pieces_at(g):
        lab = forest.labels[g - 1]
        cubes = np.unique(lab[omega_n & (lab >= 0)])
        return [forest.offsets[g - 1] + int(c) for c in cubes]

    def admissible(g):
        rad = c1 * forest.delta ** g
        return all(inside_next[space.dist_row(forest.center(q)) < rad].all() for q in pieces_at(g))

    if not admissible(k):
        good = [g for g in range(k + 1, forest.K_depth + 1) if admissible(g)]
        raise ScaleError(f"core balls of generation {k} leave Omega_{n + 1}",
                         minimal_k=good[0] if good else None)

    scale = forest.delta ** k
    radius = c1 * scale
    lab = forest.labels[k - 1]
    pieces = []
    for q in pieces_at(k):
        z = forest.center(q)
        d = space.dist_row(z)
        core = np.flatnonzero(d < radius)
        met = np.unique(lab[core][lab[core] >= 0])
        region = np.flatnonzero(np.isin(lab, met))
        far = float(d[region].max())
        enclosing = np.nextafter(far, np.inf)
        pieces.append(CoverPiece(
            cube=q, core_radius=radius, core=core,
            region_cubes=tuple(int(forest.offsets[k - 1] + m) for m in met),
            region=region, enclosing_radius=float(enclosing),
            gamma=float(enclosing / radius)))
    return pieces


def cover_report(space, structure, forest, n, k, pieces) -> Report:
    rep = Report("cover", "covering lemma for dyadic cubes")
    omega_n = structure.omega(n)
    lab = forest.labels[k - 1]
    covered = np.zeros(space.n, dtype=bool)
    core_cover = np.zeros(space.n, dtype=bool)
    region_ok = enclosing_inside = core_in_region = True
    inside_next = structure.in_omega(n + 1)
    for p in pieces:
        covered[lab == p.cube - forest.offsets[k - 1]] = True
        core_cover[p.core] = True
        region_ok &= bool(np.all(space.dist_row(forest.center(p.cube))[p.region] < p.enclosing_radius))
        core_in_region &= bool(np.isin(p.core, p.region).all())
        enclosing_inside &= bool(inside_next[space.dist_row(forest.center(p.cube)) < p.enclosing_radius].all())
    rep.check("cubes_cover_omega_n", covered[omega_n].all())
    rep.check("core_balls_cover_omega_n", core_cover[omega_n].all())
    rep.check("core_inside_region", core_in_region)
    rep.check("region_inside_enclosing_ball", region_ok)
    if not enclosing_inside:
        rep.flags.append("enclosing ball leaves Omega_{n+1} at this generation")
    scale = forest.delta ** k
    cprime = max((p.enclosing_radius / scale for p in pieces), default=0.0)
    c1 = pieces[0].core_radius / scale if pieces else 0.0
    rep.measured.update({"pieces": len(pieces), "c1": c1, "c_prime": cprime,
                         "gamma": max((p.gamma for p in pieces), default=1.0),
                         "enclosing_inside_next_level": enclosing_inside})
    return rep
