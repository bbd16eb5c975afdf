"""Dyadic cubes on a point cloud.

Generation k is built from a maximal delta^k-separated net of Omega_n. Nets
are nested: generation k+1 starts from the centers of generation k and adds
points greedily in ascending id order. Every point of Omega_n is attached to
its nearest deepest-generation center and inherits the whole ancestor chain,
so cubes of one generation partition Omega_n and cubes of different
generations are nested or disjoint by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ScaleError
from .report import Report
from .space import LocalStructure, PointCloud, ball, measure


@dataclass(frozen=True)
class Cube:
    id: int
    k: int
    center: int
    parent: int | None
    members: np.ndarray


@dataclass
class DyadicForest:
    n_level: int
    delta: float
    K_depth: int
    centers: list            # per generation: point ids of the net, in net order
    parents: list            # per generation: local parent index (-1 for k = 1)
    labels: np.ndarray       # (K_depth, N): local cube index per point, -1 outside Omega_n
    n_points: int
    exceptional_set: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    _members: dict = field(default_factory=dict, repr=False)

    @property
    def offsets(self) -> list:
        out, acc = [], 0
        for c in self.centers:
            out.append(acc)
            acc += len(c)
        return out

    @property
    def n_cubes(self) -> int:
        return sum(len(c) for c in self.centers)

    def locate(self, gid: int) -> tuple[int, int]:
        """(generation, local index) of a global cube id."""
        if not 0 <= gid < self.n_cubes:
            raise ArgumentError(f"unknown cube id {gid}")
        for k, off in enumerate(self.offsets, start=1):
            if gid < off + len(self.centers[k - 1]):
                return k, gid - off
        raise AssertionError("unreachable")

    def generation(self, k: int) -> list[int]:
        self._check_k(k)
        off = self.offsets[k - 1]
        return list(range(off, off + len(self.centers[k - 1])))

    def center(self, gid: int) -> int:
        k, j = self.locate(gid)
        return int(self.centers[k - 1][j])

    def parent(self, gid: int) -> int | None:
        k, j = self.locate(gid)
        if k == 1:
            return None
        return self.offsets[k - 2] + int(self.parents[k - 1][j])

    def members(self, gid: int) -> np.ndarray:
        if gid not in self._members:
            k, j = self.locate(gid)
            self._members[gid] = np.flatnonzero(self.labels[k - 1] == j)
        return self._members[gid]

    def cube(self, gid: int) -> Cube:
        k, _ = self.locate(gid)
        return Cube(gid, k, self.center(gid), self.parent(gid), self.members(gid))

    def cube_of(self, point: int, k: int) -> int:
        self._check_k(k)
        j = int(self.labels[k - 1][point])
        if j < 0:
            raise ArgumentError(f"point {point} is not covered by the forest")
        return self.offsets[k - 1] + j

    def children(self, gid: int) -> list[int]:
        k, j = self.locate(gid)
        if k == self.K_depth:
            return []
        off = self.offsets[k]
        return [off + int(i) for i in np.flatnonzero(self.parents[k] == j)]

    def _check_k(self, k: int):
        if not 1 <= k <= self.K_depth:
            raise ArgumentError(f"generation {k} outside 1..{self.K_depth}")


def build_forest(space: PointCloud, structure: LocalStructure, n: int, delta: float = 0.25,
                 K_depth: int = 4) -> DyadicForest:
    """Nested greedy nets with nearest-center parent links."""
    if not 0 < delta < 1:
        raise ArgumentError("delta must lie in (0, 1)")
    if K_depth < 1:
        raise ArgumentError("K_depth must be at least 1")
    omega = structure.omega(n)
    if omega.size == 0:
        raise ScaleError(f"Omega_{n} is empty")
    pos = np.full(space.n, -1, dtype=np.intp)
    pos[omega] = np.arange(omega.size)
    D = _omega_distances(space, omega)

    centers, parents = [], []
    prev = np.zeros(0, dtype=np.intp)
    for k in range(1, K_depth + 1):
        scale = delta ** k
        covered = np.zeros(omega.size, dtype=bool)
        net = []
        for c in prev:
            net.append(int(c))
            covered |= D(pos[c]) < scale
        for i in range(omega.size):
            if not covered[i]:
                net.append(int(omega[i]))
                covered |= D(i) < scale
        net = np.asarray(net, dtype=np.intp)
        if net.size == 0:
            raise ScaleError(f"empty net at generation {k}")
        if k == 1:
            parents.append(np.full(net.size, -1, dtype=np.intp))
        else:
            d = space.distances(net, prev)
            parents.append(_argmin_rows(d, prev))
        centers.append(net)
        prev = net

    labels = np.full((K_depth, space.n), -1, dtype=np.intp)
    deepest = centers[-1]
    d = space.distances(omega, deepest)
    labels[K_depth - 1, omega] = _argmin_rows(d, deepest)
    for k in range(K_depth - 1, 0, -1):
        labels[k - 1, omega] = parents[k][labels[k, omega]]
    return DyadicForest(n, float(delta), int(K_depth), centers, parents, labels, space.n)


def _omega_distances(space, omega):
    dense = space.dense()
    if dense is not None:
        sub = dense[np.ix_(omega, omega)]
        return lambda i: sub[i]
    return lambda i: space.dist_row(int(omega[i]))[omega]


def _argmin_rows(d: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Column index of each row minimum, ties to the smaller point id."""
    order = np.argsort(cols, kind="stable")
    return order[np.argmin(d[:, order], axis=1)]


def depth_for_singletons(space: PointCloud, delta: float) -> int:
    """Smallest depth whose deepest cubes are single points."""
    sep = space.min_separation()
    return max(1, math.ceil(math.log(sep) / math.log(delta) - 1e-12))


def subcubes(forest: DyadicForest, cube: int, k_target: int) -> list[int]:
    k, j = forest.locate(cube)
    forest._check_k(k_target)
    if k_target < k:
        raise ArgumentError("target generation above the cube")
    local = np.array([j])
    for g in range(k + 1, k_target + 1):
        local = np.flatnonzero(np.isin(forest.parents[g - 1], local))
    off = forest.offsets[k_target - 1]
    return [off + int(i) for i in local]


def ancestor(forest: DyadicForest, cube: int, k_target: int) -> int:
    k, _ = forest.locate(cube)
    forest._check_k(k_target)
    if k_target > k:
        raise ArgumentError("target generation below the cube")
    while k > k_target:
        cube = forest.parent(cube)
        k -= 1
    return cube


def forest_c1(space: PointCloud, forest: DyadicForest) -> float:
    """Smallest c1 with diam Q < c1 delta^k and Q inside B(z, c1 delta^k) for every cube."""
    worst = 0.0
    for k in range(1, forest.K_depth + 1):
        scale = forest.delta ** k
        for gid in forest.generation(k):
            worst = max(worst, _spread(space, forest.center(gid), forest.members(gid)) / scale)
    return float(np.nextafter(worst, np.inf))


def _spread(space, z, members) -> float:
    reach = float(space.dist_row(z)[members].max())
    if members.size > 1:
        diam = 0.0
        for lo in range(0, members.size, 1024):
            diam = max(diam, float(space.distances(members[lo:lo + 1024], members).max()))
        reach = max(reach, diam)
    return reach


def parent_child_ratio(space: PointCloud, forest: DyadicForest) -> float:
    """max mu(parent) / mu(child) over the forest (1 when there is one generation)."""
    best = 1.0
    mass = {}
    for gid in range(forest.n_cubes):
        mass[gid] = measure(space, forest.members(gid))
    for gid in range(forest.n_cubes):
        p = forest.parent(gid)
        if p is not None:
            best = max(best, mass[p] / mass[gid])
    return best


def forest_to_dot(forest: DyadicForest) -> str:
    lines = ["digraph forest {", "  node [shape=box];"]
    for gid in range(forest.n_cubes):
        k, _ = forest.locate(gid)
        size = forest.members(gid).size
        lines.append(f'  c{gid} [label="k={k} z={forest.center(gid)} |Q|={size}"];')
        p = forest.parent(gid)
        if p is not None:
            lines.append(f"  c{p} -> c{gid};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# verification


def verify_forest(space: PointCloud, structure: LocalStructure, forest: DyadicForest,
                  sample_budget: int = 1000, seed: int = 0) -> Report:
    """Check the cube properties exactly where possible and measure the constants."""
    if forest.n_points != space.n:
        raise ArgumentError("forest was built on a different point cloud")
    n = forest.n_level
    rep = Report("forest", "dyadic cube theorem")
    omega = structure.omega(n)
    in_omega = structure.in_omega(n)
    labels = forest.labels
    K = forest.K_depth

    # (f), (g): every Omega_n point has a cube at every generation, nothing else does
    rep.check("f_generation_partitions_omega", bool(np.all(labels[:, omega] >= 0)))
    rep.check("g_every_generation_reaches_each_point",
              bool(np.all(labels[:, ~in_omega] == -1)) and bool(np.all(labels[:, omega] >= 0)))
    rep.check("exceptional_set_empty", forest.exceptional_set.size == 0)
    # (c), (e): labels follow parent links, so chains exist and cubes nest
    chain_ok = all(np.array_equal(labels[k - 1, omega], forest.parents[k][labels[k, omega]])
                   for k in range(1, K))
    nonempty = all(np.bincount(labels[k - 1, omega], minlength=len(forest.centers[k - 1])).min() > 0
                   for k in range(1, K + 1))
    rep.check("c_ancestor_chains", chain_ok and nonempty)
    rep.check("e_nested_or_disjoint", chain_ok)
    rep.check("b_cubes_inside_next_level", bool(structure.in_omega(min(n + 1, structure.depth))[omega].all()))

    # net invariants
    sep_ok = cover_ok = True
    for k in range(1, K + 1):
        scale = forest.delta ** k
        net = forest.centers[k - 1]
        d = space.distances(net, net)
        np.fill_diagonal(d, np.inf)
        sep_ok &= bool(d.min(initial=np.inf) >= scale)
        cover_ok &= bool(space.distances(omega, net).min(axis=1).max() < scale)
    rep.check("nets_separated", sep_ok)
    rep.check("nets_maximal", cover_ok)

    # (a) inner ball, (d) outer ball and diameter
    a0 = math.inf
    c1_raw = 0.0
    for k in range(1, K + 1):
        scale = forest.delta ** k
        for gid in forest.generation(k):
            z = forest.center(gid)
            mem = forest.members(gid)
            d = space.dist_row(z)
            outside = in_omega.copy()
            outside[mem] = False
            if outside.any():
                a0 = min(a0, float(d[outside].min()) / scale)
            c1_raw = max(c1_raw, _spread(space, z, mem) / scale)
    c1 = float(np.nextafter(c1_raw, np.inf))
    rep.check("a_inner_ball_positive", a0 > 0)
    rep.check("d_outer_ball_finite", math.isfinite(c1))

    # (h) restricted doubling and lower bounds on sampled (cube, x, r)
    rng = np.random.default_rng(seed)
    triples = sample_triples(space, forest, rng, sample_budget)
    values = [triple_ratios(space, forest, t) for t in triples]
    c2 = max((v[0] for v in values), default=1.0)
    c0 = min((v[1] for v in values), default=1.0)
    rep.check("h_doubling_finite", math.isfinite(c2))
    rep.check("h_lower_bound_positive", c0 > 0)

    ratio = parent_child_ratio(space, forest)
    eps_next = structure.eps(n + 1) if n + 1 <= structure.depth else structure.eps(n)
    small = c1 * forest.delta < 2.0 * eps_next
    if not small:
        rep.flags.append("c1*delta >= 2*eps_{n+1}: outer balls of generation 1 may leave Omega_{n+2}")
    rep.measured.update({"a0": a0, "c1": c1, "c2": c2, "c0": c0, "parent_child_ratio": ratio,
                         "c1_delta_small": small, "triples": len(triples)})
    rep.details["cubes_per_generation"] = [len(c) for c in forest.centers]
    rep.details["triples"] = [list(t) for t in triples]
    rep.details["triple_values"] = [list(v) for v in values]
    return rep


def triple_radii(space, forest, gid: int, x: int) -> np.ndarray:
    """Radii covering every constant piece of the (h) ratios for (cube, x)."""
    k, _ = forest.locate(gid)
    scale = forest.delta ** k
    d = space.dist_row(x)
    mem = forest.members(gid)
    dq = d[mem]
    near = d[d < 2 * scale]
    bps = np.unique(np.concatenate([[0.0, scale], dq, dq / 2, near, near / 2]))
    mids = (bps[:-1] + bps[1:]) / 2
    return np.concatenate([mids, [scale, 2 * bps[-1] + scale]])


def sample_triples(space, forest, rng, budget: int) -> list[tuple[int, int, float]]:
    """Budget-many (cube, x, r) triples spread over generations."""
    out = []
    gids = np.arange(forest.n_cubes)
    for _ in range(budget):
        gid = int(rng.choice(gids))
        mem = forest.members(gid)
        x = int(mem[rng.integers(mem.size)])
        radii = triple_radii(space, forest, gid, x)
        out.append((gid, x, float(radii[rng.integers(radii.size)])))
    return out


def all_triples(space, forest) -> list[tuple[int, int, float]]:
    out = []
    for gid in range(forest.n_cubes):
        for x in forest.members(gid):
            for r in triple_radii(space, forest, gid, int(x)):
                out.append((gid, int(x), float(r)))
    return out


def triple_ratios(space, forest, triple) -> tuple[float, float]:
    """(doubling ratio, lower-bound ratio) of one (cube, x, r) triple via masks."""
    gid, x, r = triple
    k, j = forest.locate(gid)
    inq = forest.labels[k - 1] == j
    d = space.dist_row(x)
    w = space.weights
    small = math.fsum(w[(d < r) & inq])
    big = math.fsum(w[(d < 2 * r) & inq])
    if r <= forest.delta ** k:
        lower = small / math.fsum(w[d < r])
    else:
        lower = small / math.fsum(w[inq])
    return big / small, lower


def triple_ratios_bruteforce(space, forest, triple) -> tuple[float, float]:
    """Same quantities from explicit ball and cube sets."""
    gid, x, r = triple
    k, _ = forest.locate(gid)
    members = forest.members(gid)
    small_ball = ball(space, x, r)
    small = measure(space, np.intersect1d(small_ball, members))
    big = measure(space, np.intersect1d(ball(space, x, 2 * r), members))
    if r <= forest.delta ** k:
        lower = small / measure(space, small_ball)
    else:
        lower = small / measure(space, members)
    return big / small, lower
