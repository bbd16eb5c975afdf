"""Mean oscillation seminorms and the John-Nirenberg ball construction.

Seminorm suprema run over every realized ball (prefix sweeps), so they are
exact discrete maxima rather than grid approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .covering import vitali_constant
from .errors import ArgumentError, ConstructionError, PreconditionError
from .report import Report, Table
from .space import LocalStructure, PointCloud, SampledFunction, ball
from .sweep import exact_sum, neighbourhood, prefix_lengths, prefix_means, prefix_oscillations, scatter_max


def jn_radius_cap(structure: LocalStructure, n: int) -> tuple[float, float]:
    """(R_n, alpha_n) with alpha_n R_n = 2 eps_n up to rounding."""
    B = structure.B(n + 1)
    K = vitali_constant(structure, n)
    alpha = B * (1.5 * K + 1.0)
    R = 2.0 * structure.eps(n) / (B * (4.5 * B * B + 3.0 * B + 1.0))
    assert alpha * R <= 2.0 * structure.eps(n) * (1 + 4 * np.finfo(float).eps), (alpha, R)
    return R, alpha


@dataclass(frozen=True)
class OscillationScan:
    value: float
    center: int
    size: int
    contained: bool


def oscillation_scan(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                     cap: float, p: float = 1.0) -> OscillationScan:
    """Largest (avg |f - f_B|^p)^(1/p) over balls centered in Omega_n with radius <= cap.

    Also reports whether every ball of the scan stays inside Omega_{n+1}.
    """
    vals = f.effective
    w = space.weights
    inside = structure.in_omega(n + 1) if n + 1 <= structure.depth else np.ones(space.n, bool)
    best, where, size, contained = 0.0, -1, 0, True
    for c in structure.omega(n):
        ids, ds = neighbourhood(space, int(c), cap)
        contained &= bool(inside[ids].all())
        lengths = prefix_lengths(ds, cap)
        if lengths.size == 0:
            continue
        means, _ = prefix_means(w[ids], vals[ids], lengths)
        osc = prefix_oscillations(w[ids], vals[ids], lengths, means, p)
        j = int(np.argmax(osc))
        if osc[j] > best:
            best, where, size = float(osc[j]), int(c), int(lengths[j])
    value = best ** (1.0 / p) if p != 1.0 else best
    return OscillationScan(value, where, size, contained)


def bmo_seminorm(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                 cap: float | None = None) -> float:
    """[f]_n: sup of avg |f - f_B| over B(x, r), x in Omega_n, r <= 2 eps_n (or ``cap``)."""
    cap = 2.0 * structure.eps(n) if cap is None else cap
    return oscillation_scan(space, structure, f, n, cap).value


def bmo_p_seminorm(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                   p: float, cap: float | None = None) -> float:
    """[f]_{p,n} over balls of radius at most R_n."""
    if not p > 1:
        raise ArgumentError("the p-seminorm needs p > 1")
    cap = jn_radius_cap(structure, n)[0] if cap is None else cap
    return oscillation_scan(space, structure, f, n, cap, p).value


def _tail_exponent(g: np.ndarray, w: np.ndarray, mass: float, scale: float) -> float:
    """min over values v > 0 of g of (scale / v) ln(2 mass / mu{g >= v})."""
    order = np.argsort(-g, kind="stable")
    gs = g[order]
    cw = np.cumsum(w[order])
    last = np.append(np.flatnonzero(np.diff(gs) != 0), gs.size - 1)
    last = last[gs[last] > 0]
    if last.size == 0:
        return math.inf
    return float(np.min(scale / gs[last] * np.log(2.0 * mass / cw[last])))


def uniform_exponent(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                     seminorm: float | None = None) -> float:
    """Largest b with mu{|f - f_B| > t} <= 2 exp(-b t / [f]_n) mu(B) for all t and all B.

    B ranges over balls centered in Omega_n with radius at most R_n, and the
    supremum over t is taken exactly (just below each attained value).
    """
    sem = bmo_seminorm(space, structure, f, n) if seminorm is None else seminorm
    if sem == 0:
        return math.inf
    R, _ = jn_radius_cap(structure, n)
    vals = f.effective
    w = space.weights
    best = math.inf
    for c in structure.omega(n):
        ids, ds = neighbourhood(space, int(c), R)
        lengths = prefix_lengths(ds, R)
        if lengths.size == 0:
            continue
        means, masses = prefix_means(w[ids], vals[ids], lengths)
        for L, m, mass in zip(lengths.tolist(), means.tolist(), masses.tolist()):
            g = np.abs(vals[ids[:L]] - m)
            best = min(best, _tail_exponent(g, w[ids[:L]], mass, sem))
    return best


def _base_ball(space, structure, n, S):
    center, radius = int(S[0]), float(S[1])
    R, _ = jn_radius_cap(structure, n)
    if not structure.in_omega(n)[center]:
        raise PreconditionError(f"center {center} lies outside Omega_{n}")
    if not 0 < radius <= R:
        raise PreconditionError(f"radius {radius!r} outside (0, R_n = {R!r}]")
    return center, radius


def default_ball(space: PointCloud, structure: LocalStructure, n: int, location=None) -> tuple[int, float]:
    """(center, R_n) with the center nearest ``location`` (default: centroid of Omega_n)."""
    omega = structure.omega(n)
    if location is None:
        location = space.coords[omega].mean(axis=0)
    loc = np.atleast_1d(np.asarray(location, dtype=float))
    d = space.rho(loc[None, :], space.coords[omega])
    order = np.lexsort((omega, d))
    return int(omega[order[0]]), jn_radius_cap(structure, n)[0]


def distribution(g: np.ndarray, w: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    """D(t) = mu{g > t} for every t in ``lambdas``."""
    order = np.argsort(g, kind="stable")
    gs = g[order]
    tail = np.append(np.cumsum(w[order][::-1])[::-1], 0.0)
    return tail[np.searchsorted(gs, lambdas, side="right")]


def jn_lambda_grid(seminorm: float, top: float, points: int = 64) -> np.ndarray:
    lo = 0.05 * seminorm
    return np.geomspace(min(lo, top), top, points)


def jn_verify(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int, S,
              lambda_grid=None, points: int = 64, seminorm: float | None = None) -> Report:
    """Exponential decay of D(t) = mu{x in S : |f - f_S| > t} on a t grid."""
    center, radius = _base_ball(space, structure, n, S)
    sem = bmo_seminorm(space, structure, f, n) if seminorm is None else seminorm
    ids = ball(space, center, radius)
    w = space.weights[ids]
    vals = f.effective[ids]
    mass = exact_sum(w)
    mean = exact_sum(w * vals) / mass
    g = np.abs(vals - mean)
    top = float(g.max())
    rep = Report("jn_verify", "John-Nirenberg exponential decay")
    rep.measured.update({"seminorm": sem, "ball_mass": mass, "max_deviation": top,
                         "center": center, "radius": radius})
    if sem == 0 or top == 0:
        lambdas = np.zeros(0) if lambda_grid is None else np.asarray(lambda_grid, float)
        b_hat = math.inf
    else:
        lambdas = jn_lambda_grid(sem, top, points) if lambda_grid is None else np.asarray(lambda_grid, float)
        if np.any(lambdas <= 0):
            raise ArgumentError("lambda grid must be positive")
    D = distribution(g, w, lambdas)
    if sem > 0 and top > 0:
        live = D > 0
        b_hat = float(np.min(sem / lambdas[live] * np.log(2 * mass / D[live]))) if live.any() else math.inf
    bound = 2 * np.exp(-b_hat * lambdas / sem) * mass if sem > 0 else np.zeros_like(lambdas)
    rep.check("b_positive", b_hat > 0)
    rep.check("D_nonincreasing", bool(np.all(np.diff(D[np.argsort(lambdas)]) <= 0)))
    rep.check("D_at_zero_within_mass", float(distribution(g, w, np.zeros(1))[0]) <= mass)
    rep.check("decay_bound", bool(np.all(D <= bound * (1 + 1e-12))) if sem > 0 else True)
    rep.measured["b_hat"] = b_hat
    rep.measured["grid_points"] = int(lambdas.size)
    rep.tables["jn"] = Table(("lambda", "D", "bound"),
                             [[float(a), float(b), float(c)] for a, b, c in zip(lambdas, D, bound)])
    return rep


@dataclass
class JNNode:
    index: int
    depth: int
    parent: int
    center: int
    radius: float
    members: np.ndarray
    mass: float
    mean: float  # normalized units
    A_hat: float = 0.0
    c_hat: float = 1.0
    lambda0: float = 0.0  # normalized units
    iterations: int = 0
    children: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    processed: bool = False


@dataclass
class JNTree:
    S: tuple
    seminorm: float
    alpha: float
    K: float
    nodes: list
    steps: int
    report: Report

    def level(self, d: int) -> list:
        return [v for v in self.nodes if v.depth == d]

    @property
    def lambda0(self) -> float:
        return self.nodes[0].lambda0 * self.seminorm

    @property
    def lambda1(self) -> float:
        return self.report.measured["lambda1"]

    @property
    def c(self) -> float:
        return self.report.measured["c"]


def local_oscillation_maximal(space: PointCloud, g: np.ndarray, mean: float, region: np.ndarray) -> np.ndarray:
    """sup of avg |g - mean| over balls B containing x with B inside ``region``."""
    w = space.weights
    inside = np.zeros(space.n, dtype=bool)
    inside[region] = True
    dev = np.abs(g - mean)
    out = np.zeros(space.n)
    for c in region:
        ids, ds = neighbourhood(space, int(c), math.inf)
        outside = np.flatnonzero(~inside[ids])
        stop = int(outside[0]) if outside.size else ids.size
        lengths = prefix_lengths(ds, math.inf)
        lengths = lengths[lengths <= stop]
        if lengths.size == 0:
            continue
        means, _ = prefix_means(w[ids], dev[ids], lengths)
        scatter_max(out, ids, lengths, means)
    return out


def _weak_constant(M: np.ndarray, w: np.ndarray, mass: float) -> float:
    """sup_t t mu{M > t} / mass, attained as t rises to an attained value."""
    order = np.argsort(-M, kind="stable")
    Ms = M[order]
    cw = np.cumsum(w[order])
    last = np.append(np.flatnonzero(np.diff(Ms) != 0), Ms.size - 1)
    return float(np.max(Ms[last] * cw[last], initial=0.0) / mass)


def _select(space, U_ids, radii):
    order = np.lexsort((U_ids, -radii))
    taken = np.zeros(space.n, dtype=bool)
    kept = []
    for j in order:
        x, r = int(U_ids[j]), float(radii[j])
        members = space.dist_row(x) < r
        if not (members & taken).any():
            kept.append((x, r))
            taken |= members
    return kept


def _mass(space, mask) -> float:
    return exact_sum(space.weights[mask])


def _split(space, node: JNNode, M: np.ndarray, K: float, max_rounds: int):
    """Fixed point in c: lambda0 = 2 c A, children from the Vitali selection of U."""
    w = space.weights
    S = node.members
    c = 1.0
    for rounds in range(1, max_rounds + 1):
        lam0 = 2 * c * node.A_hat
        U = S[M[S] > lam0]
        if U.size == 0:
            return c, lam0, [], rounds
        if U.size == S.size:
            raise ConstructionError(f"U fills the node {node.index}: mu(U) <= A mu(S) / lambda0 violated")
        in_U = np.zeros(space.n, dtype=bool)
        in_U[U] = True
        gaps = np.array([space.dist_row(int(x))[~in_U].min() for x in U])
        kept = _select(space, U, gaps / (2 * K))
        measured = 1.0
        for x, r in kept:
            d = space.dist_row(x)
            small, mid, big = _mass(space, d < r), _mass(space, d < K * r), _mass(space, d < 3 * K * r)
            measured = max(measured, mid / small, big / mid)
        if measured <= c:
            return c, lam0, kept, rounds
        c = measured
    raise ConstructionError(f"doubling constant did not settle at node {node.index} after {max_rounds} rounds")


def jn_construct(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int, S,
                 steps: int = 3, seminorm: float | None = None, max_rounds: int = 64) -> JNTree:
    """Nested stopping-time balls inside S, ``steps`` generations deep.

    Works on f / [f]_n; lambda0, lambda1 and the per-step decay thresholds are reported
    back in the units of f.
    """
    center, radius = _base_ball(space, structure, n, S)
    if steps < 1:
        raise ArgumentError("at least one step is required")
    sem = bmo_seminorm(space, structure, f, n) if seminorm is None else seminorm
    R, alpha = jn_radius_cap(structure, n)
    K = vitali_constant(structure, n)
    w = space.weights
    g = f.effective / sem if sem > 0 else np.zeros(space.n)
    inside_next = structure.in_omega(n + 1)

    def make(depth, parent, c, r):
        ids = ball(space, c, r)
        mass = exact_sum(w[ids])
        return JNNode(len(nodes), depth, parent, c, r, ids, mass, exact_sum(w[ids] * g[ids]) / mass)

    nodes: list[JNNode] = []
    nodes.append(make(0, -1, center, radius))
    frontier = [0]
    for depth in range(steps):
        nxt = []
        for idx in frontier:
            node = nodes[idx]
            region = ball(space, node.center, alpha * node.radius)
            M = local_oscillation_maximal(space, g, node.mean, region)
            S_ids = node.members
            node.A_hat = _weak_constant(M[S_ids], w[S_ids], node.mass)
            node.c_hat, node.lambda0, kept, node.iterations = _split(space, node, M, K, max_rounds)
            node.processed = True
            covered = np.zeros(space.n, dtype=bool)
            child_mass = []
            drift_ok = True
            three_inside = True
            for x, r in kept:
                child = make(depth + 1, idx, x, K * r)
                nodes.append(child)
                node.children.append(child.index)
                nxt.append(child.index)
                covered[child.members] = True
                child_mass.append(child.mass)
                drift_ok &= abs(node.mean - child.mean) <= node.c_hat * node.lambda0 * (1 + 1e-12)
                big = ball(space, x, 3 * K * r)
                three_inside &= bool(np.isin(big, region).all())
            in_S = np.zeros(space.n, dtype=bool)
            in_S[S_ids] = True
            high = S_ids[np.abs(g[S_ids] - node.mean) > node.lambda0]
            node.checks = {
                "nested": bool(in_S[covered].all()),
                "i_coverage": bool(covered[high].all()),
                "ii_halving": math.fsum(child_mass) <= 0.5 * node.mass,
                "iii_drift": bool(drift_ok),
                "enlarged_ball_inside_alpha_ball": three_inside,
                "alpha_ball_inside_next_level": bool(inside_next[region].all()),
            }
        frontier = nxt

    processed = [v for v in nodes if v.processed]
    lam1 = max(v.c_hat * v.lambda0 for v in processed)
    root = nodes[0]
    dev = np.abs(g[root.members] - root.mean)
    rep = Report("jn_construct", "John-Nirenberg stopping-time construction")
    for key in ("nested", "i_coverage", "ii_halving", "iii_drift"):
        rep.check(key, all(v.checks[key] for v in processed))
    if not all(v.checks["enlarged_ball_inside_alpha_ball"] for v in processed):
        rep.flags.append("an enlarged selected ball leaves the alpha-dilated parent")
    if not all(v.checks["alpha_ball_inside_next_level"] for v in processed):
        rep.flags.append("an alpha-dilated ball leaves Omega_{n+1}")
    rows = []
    for N in range(1, steps + 1):
        D = exact_sum(w[root.members][dev > N * lam1])
        bound = root.mass * 2.0 ** -N
        rep.check(f"decay_N{N}", D <= bound)
        rows.append([N, N * lam1 * sem, D, bound])
    rep.tables["decay_steps"] = Table(("N", "threshold", "D", "bound"), rows)
    rep.measured.update({
        "seminorm": sem, "alpha": alpha, "K": K, "R_n": R, "center": center, "radius": radius,
        "A_hat": root.A_hat, "lambda0": root.lambda0 * sem, "lambda1": lam1 * sem,
        "c": max(v.c_hat for v in processed),
        "nodes_per_depth": [sum(1 for v in nodes if v.depth == d) for d in range(steps + 1)],
        "max_rounds_used": max(v.iterations for v in processed),
        "small_nodes": sum(1 for v in processed if v.members.size <= 2),
    })
    rep.details["nodes"] = [
        {"index": v.index, "depth": v.depth, "parent": v.parent, "center": v.center,
         "radius": v.radius, "size": int(v.members.size), "mass": v.mass,
         "mean": v.mean * sem, "lambda0": v.lambda0 * sem, "c": v.c_hat,
         "children": v.children, "checks": v.checks}
        for v in nodes]
    return JNTree((center, radius), sem, alpha, K, nodes, steps, rep)


def gamma_bound(b_hat: float, p: float) -> float:
    """(2 p Gamma(p) / b^p)^(1/p), the Lp deviation constant implied by exponential decay rate b."""
    if math.isinf(b_hat):
        return 0.0
    if b_hat <= 0:
        return math.inf
    return (2 * p * math.gamma(p)) ** (1 / p) / b_hat


def bmo_equiv_check(space: PointCloud, structure: LocalStructure, f: SampledFunction, n: int,
                    p: float, S=None) -> Report:
    """[f]_{p,n} / [f]_n against the constant implied by the uniform decay exponent."""
    scan = oscillation_scan(space, structure, f, n, 2.0 * structure.eps(n))
    sem = scan.value
    sem_p = bmo_p_seminorm(space, structure, f, n, p)
    if sem == 0:
        ratio = 1.0 if sem_p == 0 else math.inf
    else:
        ratio = sem_p / sem
    b_hat = uniform_exponent(space, structure, f, n, sem)
    bound = gamma_bound(b_hat, p)
    available = math.isfinite(b_hat) and b_hat > 0
    dominated = ratio <= bound * 1.05
    rep = Report("bmo_equiv", "equivalence of BMO and BMO^p seminorms")
    rep.check("ratio_finite", math.isfinite(ratio))
    rep.check("balls_inside_next_level", scan.contained)
    rep.check("within_gamma_bound", dominated if available else math.isfinite(ratio))
    rep.measured.update({"p": p, "seminorm": sem, "p_seminorm": sem_p, "ratio": ratio,
                         "b_hat": b_hat, "gamma_bound": bound, "gamma_dominates": dominated,
                         "witness_center": scan.center, "witness_size": scan.size})
    if S is not None:
        single = jn_verify(space, structure, f, n, S, seminorm=sem).measured["b_hat"]
        rep.measured["b_hat_single_ball"] = single
        rep.measured["gamma_bound_single_ball"] = gamma_bound(single, p)
    return rep
