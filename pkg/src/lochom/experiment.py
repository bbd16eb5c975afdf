"""Experiment configs, the pipeline registry, and the report tree writer."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bmo, covering, dyadic, maximal, sharp
from .errors import LochomError, ScaleError, UsageError
from .functions import function_library, fixture_suite
from .report import Report, Table, _numeric_rows, dumps, emit_report
from .space import SampledFunction, instantiate_builtin, load_function_csv, load_space, verify_axioms


@dataclass
class SpaceSpec:
    name: str = "grid1d"
    params: dict = field(default_factory=dict)
    path: str | None = None

    def build(self):
        if self.path:
            return load_space(self.path)
        return instantiate_builtin(self.name, self.params)


@dataclass
class FunctionSpec:
    name: str = "log_singularity"
    params: dict = field(default_factory=dict)
    path: str | None = None

    def build(self, space) -> SampledFunction:
        if self.path:
            return load_function_csv(self.path, space)
        return function_library(self.name, self.params, space)


@dataclass
class Step:
    op: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    space: SpaceSpec = field(default_factory=SpaceSpec)
    function: FunctionSpec = field(default_factory=FunctionSpec)
    pipeline: list = field(default_factory=list)
    out: str = "runs"
    seed: int = 0

    def identity(self) -> dict:
        """Everything that determines the results (the output location does not)."""
        doc = asdict(self)
        doc.pop("out")
        return doc

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.identity()).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise UsageError("config: expected a JSON object")
        known = {"space", "function", "pipeline", "out", "seed"}
        extra = sorted(set(doc) - known)
        if extra:
            raise UsageError(f"config: unknown field(s) {extra}")
        space = _spec(SpaceSpec, doc.get("space", {}), "space")
        function = _spec(FunctionSpec, doc.get("function", {}), "function")
        steps = []
        pipeline = doc.get("pipeline", [])
        if not isinstance(pipeline, list):
            raise UsageError("config.pipeline: expected a list")
        for i, item in enumerate(pipeline):
            if isinstance(item, str):
                item = {"op": item}
            if not isinstance(item, dict) or "op" not in item:
                raise UsageError(f"config.pipeline[{i}]: expected a string or an object with 'op'")
            if item["op"] not in OPERATIONS:
                raise UsageError(f"config.pipeline[{i}].op: unknown operation {item['op']!r}; "
                                 f"choose from {sorted(OPERATIONS)}")
            params = item.get("params", {})
            if not isinstance(params, dict):
                raise UsageError(f"config.pipeline[{i}].params: expected an object")
            steps.append(Step(item["op"], params))
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise UsageError("config.seed: expected an integer")
        return cls(space, function, steps, str(doc.get("out", "runs")), seed)


def _spec(kind, doc, where):
    if not isinstance(doc, dict):
        raise UsageError(f"config.{where}: expected an object")
    allowed = {"name", "params", "path"}
    extra = sorted(set(doc) - allowed)
    if extra:
        raise UsageError(f"config.{where}: unknown field(s) {extra}")
    if not isinstance(doc.get("params", {}), dict):
        raise UsageError(f"config.{where}.params: expected an object")
    return kind(**doc)


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return ExperimentConfig.from_dict(doc)


# ---------------------------------------------------------------------------
# pipeline operations


class Context:
    """Space, function and lazily built forests shared by the steps of a run."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.space, self.structure = config.space.build()
        self.f = config.function.build(self.space)
        self.seed = config.seed
        self._forests = {}

    def forest(self, n: int, delta: float = 0.25, depth: int | None = None):
        depth = dyadic.depth_for_singletons(self.space, delta) if depth is None else int(depth)
        key = (n, float(delta), depth)
        if key not in self._forests:
            self._forests[key] = dyadic.build_forest(self.space, self.structure, n, delta, depth)
        return self._forests[key]


def op_axioms(ctx: Context, sample_budget: int | None = 20000) -> list:
    return [verify_axioms(ctx.space, ctx.structure, sample_budget, seed=ctx.seed)]


def op_cover(ctx: Context, level: int = 1, families: int = 20, balls: int = 16, k: int | None = None,
             delta: float = 0.25) -> list:
    rng = np.random.default_rng(ctx.seed)
    c_hats, disjoint, covered = [], True, True
    first = None
    for _ in range(families):
        fam, E = covering.random_family(ctx.space, ctx.structure, level, balls, rng)
        _, rep = covering.vitali_select(ctx.space, ctx.structure, fam, E)
        first = rep if first is None else first
        disjoint &= rep.checks["disjoint"]
        covered &= rep.checks["enlarged_cover"]
        c_hats.append(rep.measured["c_hat"])
    vit = Report("vitali", "Vitali covering lemma")
    vit.check("disjoint", disjoint)
    vit.check("enlarged_cover", covered)
    vit.measured.update({"families": families, "c_hat_min": min(c_hats, default=math.inf),
                         "c_hat": first.measured["c_hat"] if first else math.inf,
                         "K_n": first.measured["K_n"] if first else None})
    vit.details["selected"] = first.details["selected"] if first else []
    out = [vit]
    if level + 2 <= ctx.structure.depth:
        forest = ctx.forest(level + 1, delta, 4)
        if k is None:
            try:
                pieces = covering.finite_ball_cover(ctx.space, ctx.structure, forest, level, 1)
                k = 1
            except covering.ScaleError as exc:
                if exc.minimal_k is None:
                    raise
                k = exc.minimal_k
                pieces = covering.finite_ball_cover(ctx.space, ctx.structure, forest, level, k)
        else:
            pieces = covering.finite_ball_cover(ctx.space, ctx.structure, forest, level, k)
        rep = covering.cover_report(ctx.space, ctx.structure, forest, level, k, pieces)
        rep.measured["generation"] = k
        out.append(rep)
    return out


def op_cubes(ctx: Context, level: int = 1, delta: float = 0.25, depth: int = 4,
             sample_budget: int = 1000, dot: bool = False) -> list:
    forest = ctx.forest(level, delta, depth)
    rep = dyadic.verify_forest(ctx.space, ctx.structure, forest, sample_budget, seed=ctx.seed)
    rep.details["summary"] = {"level": level, "delta": delta, "depth": depth,
                              "cubes": int(forest.n_cubes)}
    if dot:
        rep.details["dot"] = dyadic.forest_to_dot(forest)
    return [rep]


def op_maximal(ctx: Context, level: int = 1, p: float = 2.0, decades: int = 4, points: int = 17) -> list:
    space, structure, f = ctx.space, ctx.structure, ctx.f
    top = float(np.max(np.abs(f.effective), initial=0.0)) or 1.0
    t_grid = np.geomspace(top * 10.0 ** -decades, top, points)
    weak = maximal.weak_type_check(space, structure, f, level, t_grid)
    strong = maximal.strong_type_check(space, structure, f, level, p)
    diff = maximal.differentiation_check(space, structure, f, level)
    res = maximal.local_maximal(space, structure, f, level)
    diff.tables["values"] = maximal.maximal_table(f, res, structure.omega(level))
    return [weak, strong, diff]


def _no_root(kind: str, exc: ScaleError) -> list:
    rep = Report(kind, "admissible root")
    rep.check("root_admissible", False)
    rep.flags.append(f"no cube generation is fine enough for this space ({exc}); refine the grid")
    return [rep]


def op_sharp(ctx: Context, level: int = 1, delta: float = 0.25, p: float = 2.0) -> list:
    forest = ctx.forest(level, delta)
    try:
        root = sharp.choose_root(ctx.space, ctx.structure, forest, fit="sharp")
    except ScaleError as exc:
        return _no_root("sharp_compare", exc)
    cmp_rep = sharp.sharp_comparison_check(ctx.space, ctx.structure, forest, ctx.f, root)
    cor = sharp.corollary_ball_check(ctx.space, ctx.structure, forest, ctx.f, root, p)
    for rep in (cmp_rep, cor):
        rep.measured["root"] = root
    return [cmp_rep, cor]


def cz_lambdas(averages: dict, root: int, count: int = 16) -> np.ndarray:
    """Geometric thresholds from the root average up to just past the largest cube average."""
    a = averages[root]
    top = max(averages.values())
    if top <= 0:
        return np.ones(1)
    lo = a if a > 0 else top / 64
    return np.geomspace(lo, 1.25 * top, count)


def op_cz(ctx: Context, level: int = 1, delta: float = 0.25, lambda_grid=None, count: int = 16,
          root_generation: int | None = None) -> list:
    forest = ctx.forest(level, delta)
    try:
        root = sharp.choose_root(ctx.space, ctx.structure, forest, generation=root_generation)
    except ScaleError as exc:
        return _no_root("cz", exc)
    if lambda_grid is None:
        averages = sharp.cube_abs_averages(ctx.space, forest, ctx.f, sharp.subtree(forest, root))
        lambda_grid = cz_lambdas(averages, root, count)
    rep = sharp.cz_family_properties(ctx.space, ctx.structure, forest, ctx.f, root, sorted(lambda_grid))
    rep.measured["root"] = root
    return [rep]


def op_fs(ctx: Context, level: int = 1, delta: float = 0.25, p=(1, 2, 4), sharp_kind=("dyadic", "ball"),
          root_generation: int = 1) -> list:
    forest = ctx.forest(level, delta)
    root = sharp.choose_root(ctx.space, ctx.structure, forest, generation=root_generation)
    ps = [p] if isinstance(p, (int, float)) else list(p)
    kinds = [sharp_kind] if isinstance(sharp_kind, str) else list(sharp_kind)
    out, rows = [], []
    members = forest.members(root)
    per_point = {}
    for kind in kinds:
        cache = {}
        for q in ps:
            res = sharp.fs_verify(ctx.space, ctx.structure, forest, ctx.f, root, float(q), kind, cache=cache)
            res.report.measured["root"] = root
            out.append(res.report)
            rows.append([ctx.config.function.name, float(q), kind, res.ratio])
        per_point[kind] = cache[f"sharp_{kind}"]
        per_point["Mf"] = cache["Mf"]
    summary = Report("fs_summary", "local Fefferman-Stein inequality")
    summary.check("all_finite", all(r.passed for r in out))
    summary.measured.update({"max_ratio": max((r[3] for r in rows), default=1.0), "root": root})
    summary.tables["fs"] = Table(("function", "p", "sharp", "ratio"), rows)
    cols = ["point_id", "Mf"] + [k for k in kinds]
    summary.tables["points"] = Table(tuple(cols), [[int(i)] + [float(per_point[c][i]) for c in cols[1:]]
                                                   for i in members])
    return [summary] + out


def op_bmo(ctx: Context, level: int = 1, p=(2, 4)) -> list:
    ps = [p] if isinstance(p, (int, float)) else list(p)
    return [bmo.bmo_equiv_check(ctx.space, ctx.structure, ctx.f, level, float(q)) for q in ps]


def op_jn(ctx: Context, level: int = 1, steps: int = 3, lambda_grid=None, points: int = 64,
          center: int | None = None, radius: float | None = None) -> list:
    space, structure = ctx.space, ctx.structure
    S = bmo.default_ball(space, structure, level)
    S = (S[0] if center is None else int(center), S[1] if radius is None else float(radius))
    sem = bmo.bmo_seminorm(space, structure, ctx.f, level)
    tree = bmo.jn_construct(space, structure, ctx.f, level, S, steps, seminorm=sem)
    ver = bmo.jn_verify(space, structure, ctx.f, level, S, lambda_grid, points, seminorm=sem)
    return [ver, tree.report]


OPERATIONS = {
    "axioms": op_axioms,
    "cover": op_cover,
    "cubes": op_cubes,
    "maximal": op_maximal,
    "sharp": op_sharp,
    "cz": op_cz,
    "fs": op_fs,
    "bmo": op_bmo,
    "jn": op_jn,
}

SUITE = ("axioms", "cover", "cubes", "maximal", "sharp", "cz", "fs", "bmo", "jn")


@dataclass
class RunResult:
    directory: Path
    passed: bool
    reports: list  # (file stem, Report)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def run_experiment(config: ExperimentConfig, formats=("json", "csv")) -> RunResult:
    """Run every step and write NN_op[_k].json (plus table files) and summary.json."""
    ctx = Context(config)
    directory = Path(config.out) / config.digest()
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.json").write_text(dumps(config.identity()))
    written = []
    summary = []
    for i, step in enumerate(config.pipeline):
        op = OPERATIONS.get(step.op)
        if op is None:
            raise UsageError(f"unknown operation {step.op!r}")
        try:
            reports = op(ctx, **step.params)
        except TypeError as exc:
            raise UsageError(f"pipeline[{i}] ({step.op}): {exc}") from exc
        for j, rep in enumerate(reports):
            stem = directory / (f"{i:02d}_{step.op}" + (f"_{j}" if len(reports) > 1 else "") + f"_{rep.kind}")
            for fmt in formats:
                if fmt == "json" or (fmt == "csv" and rep.tables) or \
                        any(_numeric_rows(t) for t in rep.tables.values()):
                    emit_report(rep, fmt, stem)
            written.append((stem.name, rep))
            summary.append({"step": i, "op": step.op, "report": stem.name, "kind": rep.kind,
                            "anchor": rep.anchor, "passed": rep.passed,
                            "failed_checks": sorted(k for k, v in rep.checks.items() if not v)})
    passed = all(item["passed"] for item in summary)
    (directory / "summary.json").write_text(dumps({"passed": passed, "steps": summary,
                                                   "digest": config.digest()}))
    return RunResult(directory, passed, written)


def suite_config(space: SpaceSpec | None = None, function: FunctionSpec | None = None,
                 out: str = "runs", seed: int = 0) -> ExperimentConfig:
    return ExperimentConfig(space or SpaceSpec(), function or FunctionSpec(),
                            [Step(op) for op in SUITE], out, seed)


def fixture_functions(space, seed: int = 7) -> dict:
    return fixture_suite(space, seed)


__all__ = ["ExperimentConfig", "SpaceSpec", "FunctionSpec", "Step", "OPERATIONS", "SUITE",
           "run_experiment", "suite_config", "load_config", "RunResult", "LochomError"]
