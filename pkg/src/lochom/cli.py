"""Command line driver: ``lochom <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import LochomError, UsageError
from .experiment import SUITE, ExperimentConfig, FunctionSpec, SpaceSpec, Step, load_config, run_experiment


def _value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def parse_named(text: str) -> tuple[str, dict]:
    """``name:key=value,key=value`` -> (name, params)."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"expected key=value in {text!r}, got {item!r}")
        params[key.strip()] = _value(val.strip())
    return name.strip(), params


def space_spec(text: str) -> SpaceSpec:
    if text.endswith(".json") or Path(text).is_file():
        return SpaceSpec(path=text)
    name, params = parse_named(text)
    return SpaceSpec(name, params)


def function_spec(text: str) -> FunctionSpec:
    if text.endswith(".csv") or Path(text).is_file():
        return FunctionSpec(path=text)
    name, params = parse_named(text)
    return FunctionSpec(name, params)


def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--space", default=d("grid1d:N=256"),
                        help="builtin as name:key=value,... or a JSON space file")
    parser.add_argument("--function", default=d("log_singularity"),
                        help="library function as name:key=value,... or a CSV of point_id,value")
    parser.add_argument("--out", default=d(None),
                        help="root of the report tree (default: runs, or the config's own value)")
    parser.add_argument("--seed", type=int, default=d(0), help="seed for every sampling budget")
    parser.add_argument("--threads", type=int, default=d(1),
                        help="worker threads (computations currently run in one thread)")
    parser.add_argument("--format", default=d("json,csv"),
                        help="comma-separated report formats among json, csv, svg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lochom", description=__doc__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        return p

    p = add("axioms", "check the exhaustion, quasi-triangle and doubling axioms")
    p.add_argument("--sample-budget", type=int, default=20000)
    p.add_argument("--exhaustive", action="store_true", help="check every triple and ball")

    p = add("cover", "Vitali selection on random families and the finite cube cover")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--families", type=int, default=20)
    p.add_argument("--balls", type=int, default=16)
    p.add_argument("--k", type=int, default=None, help="cube generation of the finite cover")

    p = add("cubes", "build and verify the dyadic forest")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--sample-budget", type=int, default=1000)
    p.add_argument("--dot", metavar="PATH", default=None, help="also write the tree in DOT format")

    p = add("maximal", "local maximal function bounds")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--p", type=float, default=2.0)

    p = add("sharp", "dyadic versus ball sharp function and the concentric-ball bound")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--p", type=float, default=2.0)

    p = add("cz", "Calderon-Zygmund stopping-time families")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--lambda-grid", type=float_list, default=None)
    p.add_argument("--root-generation", type=int, default=None)

    p = add("fs", "local Fefferman-Stein inequality")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--p", type=float_list, default=[1.0, 2.0, 4.0])
    p.add_argument("--sharp", choices=("dyadic", "ball", "both"), default="both")
    p.add_argument("--root-generation", type=int, default=1)

    p = add("bmo", "BMO versus BMO^p seminorms")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--p", type=float_list, default=[2.0, 4.0])

    p = add("jn", "John-Nirenberg construction and decay")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--lambda-grid", type=float_list, default=None)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--center", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)

    add("suite", "run every pipeline with default parameters")

    p = add("run", "run a JSON experiment config")
    p.add_argument("config")
    return parser


def step_for(args) -> list[Step]:
    c = args.command
    if c == "axioms":
        return [Step("axioms", {"sample_budget": None if args.exhaustive else args.sample_budget})]
    if c == "cover":
        return [Step("cover", {"level": args.level, "families": args.families, "balls": args.balls,
                               "k": args.k})]
    if c == "cubes":
        return [Step("cubes", {"level": args.level, "delta": args.delta, "depth": args.depth,
                               "sample_budget": args.sample_budget, "dot": bool(args.dot)})]
    if c == "maximal":
        return [Step("maximal", {"level": args.level, "p": args.p})]
    if c == "sharp":
        return [Step("sharp", {"level": args.level, "delta": args.delta, "p": args.p})]
    if c == "cz":
        return [Step("cz", {"level": args.level, "delta": args.delta, "lambda_grid": args.lambda_grid,
                            "root_generation": args.root_generation})]
    if c == "fs":
        kinds = ["dyadic", "ball"] if args.sharp == "both" else [args.sharp]
        return [Step("fs", {"level": args.level, "delta": args.delta, "p": args.p, "sharp_kind": kinds,
                            "root_generation": args.root_generation})]
    if c == "bmo":
        return [Step("bmo", {"level": args.level, "p": args.p})]
    if c == "jn":
        return [Step("jn", {"level": args.level, "steps": args.steps, "lambda_grid": args.lambda_grid,
                            "points": args.points, "center": args.center, "radius": args.radius})]
    if c == "suite":
        return [Step(op) for op in SUITE]
    raise UsageError(f"unknown command {c!r}")


def _formats(text: str) -> tuple:
    fmts = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [v for v in fmts if v not in ("json", "csv", "svg")]
    if bad:
        raise UsageError(f"unsupported format(s) {bad}")
    if "json" not in fmts:
        fmts = ("json",) + fmts
    return fmts


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        if args.command == "run":
            config = load_config(args.config)
            if args.out is not None:
                config.out = args.out
        else:
            config = ExperimentConfig(space_spec(args.space), function_spec(args.function),
                                      step_for(args), args.out or "runs", args.seed)
        result = run_experiment(config, _formats(args.format))
        for stem, rep in result.reports:
            print(f"{'PASS' if rep.passed else 'FAIL'} {stem}")
            for flag in rep.flags:
                print(f"     note: {flag}")
        if args.command == "cubes" and args.dot:
            dot = next(rep.details["dot"] for _, rep in result.reports if "dot" in rep.details)
            Path(args.dot).write_text(dot)
        print(f"reports: {result.directory}")
        return result.exit_code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except LochomError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
