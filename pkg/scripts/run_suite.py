"""Run the full pipeline suite on a few standard spaces and list any failing checks."""

import argparse

from lochom.experiment import FunctionSpec, SpaceSpec, run_experiment, suite_config

SPACES = [
    SpaceSpec("grid1d", {"N": 256}),
    SpaceSpec("power_rho_grid", {"N": 256, "s": 2}),
    SpaceSpec("weighted_grid", {"N": 256, "profile": "step"}),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--function", default="log_singularity")
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    for space in SPACES:
        result = run_experiment(suite_config(space, FunctionSpec(args.function), args.out, args.seed))
        print(f"{space.name} {space.params}: {'PASS' if result.passed else 'FAIL'} -> {result.directory}")
        for stem, rep in result.reports:
            if not rep.passed:
                print(f"    failed {stem}: {sorted(k for k, v in rep.checks.items() if not v)}")
                for flag in rep.flags:
                    print(f"      note: {flag}")


if __name__ == "__main__":
    main()
