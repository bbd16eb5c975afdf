"""Fefferman-Stein ratios for every fixture, p and sharp variant as N grows."""

import argparse

from lochom.dyadic import build_forest, depth_for_singletons
from lochom.functions import fixture_suite
from lochom.sharp import choose_root, fs_verify
from lochom.space import instantiate_builtin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--p", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    args = ap.parse_args()
    print("N,function,p,sharp,ratio")
    for N in args.sizes:
        space, structure = instantiate_builtin("grid1d", {"N": N})
        forest = build_forest(space, structure, 1, 0.25, depth_for_singletons(space, 0.25))
        root = choose_root(space, structure, forest, generation=1)
        for name, f in fixture_suite(space).items():
            cache = {}
            for p in args.p:
                for kind in ("dyadic", "ball"):
                    res = fs_verify(space, structure, forest, f, root, p, kind, cache=cache)
                    print(f"{N},{name},{p:g},{kind},{res.ratio:.6g}")


if __name__ == "__main__":
    main()
