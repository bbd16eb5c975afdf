"""How deep the stopping-time tree for the log fixture gets as the grid is refined.

A node splits only where the local oscillation maximal function exceeds
lambda0 = 2 c A; the log fixture's largest deviation on the base ball grows
like ln N, so the tree stays root-only until that deviation passes lambda0.
"""

import argparse

from lochom.bmo import default_ball, jn_construct
from lochom.functions import log_singularity
from lochom.space import instantiate_builtin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--steps", type=int, default=3)
    args = ap.parse_args()
    print("N,seminorm,lambda0,max_deviation,nodes_per_depth,passed")
    for N in args.sizes:
        space, structure = instantiate_builtin("grid1d", {"N": N})
        S = default_ball(space, structure, 1)
        tree = jn_construct(space, structure, log_singularity(space), 1, S, args.steps)
        root = tree.nodes[0]
        dev = float(abs(log_singularity(space).values[root.members] - root.mean).max())
        depth = "/".join(map(str, tree.report.measured["nodes_per_depth"]))
        print(f"{N},{tree.seminorm:.5g},{tree.lambda0:.5g},{dev:.5g},{depth},{tree.report.passed}")


if __name__ == "__main__":
    main()
