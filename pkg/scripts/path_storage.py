"""Path graph with a storage-bounded node: central mass split toward both ends.

    python3 scripts/path_storage.py [--k 14] [--out runs/path_storage]
"""

import argparse

import numpy as np

from wassflow import generators
from wassflow.flow import run_flow
from wassflow.runspec import load_spec, write_outputs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, default=14)
    ap.add_argument("--out", default="runs/path_storage")
    args = ap.parse_args()

    spec = load_spec(generators.path(args.k), overrides={"output": args.out})
    trace = run_flow(spec.config)
    bounded = args.k - 3
    np.set_printoptions(precision=3, suppress=True, linewidth=150)
    print(f"{trace.status} after {len(trace)} iterations")
    print("t=0", trace.rho0)
    for s in trace.steps:
        print(f"t={s.t + 1} tv={s.tv:.2e} inner={s.inner_iterations} node{bounded}={s.rho[bounded]:.6f}")
        print("    ", s.rho)
    print("written to", write_outputs(spec, trace))


if __name__ == "__main__":
    main()
