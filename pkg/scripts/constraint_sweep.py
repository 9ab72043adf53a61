"""Random graphs with random capacities and storage: check the invariants on every step.

    python3 scripts/constraint_sweep.py [--graphs 100] [--gamma 0.5] [--max-outer 8]

Graphs whose initial state fails the sufficient feasibility check are
skipped. For each accepted graph the script checks support containment,
plan <= capacity, storage bounds and mass conservation, and prints a
summary line.
"""

import argparse
import time
from collections import Counter

import numpy as np

from wassflow import generators
from wassflow.flow import run_flow, with_overrides
from wassflow.graph import adjacency_with_self_loops, build_capacity_matrix, new_support
from wassflow.projections import feasibility_check
from wassflow.runspec import load_spec


def random_spec(seed, gamma, max_outer):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(4, 31))
    spec = generators.random_graph(n, seed=seed)
    for e in spec["graph"]["edges"]:
        if rng.random() < 0.3:
            e[3] = float(rng.uniform(0.05, 0.5))
    rho0 = np.array(spec["rho0"])
    spec["graph"]["storage"] = [float(rho0[j] + rng.uniform(0.02, 0.3)) if rng.random() < 0.3
                                else None for j in range(n)]
    spec.update(gamma=gamma, max_outer=max_outer)
    return spec


def violations(cfg, trace):
    adj = adjacency_with_self_loops(cfg.graph)
    eps = cfg.eps_inner
    bad = Counter()
    rho = cfg.rho0
    for step in trace.steps:
        outside = np.setdiff1d(np.arange(cfg.graph.n), new_support(rho, adj))
        bad["support"] += bool(np.any(step.rho[outside] != 0.0))
        bad["capacity"] += bool(np.any(step.plan > step.capacity))
        bad["storage"] += bool(np.any(step.rho > cfg.graph.storage + 10 * eps))
        bad["mass"] += bool(abs(step.rho.sum() - 1.0) > 10 * eps)
        rho = step.rho
    return bad


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--graphs", type=int, default=100)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--max-outer", type=int, default=8)
    args = ap.parse_args()

    t0 = time.perf_counter()
    accepted, seed, skipped = 0, 0, 0
    status, total_bad = Counter(), Counter()
    while accepted < args.graphs:
        spec = load_spec(random_spec(seed, args.gamma, args.max_outer))
        seed += 1
        cfg = with_overrides(spec.config, keep_plans=True)
        adj = adjacency_with_self_loops(cfg.graph)
        cap = build_capacity_matrix(cfg.graph, adj, new_support(cfg.rho0, adj))
        if not feasibility_check(cfg.rho0, cap, cfg.graph.storage).feasible:
            skipped += 1
            continue
        accepted += 1
        trace = run_flow(cfg)
        status[trace.status] += 1
        total_bad += violations(cfg, trace)
    print(f"{accepted} graphs ({skipped} skipped as infeasible) in {time.perf_counter() - t0:.0f} s")
    print("statuses:", dict(status))
    print("invariant violations:", dict(total_bad) or "none")


if __name__ == "__main__":
    main()
