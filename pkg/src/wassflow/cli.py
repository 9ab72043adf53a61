"""Command-line front end: ``wassflow run | generate | check``."""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import generators
from .errors import ConfigError, WassflowError
from .flow import run_flow
from .graph import adjacency_with_self_loops, build_capacity_matrix, new_support, shortest_path_costs
from .projections import feasibility_check
from .runspec import load_spec, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_MAX_OUTER, EXIT_INFEASIBLE = 0, 1, 2, 3
STATUS_EXIT = {"converged": EXIT_OK, "max_outer": EXIT_MAX_OUTER, "infeasible": EXIT_INFEASIBLE}


def _omega_arg(text):
    if text in ("inverse_t", "inverse_log_t"):
        return {"kind": text}
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--omega takes a number, inverse_t or inverse_log_t, not {text!r}")


def _overrides(args):
    return {
        "eps_outer": args.eps,
        "omega": args.omega,
        "gamma": args.gamma,
        "max_outer": args.max_outer,
        "max_inner": args.max_inner,
        "sinkhorn_costs": True if args.sinkhorn_costs else None,
    }


def _output_override(args, spec_path, many):
    base = args.out or os.environ.get("WASSFLOW_OUT")
    if base is None:
        return None
    base = Path(base)
    return base / Path(spec_path).stem if many else base


def _run_one(spec_path, args, many):
    try:
        spec = load_spec(spec_path, overrides=_overrides(args))
    except WassflowError as exc:
        print(f"error: {spec_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _output_override(args, spec_path, many)
    if out is not None:
        spec = replace(spec, output=out)
    elif many:
        spec = replace(spec, output=spec.output / Path(spec_path).stem)
    try:
        trace = run_flow(spec.config)
    except ConfigError as exc:
        print(f"error: {spec_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = write_outputs(spec, trace)
    final = trace.steps[-1].tv if trace.steps else float(np.abs(spec.config.rho0 - spec.config.nu).sum() / 2)
    print(f"{spec.name}: {trace.status} after {len(trace)} iterations, final tv {final:.3e} -> {out_dir}")
    if trace.message:
        print(f"  {trace.message}", file=sys.stderr)
    return STATUS_EXIT[trace.status]


def cmd_run(args):
    specs = args.spec
    if len(specs) > 1 and not args.sweep:
        print("error: several spec files need --sweep", file=sys.stderr)
        return EXIT_CONFIG
    if not args.sweep:
        return _run_one(specs[0], args, many=False)
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        codes = list(pool.map(lambda p: _run_one(p, args, many=True), specs))
    return max(codes)


def cmd_generate(args):
    try:
        spec = generators.generate(args.kind, args.k, cap=args.cap, seed=args.seed)
    except WassflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = json.dumps(spec, indent=1)
    if args.out is None:
        print(text)
    else:
        path = Path(args.out)
        if path.suffix != ".json":
            path.mkdir(parents=True, exist_ok=True)
            path = path / f"{spec['name']}.json"
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
        spec["output"] = f"runs/{spec['name']}"
        path.write_text(json.dumps(spec, indent=1))
        print(path)
    return EXIT_OK


def check_spec(spec):
    """Static validation plus the sufficient-feasibility report for the initial step.

    Returns (ok, lines).
    """
    cfg = spec.config
    lines = []
    shortest_path_costs(cfg.graph)
    adj = adjacency_with_self_loops(cfg.graph)
    support = new_support(cfg.rho0, adj, cfg.zero_threshold)
    cap = build_capacity_matrix(cfg.graph, adj, support)
    report = feasibility_check(cfg.rho0, cap, cfg.graph.storage)
    lines.extend(report.lines())
    over = np.flatnonzero(cfg.nu > cfg.graph.storage)
    for j in over:
        lines.append(f"note: node {j} target mass {cfg.nu[j]:.6g} exceeds its storage "
                     f"{cfg.graph.storage[j]:.6g}, so the target cannot be reached exactly")
    ok = report.feasible
    lines.append("feasible" if ok else "WARNING: sufficient feasibility conditions fail")
    return ok, lines


def cmd_check(args):
    try:
        spec = load_spec(args.spec)
        ok, lines = check_spec(spec)
    except WassflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_CONFIG


def build_parser():
    p = argparse.ArgumentParser(prog="wassflow", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a flow from a spec file")
    r.add_argument("spec", nargs="+")
    r.add_argument("--eps", type=float, help="outer TV tolerance")
    r.add_argument("--omega", type=_omega_arg)
    r.add_argument("--gamma", type=float)
    r.add_argument("--max-outer", type=int)
    r.add_argument("--max-inner", type=int)
    r.add_argument("--sinkhorn-costs", action="store_true")
    r.add_argument("--seed", type=int, default=0, help="accepted for symmetry; runs are deterministic")
    r.add_argument("--out", help="output directory (default: the run spec's 'output')")
    r.add_argument("--sweep", action="store_true", help="run several specs on worker threads")
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("generate", help="write a built-in experiment spec")
    g.add_argument("kind", choices=generators.KINDS)
    g.add_argument("k", type=int, nargs="?", help="size parameter")
    g.add_argument("--cap", type=float, help="link capacity (two_path)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output file or directory (default: stdout)")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check", help="validate a spec and report feasibility")
    c.add_argument("spec")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
