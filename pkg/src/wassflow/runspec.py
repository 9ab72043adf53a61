"""Run-spec files: parsing into flow configs and writing traces/snapshots."""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .flow import Event, FlowConfig, Schedule
from .graph import Graph
from .measures import as_measure

TRACE_COLUMNS = ["t", "tv", "cost_plan", "omega", "gamma", "inner_iters", "wall_ms",
                 "support_size", "event"]
TRACE_COLUMNS_SINKHORN = TRACE_COLUMNS[:3] + ["cost_sinkhorn"] + TRACE_COLUMNS[3:]


@dataclass
class RunSpec:
    config: FlowConfig
    output: Path
    name: str = "run"
    emit_trace: bool = True
    emit_snapshots: bool = True
    raw: dict = field(default_factory=dict, repr=False)


def load_spec(source, base_dir=None, overrides=None):
    """Parse a spec from a path or an already-loaded dict.

    ``overrides`` maps spec keys (omega, gamma, eps_outer, eps_inner,
    max_outer, max_inner, sinkhorn_costs, output) to values that replace the
    file's; ``None`` values are ignored.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"spec file {path} does not exist")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        base_dir = path.parent if base_dir is None else Path(base_dir)
    else:
        data = dict(source)
        base_dir = Path(".") if base_dir is None else Path(base_dir)
    if not isinstance(data, dict):
        raise ConfigError("spec root must be a JSON object")
    data = dict(data)
    emit = dict(data.get("emit", {}))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "sinkhorn_costs":
            emit["sinkhorn_costs"] = bool(value)
        else:
            data[key] = value

    graph_src = data.get("graph")
    if isinstance(graph_src, str):
        gpath = (base_dir / graph_src)
        if not gpath.is_file():
            raise ConfigError(f"graph file {gpath} does not exist")
        try:
            graph_data = json.loads(gpath.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{gpath}: invalid JSON ({exc})") from exc
    elif isinstance(graph_src, dict):
        graph_data = graph_src
    else:
        raise ConfigError("spec needs a 'graph' object or file path")
    graph = Graph.from_dict(graph_data)

    for key in ("rho0", "nu"):
        if key not in data:
            raise ConfigError(f"spec is missing '{key}'")
    try:
        config = FlowConfig(
            graph=graph,
            rho0=data["rho0"],
            nu=data["nu"],
            omega=Schedule.from_value(data.get("omega", 0.1)),
            gamma=_gamma_schedule(data.get("gamma", 1e-3)),
            eps_outer=float(data.get("eps_outer", 1e-3)),
            eps_inner=float(data.get("eps_inner", 1e-6)),
            max_outer=int(data.get("max_outer", 500)),
            max_inner=int(data.get("max_inner", 50_000)),
            events=tuple(Event.from_dict(e) for e in data.get("events", [])),
            zero_threshold=float(data.get("zero_threshold", 1e-12)),
            sinkhorn_costs=bool(emit.get("sinkhorn_costs", False)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    _check_event_targets(config)
    output = Path(data.get("output", "runs/" + data.get("name", "run")))
    if not output.is_absolute():
        output = base_dir / output
    return RunSpec(
        config=config,
        output=output,
        name=data.get("name", "run"),
        emit_trace=bool(emit.get("trace_csv", True)),
        emit_snapshots=bool(emit.get("snapshots_json", True)),
        raw=data,
    )


def _gamma_schedule(value):
    if isinstance(value, (int, float)):
        return Schedule.constant(float(value), 1e-12, 1e12)
    return Schedule.from_value(value)


def _check_event_targets(config):
    """Replay topology events on a scratch graph so bad mutations fail before any solve."""
    g = config.graph
    for ev in config.events:
        a = ev.args
        try:
            pairs = []
            if ev.kind in ("remove_edge", "add_edge", "set_capacity"):
                pairs = [(int(a["src"]), int(a["dst"]))]
                if a.get("undirected", False):
                    pairs.append(pairs[0][::-1])
            for s, d in pairs:
                if ev.kind == "remove_edge":
                    g = g.without_edge(s, d)
                elif ev.kind == "add_edge":
                    g = g.with_edge(s, d, float(a.get("weight", 1.0)),
                                    math.inf if a.get("capacity") is None else float(a["capacity"]))
                else:
                    g = g.with_capacity(s, d, a.get("capacity"))
            if ev.kind == "set_storage":
                g = g.with_storage(int(a["node"]), a.get("storage"))
            if ev.kind in ("replace_nu", "replace_rho"):
                as_measure(a["nu" if ev.kind == "replace_nu" else "rho"], g.n)
            if ev.kind == "set_omega":
                Schedule.from_value(a["omega"])
            if ev.kind == "set_gamma":
                Schedule.from_value(a["gamma"])
        except KeyError as exc:
            raise ConfigError(f"event {ev.kind} at t={ev.t} is missing {exc}") from exc


def write_trace_csv(trace, path, sinkhorn=False):
    cols = TRACE_COLUMNS_SINKHORN if sinkhorn else TRACE_COLUMNS
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for s in trace.steps:
            row = {
                "t": s.t,
                "tv": repr(s.tv),
                "cost_plan": repr(s.cost_plan),
                "cost_sinkhorn": "" if s.cost_sinkhorn is None else repr(s.cost_sinkhorn),
                "omega": repr(s.omega),
                "gamma": repr(s.gamma),
                "inner_iters": s.inner_iterations,
                "wall_ms": f"{1000 * s.wall_time:.3f}",
                "support_size": len(s.support),
                "event": s.event,
            }
            w.writerow([row[c] for c in cols])


def write_snapshots_json(trace, path):
    snaps = [{"t": 0, "rho": trace.rho0.tolist()}]
    snaps += [{"t": s.t + 1, "rho": s.rho.tolist()} for s in trace.steps]
    Path(path).write_text(json.dumps({"status": trace.status, "snapshots": snaps}))


def write_outputs(spec, trace):
    out = Path(spec.output)
    out.mkdir(parents=True, exist_ok=True)
    if spec.emit_trace:
        write_trace_csv(trace, out / "trace.csv", sinkhorn=spec.config.sinkhorn_costs)
    if spec.emit_snapshots:
        write_snapshots_json(trace, out / "snapshots.json")
    summary = {
        "name": spec.name,
        "status": trace.status,
        "iterations": len(trace),
        "final_tv": trace.steps[-1].tv if trace.steps else None,
        "message": trace.message,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    return out
