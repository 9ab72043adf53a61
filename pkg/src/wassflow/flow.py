"""Outer attraction loop: support restriction, barycenter step, re-expansion, events."""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, InfeasibleRow, MaxInnerIterations
from .graph import (DEFAULT_ZERO_THRESHOLD, Graph, adjacency_with_self_loops,
                    build_capacity_matrix, new_support, shortest_path_costs)
from .measures import as_measure, negative_entropy, transport_cost, tv_distance
from .projections import (DEFAULT_EPS, DEFAULT_MAX_INNER, dykstra_barycenter_step,
                          feasibility_check, sinkhorn_distance)

log = logging.getLogger(__name__)

SCHEDULE_KINDS = ("constant", "inverse_t", "inverse_log_t")
EVENT_KINDS = ("replace_nu", "replace_rho", "remove_edge", "add_edge",
               "set_capacity", "set_storage", "set_omega", "set_gamma")
TOPOLOGY_EVENTS = ("remove_edge", "add_edge", "set_capacity")


@dataclass(frozen=True)
class Schedule:
    """Parameter as a function of the outer iteration t >= 0.

    ``inverse_t`` is 1/(t+2) and ``inverse_log_t`` is 1/ln(t+2); every value
    is clamped into [min_value, max_value].
    """

    kind: str = "constant"
    value: float = 0.1
    min_value: float = 1e-3
    max_value: float = 0.99

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if not self.min_value <= self.max_value:
            raise ConfigError("schedule clamp bounds are out of order")
        if self.kind == "constant" and not self.value > 0:
            raise ConfigError("constant schedule value must be positive")

    @classmethod
    def constant(cls, value, min_value=None, max_value=None):
        return cls("constant", value,
                   min(value, 1e-3) if min_value is None else min_value,
                   max(value, 0.99) if max_value is None else max_value)

    @classmethod
    def from_value(cls, spec):
        """Accept a number (constant) or a mapping with kind/value/clamp keys."""
        if isinstance(spec, (int, float)):
            return cls.constant(float(spec))
        if isinstance(spec, str):
            return cls(spec)
        if isinstance(spec, dict):
            kind = spec.get("kind", "constant")
            clamp = spec.get("clamp")
            kwargs = {}
            if clamp is not None:
                kwargs = {"min_value": float(clamp[0]), "max_value": float(clamp[1])}
            if kind == "constant":
                return cls.constant(float(spec["value"]), **kwargs)
            return cls(kind, **kwargs)
        raise ConfigError(f"cannot interpret schedule {spec!r}")

    def to_dict(self):
        d = {"kind": self.kind, "clamp": [self.min_value, self.max_value]}
        if self.kind == "constant":
            d["value"] = self.value
        return d


def evaluate_schedule(schedule, t):
    if t < 0:
        raise ValueError("iteration index must be nonnegative")
    if schedule.kind == "constant":
        v = schedule.value
    elif schedule.kind == "inverse_t":
        v = 1.0 / (t + 2)
    else:
        v = 1.0 / math.log(t + 2)
    return min(max(v, schedule.min_value), schedule.max_value)


@dataclass(frozen=True)
class Event:
    """A mutation applied at the start of outer iteration ``t``."""

    t: int
    kind: str
    args: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ConfigError(f"unknown event kind {self.kind!r}")
        if self.t < 0:
            raise ConfigError("event iteration must be nonnegative")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            t = int(d.pop("t"))
            kind = d.pop("kind")
        except KeyError as exc:
            raise ConfigError(f"event needs 't' and 'kind': {exc}") from exc
        return cls(t, kind, d)

    def to_dict(self):
        return {"t": self.t, "kind": self.kind, **self.args}


@dataclass(frozen=True)
class FlowConfig:
    graph: Graph
    rho0: np.ndarray
    nu: np.ndarray
    omega: Schedule = field(default_factory=lambda: Schedule.constant(0.1))
    gamma: Schedule = field(default_factory=lambda: Schedule.constant(1e-3, 1e-12, 1e12))
    eps_outer: float = 1e-3
    eps_inner: float = DEFAULT_EPS
    max_outer: int = 500
    max_inner: int = DEFAULT_MAX_INNER
    events: tuple = ()
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD
    sinkhorn_costs: bool = False
    keep_plans: bool = False

    def __post_init__(self):
        object.__setattr__(self, "rho0", as_measure(self.rho0, self.graph.n))
        object.__setattr__(self, "nu", as_measure(self.nu, self.graph.n))
        if not (self.eps_outer > 0 and self.eps_inner > 0):
            raise ConfigError("tolerances must be positive")
        if self.max_outer < 0 or self.max_inner < 1:
            raise ConfigError("iteration limits must be positive")
        events = tuple(e if isinstance(e, Event) else Event.from_dict(e) for e in self.events)
        ts = [e.t for e in events]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("event iteration indices must be strictly increasing")
        object.__setattr__(self, "events", events)
        for s in (self.omega, self.gamma):
            if not isinstance(s, Schedule):
                raise ConfigError("omega and gamma must be Schedule instances")
        if not (0 < self.omega.min_value and self.omega.max_value < 1):
            raise ConfigError("omega must stay strictly inside (0, 1)")
        if self.omega.kind == "constant" and not 0 < self.omega.value < 1:
            raise ConfigError("constant omega must lie in (0, 1)")
        if not self.gamma.min_value > 0:
            raise ConfigError("gamma must stay positive")


@dataclass
class StepRecord:
    """One outer iteration t, mapping rho_t to rho_{t+1}; ``rho`` and ``tv`` refer to rho_{t+1}."""

    t: int
    rho: np.ndarray
    tv: float
    cost_plan: float
    cost_sinkhorn: Optional[float]
    omega: float
    gamma: float
    inner_iterations: int
    inner_converged: bool
    wall_time: float
    support: np.ndarray
    event: str = ""
    plan: Optional[np.ndarray] = None
    capacity: Optional[np.ndarray] = None


@dataclass
class FlowTrace:
    rho0: np.ndarray
    steps: list = field(default_factory=list)
    status: str = "max_outer"
    message: str = ""

    @property
    def final_rho(self):
        return self.steps[-1].rho if self.steps else self.rho0

    @property
    def tvs(self):
        return np.array([s.tv for s in self.steps])

    def __len__(self):
        return len(self.steps)


class _FlowState:
    """Mutable per-run quantities that events may change."""

    def __init__(self, config):
        self.graph = config.graph
        self.rho = np.array(config.rho0)
        self.nu = np.array(config.nu)
        self.omega = config.omega
        self.gamma = config.gamma
        self.refresh_topology()

    def refresh_topology(self):
        self.adj = adjacency_with_self_loops(self.graph)
        try:
            self.cost = shortest_path_costs(self.graph)
        except Exception as exc:
            raise ConfigError(f"graph after update is unusable: {exc}") from exc

    def apply(self, event):
        a = event.args
        try:
            if event.kind == "replace_nu":
                self.nu = np.array(as_measure(a["nu"], self.graph.n))
            elif event.kind == "replace_rho":
                self.rho = np.array(as_measure(a["rho"], self.graph.n))
            elif event.kind == "set_omega":
                self.omega = Schedule.from_value(a["omega"])
            elif event.kind == "set_gamma":
                self.gamma = Schedule.from_value(a["gamma"])
            elif event.kind == "set_storage":
                self.graph = self.graph.with_storage(int(a["node"]), a.get("storage"))
            else:
                pairs = [(int(a["src"]), int(a["dst"]))]
                if a.get("undirected", False):
                    pairs.append(pairs[0][::-1])
                g = self.graph
                for s, d in pairs:
                    if event.kind == "remove_edge":
                        g = g.without_edge(s, d)
                    elif event.kind == "add_edge":
                        g = g.with_edge(s, d, float(a.get("weight", 1.0)), _cap(a.get("capacity")))
                    else:
                        g = g.with_capacity(s, d, _cap(a.get("capacity")))
                g.check_connected()
                self.graph = g
                self.refresh_topology()
        except KeyError as exc:
            raise ConfigError(f"event {event.kind} at t={event.t} is missing {exc}") from exc
        if event.kind == "set_omega":
            if not (0 < self.omega.min_value and self.omega.max_value < 1 and
                    (self.omega.kind != "constant" or 0 < self.omega.value < 1)):
                raise ConfigError("set_omega must keep omega inside (0, 1)")


def _cap(c):
    return np.inf if c is None else float(c)


class InfeasibleStep(Exception):
    pass


def run_flow(config):
    """Iterate constrained barycenter steps until rho_t is within eps_outer of nu in TV.

    Events scheduled at t are applied at the top of iteration t, before the
    stopping test, so an event can restart a converged flow. Each step is
    rebuilt from scratch (graph, support, capacity) with no solver state kept.
    """
    st = _FlowState(config)
    trace = FlowTrace(rho0=np.array(config.rho0))
    pending = list(config.events)
    t = 0
    while True:
        fired = []
        while pending and pending[0].t == t:
            ev = pending.pop(0)
            st.apply(ev)
            fired.append(ev.kind)
        if tv_distance(st.rho, st.nu) <= config.eps_outer:
            trace.status = "converged"
            break
        if t >= config.max_outer:
            trace.status = "max_outer"
            break
        try:
            record = _step(config, st, t)
        except (InfeasibleRow, InfeasibleStep) as exc:
            trace.status = "infeasible"
            trace.message = str(exc)
            log.error("iteration %d infeasible: %s", t, exc)
            break
        record.event = ",".join(fired)
        trace.steps.append(record)
        st.rho = record.rho
        t += 1
    if pending:
        log.warning("%d events scheduled after termination were not applied", len(pending))
    return trace


def _step(config, st, t):
    t0 = time.perf_counter()
    support = new_support(st.rho, st.adj, config.zero_threshold)
    cost = st.cost[:, support]
    cap = build_capacity_matrix(st.graph, st.adj, support)
    storage = st.graph.storage[support]
    omega = evaluate_schedule(st.omega, t)
    gamma = evaluate_schedule(st.gamma, t)
    try:
        res = dykstra_barycenter_step(st.rho, st.nu, cost, cap, storage, omega=omega, gamma=gamma,
                                      eps=config.eps_inner, max_inner=config.max_inner)
    except InfeasibleRow as exc:
        report = feasibility_check(st.rho, cap, st.graph.storage)
        bad = [line for line in report.lines() if not line.endswith("ok")]
        raise InfeasibleStep(f"{exc}; " + "; ".join(bad)) from exc
    rho_next = np.zeros(st.graph.n)
    rho_next[support] = res.p
    if res.converged:
        drift = abs(rho_next.sum() - 1.0)
        assert drift <= 10 * config.eps_inner, f"mass drifted by {drift:.3e} at iteration {t}"
    else:
        log.warning("iteration %d: inner solver hit max_inner=%d", t, config.max_inner)
    cost_plan = transport_cost(res.pi1, cost) + gamma * negative_entropy(res.pi1)
    cost_sk = None
    if config.sinkhorn_costs:
        try:
            cost_sk, _ = sinkhorn_distance(st.rho, rho_next, st.cost, gamma,
                                           config.eps_inner, config.max_inner)
        except MaxInnerIterations:
            cost_sk = float("nan")
    return StepRecord(
        t=t,
        rho=rho_next,
        tv=tv_distance(rho_next, st.nu),
        cost_plan=cost_plan,
        cost_sinkhorn=cost_sk,
        omega=omega,
        gamma=gamma,
        inner_iterations=res.inner_iterations,
        inner_converged=res.converged,
        wall_time=time.perf_counter() - t0,
        support=support,
        plan=res.pi1 if config.keep_plans else None,
        capacity=cap if config.keep_plans else None,
    )


def run_batch(configs, max_workers=None):
    """Run independent flows concurrently; results come back in input order."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_flow, configs))


def with_overrides(config, **changes):
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
