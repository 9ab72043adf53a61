import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wassflow import generators
from wassflow.errors import ConfigError
from wassflow.flow import (Event, FlowConfig, Schedule, evaluate_schedule, run_batch,
                           run_flow, with_overrides)
from wassflow.graph import Graph
from wassflow.runspec import load_spec


def star_config(**kw):
    return with_overrides(load_spec(generators.star(7)).config, **kw)


@given(st.integers(0, 10_000))
def test_schedules_shift_and_clamp(t):
    inv = Schedule("inverse_t")
    inv_log = Schedule("inverse_log_t")
    assert evaluate_schedule(inv, t) == pytest.approx(min(max(1 / (t + 2), 1e-3), 0.99))
    assert evaluate_schedule(inv_log, t) == pytest.approx(min(max(1 / math.log(t + 2), 1e-3), 0.99))
    assert 1e-3 <= evaluate_schedule(inv_log, t) <= 0.99


def test_schedule_first_values():
    assert evaluate_schedule(Schedule("inverse_t"), 0) == 0.5
    # 1/ln 2 > 1 is clamped
    assert evaluate_schedule(Schedule("inverse_log_t"), 0) == 0.99
    assert evaluate_schedule(Schedule.constant(0.3), 7) == 0.3
    with pytest.raises(ValueError):
        evaluate_schedule(Schedule("inverse_t"), -1)


def test_schedule_parsing():
    assert Schedule.from_value(0.2) == Schedule.constant(0.2)
    s = Schedule.from_value({"kind": "inverse_t", "clamp": [0.01, 0.4]})
    assert evaluate_schedule(s, 0) == 0.4
    assert Schedule.from_value(s.to_dict()) == s
    with pytest.raises(ConfigError):
        Schedule("exponential")
    with pytest.raises(ConfigError):
        Schedule.from_value([0.1])


def test_config_validation():
    g = Graph(2, [(0, 1, 1.0), (1, 0, 1.0)])
    with pytest.raises(ConfigError):
        FlowConfig(g, [1, 0], [0, 1], omega=Schedule.constant(1.0))
    with pytest.raises(ConfigError):
        FlowConfig(g, [0.7, 0], [0, 1])
    with pytest.raises(ConfigError):
        FlowConfig(g, [1, 0], [0, 1], events=[Event(2, "set_omega", {"omega": 0.2}),
                                              Event(1, "set_omega", {"omega": 0.2})])
    with pytest.raises(ConfigError):
        Event(0, "teleport")
    with pytest.raises(ConfigError):
        FlowConfig(g, [1, 0], [0, 1], eps_outer=0)


def test_bad_event_arguments():
    cfg = star_config(events=(Event(1, "remove_edge", {"src": 2, "dst": 3}),))
    with pytest.raises(ConfigError, match="nonexistent"):
        run_flow(cfg)
    cfg = star_config(events=(Event(1, "replace_nu", {}),))
    with pytest.raises(ConfigError, match="missing"):
        run_flow(cfg)
    # cutting a leaf off disconnects the star
    cfg = star_config(events=(Event(1, "remove_edge", {"src": 0, "dst": 3, "undirected": True}),))
    with pytest.raises(ConfigError):
        run_flow(cfg)


def test_start_at_target_gives_empty_trace():
    cfg = star_config()
    trace = run_flow(with_overrides(cfg, rho0=cfg.nu))
    assert trace.status == "converged"
    assert len(trace) == 0
    np.testing.assert_array_equal(trace.final_rho, cfg.nu)


def test_star_converges_within_two_steps():
    trace = run_flow(star_config())
    assert trace.status == "converged"
    assert len(trace) <= 2
    assert trace.tvs[-1] <= 1e-3
    np.testing.assert_allclose(trace.final_rho, star_config().nu, atol=1e-3)


def test_max_outer_status():
    trace = run_flow(star_config(omega=Schedule.constant(0.9), max_outer=1))
    assert trace.status == "max_outer"
    assert len(trace) == 1


def test_runs_are_deterministic():
    cfg = load_spec(generators.path(14)).config
    a, b = run_flow(cfg), run_flow(cfg)
    assert len(a) == len(b)
    for sa, sb in zip(a.steps, b.steps):
        assert sa.rho.tobytes() == sb.rho.tobytes()
        assert sa.tv == sb.tv and sa.cost_plan == sb.cost_plan
        assert sa.inner_iterations == sb.inner_iterations


def test_mass_and_storage_invariants():
    spec = load_spec(generators.path(14))
    trace = run_flow(with_overrides(spec.config, keep_plans=True))
    assert trace.status == "converged"
    storage = spec.config.graph.storage
    eps = spec.config.eps_inner
    assert all(step.inner_converged for step in trace.steps)
    for step in trace.steps:
        assert abs(step.rho.sum() - 1) <= 10 * eps
        assert np.all(step.rho >= 0)
        assert np.all(step.rho <= storage + 10 * eps)
        assert np.all(step.plan <= step.capacity)


def test_set_omega_event_changes_the_schedule():
    # a short inner budget is enough to see the event take effect
    spec = load_spec(generators.small_dwn())
    trace = run_flow(with_overrides(spec.config, max_outer=2, max_inner=2000))
    assert trace.steps[0].event == "" and trace.steps[1].event == "set_omega"
    assert trace.steps[0].omega == 0.75 and trace.steps[1].omega == 0.1


def test_support_is_one_hop_neighbourhood():
    trace = run_flow(load_spec(generators.path(14)).config)
    first = trace.steps[0]
    np.testing.assert_array_equal(first.support, [5, 6, 7, 8])


def test_replace_nu_event_is_recorded():
    target = np.zeros(7)
    target[1] = 1.0
    cfg = star_config(events=(Event(1, "replace_nu", {"nu": target.tolist()}),))
    trace = run_flow(cfg)
    assert trace.status == "converged"
    assert trace.steps[1].event == "replace_nu"
    assert trace.final_rho[1] >= 1 - 1e-3


def test_event_after_termination_is_logged(caplog):
    cfg = star_config(events=(Event(50, "set_omega", {"omega": 0.2}),))
    with caplog.at_level(logging.WARNING, logger="wassflow"):
        trace = run_flow(cfg)
    assert trace.status == "converged"
    assert "not applied" in caplog.text


def test_run_batch_matches_sequential():
    cfgs = [star_config(), load_spec(generators.path(14)).config,
            star_config(omega=Schedule("inverse_t"))]
    batch = run_batch(cfgs, max_workers=3)
    for cfg, tr in zip(cfgs, batch):
        seq = run_flow(cfg)
        assert len(seq) == len(tr)
        np.testing.assert_array_equal(seq.final_rho, tr.final_rho)


def test_with_overrides_ignores_none():
    cfg = star_config()
    same = with_overrides(cfg, max_outer=None)
    assert same.max_outer == cfg.max_outer
    assert with_overrides(cfg, max_outer=3).max_outer == 3


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_small_flows_keep_mass(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    edges = [(i, i + 1, float(rng.uniform(0.5, 2))) for i in range(n - 1)]
    edges += [(b, a, w) for a, b, w in edges]
    rho0 = rng.dirichlet(np.ones(n))
    nu = rng.dirichlet(np.ones(n))
    cfg = FlowConfig(Graph(n, edges), rho0, nu, omega=Schedule.constant(0.5),
                     gamma=Schedule.constant(0.05, 1e-12, 1e12), max_outer=5,
                     eps_inner=1e-8)
    trace = run_flow(cfg)
    for step in trace.steps:
        assert abs(step.rho.sum() - 1) <= 1e-6
        assert step.tv <= 1.0


SMALL_GENERATORS = {
    "star": lambda: generators.star(7),
    "path": lambda: generators.path(14),
    "grid": lambda: generators.grid(5),
    "cycle": lambda: generators.cycle(20),
}


@pytest.mark.parametrize("omega", [0.1, {"kind": "inverse_t"}, {"kind": "inverse_log_t"}],
                         ids=["constant", "inverse_t", "inverse_log_t"])
@pytest.mark.parametrize("name", SMALL_GENERATORS)
def test_generators_converge_within_100_steps(name, omega):
    spec = SMALL_GENERATORS[name]()
    spec.update(omega=omega, gamma=0.1, max_outer=100)
    trace = run_flow(load_spec(spec).config)
    assert trace.status == "converged"
    assert trace.tvs[-1] <= 1e-3
