"""Wasserstein-attraction flows on graphs with capacity and storage constraints."""

from .errors import (ConfigError, DisconnectedGraph, EmptySupport, InfeasibleRow,
                     MaxInnerIterations, UnreachablePair, WassflowError)
from .flow import Event, FlowConfig, FlowTrace, Schedule, run_batch, run_flow
from .graph import (Graph, adjacency_with_self_loops, build_capacity_matrix, new_support,
                    shortest_path_costs)
from .measures import as_measure, kl_divergence, tv_distance
from .projections import dykstra_barycenter_step, feasibility_check, sinkhorn_distance
from .runspec import load_spec, write_outputs

__all__ = [
    "ConfigError", "DisconnectedGraph", "EmptySupport", "InfeasibleRow", "MaxInnerIterations",
    "UnreachablePair", "WassflowError", "Event", "FlowConfig", "FlowTrace", "Schedule",
    "run_batch", "run_flow", "Graph", "adjacency_with_self_loops", "build_capacity_matrix",
    "new_support", "shortest_path_costs", "as_measure", "kl_divergence", "tv_distance",
    "dykstra_barycenter_step", "feasibility_check", "sinkhorn_distance", "load_spec",
    "write_outputs",
]
