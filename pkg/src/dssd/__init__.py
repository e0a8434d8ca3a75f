"""Detect separation from a base station with a distributed averaging scheme."""

from .core import CutBeliefVector, StateVector, cut_beliefs, run_to_convergence, step, step_vectorized
from .electrical import check_fixed_point, potentials
from .graph import Graph, GraphSet, connected_to_source, neighbors, random_geometric_graph, union_graph

__all__ = [
    "CutBeliefVector", "Graph", "GraphSet", "StateVector", "check_fixed_point", "connected_to_source",
    "cut_beliefs", "neighbors", "potentials", "random_geometric_graph", "run_to_convergence", "step",
    "step_vectorized", "union_graph",
]
