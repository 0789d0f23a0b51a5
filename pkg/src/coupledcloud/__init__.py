"""Robustness of coupled virtual/physical cloud networks under attack."""

from .cascade import CascadeConfig, CascadeTrace, run_cascade, run_trials
from .estimators import CascadeSimulator, ImmunityModel, PercolationSolver
from .graph import Graph, NodeKind, build_graph, largest_connected_component, read_graph, write_graph
from .immunity import ImmunityProfile, build_profile, half_edge_probabilities, node_immunity
from .percolation import (brute_force_cluster_distribution, solve_polynomial,
                          solve_scalar)
from .topology import GenConfig, LayeredTopology, generate_graph, generate_topology, simplify

__version__ = "0.1.0"

__all__ = [
    "CascadeConfig", "CascadeTrace", "run_cascade", "run_trials",
    "CascadeSimulator", "ImmunityModel", "PercolationSolver",
    "Graph", "NodeKind", "build_graph", "largest_connected_component", "read_graph",
    "write_graph",
    "ImmunityProfile", "build_profile", "half_edge_probabilities", "node_immunity",
    "brute_force_cluster_distribution", "solve_polynomial", "solve_scalar",
    "GenConfig", "LayeredTopology", "generate_graph", "generate_topology", "simplify",
]
