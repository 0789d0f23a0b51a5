"""Input validation helpers shared by the public functions and estimators."""

from __future__ import annotations

import math
import numbers

import numpy as np

from .graph import Graph


def check_graph(graph) -> Graph:
    if not isinstance(graph, Graph):
        raise TypeError(f"expected a Graph, got {type(graph).__name__}")
    return graph


def check_probability(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_choice(value, name: str, choices) -> str:
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


def check_node_array(values, graph: Graph, name: str, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != (graph.node_count,):
        raise ValueError(f"{name} has shape {arr.shape}, expected ({graph.node_count},)")
    return arr


def check_edge_probabilities(probs, graph: Graph) -> np.ndarray:
    arr = np.asarray(probs, dtype=np.float64)
    if arr.shape != (graph.half_edge_count,):
        raise ValueError(
            f"edge probabilities have shape {arr.shape}, expected ({graph.half_edge_count},)")
    if arr.size and (np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("edge probabilities must lie in [0, 1]")
    return arr


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero for x >= 0.

    Python's ``round`` rounds halves to even; counts here must not depend on that.
    """
    return int(math.floor(x + 0.5))
