"""Per-node immunity, protected-set selection and half-edge occupation probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import (check_choice, check_graph, check_node_array,
                          check_probability, round_half_up)
from .graph import Graph

__all__ = [
    "CONVENTIONS",
    "STRATEGIES",
    "ImmunityProfile",
    "immunity_probability",
    "host_immunity",
    "node_immunity",
    "select_immune_set",
    "edge_probability",
    "edge_probability_protected",
    "half_edge_probabilities",
    "build_profile",
]

CONVENTIONS = ("paper", "prose")
STRATEGIES = ("degree", "random")


def immunity_probability(subnet_size, total_virtual, C: float,
                         convention: str = "paper") -> float:
    """Immunity of a VM in a sub-network of ``subnet_size`` out of ``total_virtual`` VMs.

    ``"paper"`` gives ``1 - (S/T) C``, so larger tenants are *less* immune.
    ``"prose"`` gives ``1 - (1 - S/T) C``, where larger tenants are better protected.
    """
    C = check_probability(C, "C")
    check_choice(convention, "convention", CONVENTIONS)
    if not 1 <= subnet_size <= total_virtual:
        raise ValueError(
            f"need 1 <= subnet_size <= total_virtual, got {subnet_size} and {total_virtual}")
    share = subnet_size / total_virtual
    if convention == "prose":
        share = 1.0 - share
    return 1.0 - share * C


def _vm_subnet_sizes(graph: Graph) -> np.ndarray:
    """Sub-network size of every VM; VMs without a sub-network id count as size 1."""
    vm = graph.vm_mask
    sizes = np.ones(graph.node_count, dtype=np.int64)
    ids = graph.subnet[vm]
    known = ids >= 0
    if known.any():
        counts = np.bincount(ids[known])
        vm_sizes = np.ones(len(ids), dtype=np.int64)
        vm_sizes[known] = counts[ids[known]]
        sizes[vm] = vm_sizes
    sizes[~vm] = 0
    return sizes


def _resident_mean_sizes(graph: Graph, sizes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vm = np.flatnonzero(graph.vm_mask & (graph.host >= 0))
    totals = np.bincount(graph.host[vm], weights=sizes[vm], minlength=graph.node_count)
    counts = np.bincount(graph.host[vm], minlength=graph.node_count)
    return totals, counts


def host_immunity(graph: Graph, host: int, C: float, convention: str = "paper") -> float:
    """Immunity of a physical host from the sub-networks of its resident VMs.

    Uses the mean sub-network size over resident VMs, rounded half-up and
    floored at 1. A host with no resident VM returns 1.
    """
    check_graph(graph)
    sizes = _vm_subnet_sizes(graph)
    residents = np.flatnonzero(graph.vm_mask & (graph.host == host))
    if len(residents) == 0:
        return 1.0
    mean = max(1, round_half_up(float(sizes[residents].mean())))
    return immunity_probability(mean, int(graph.vm_mask.sum()), C, convention)


def node_immunity(graph: Graph, C: float, convention: str = "paper") -> np.ndarray:
    """Immunity probability for every node (VMs and hosts)."""
    check_graph(graph)
    C = check_probability(C, "C")
    check_choice(convention, "convention", CONVENTIONS)
    total = int(graph.vm_mask.sum())
    sizes = _vm_subnet_sizes(graph).astype(np.float64)
    totals, counts = _resident_mean_sizes(graph, sizes)
    hosts = graph.host_mask
    occupied = hosts & (counts > 0)
    mean = np.zeros(graph.node_count)
    mean[occupied] = totals[occupied] / counts[occupied]
    sizes[occupied] = np.maximum(1.0, np.floor(mean[occupied] + 0.5))
    out = np.ones(graph.node_count)
    if total == 0:
        return out
    rated = graph.vm_mask | occupied
    share = sizes[rated] / total
    if convention == "prose":
        share = 1.0 - share
    out[rated] = 1.0 - share * C
    return out


def select_immune_set(graph: Graph, fraction: float, strategy: str = "degree",
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Sorted node ids of the protected set, ``round(fraction * n)`` of them.

    ``"degree"`` takes the highest-degree nodes, lower id first on ties.
    ``"random"`` samples uniformly without replacement and needs ``rng``.
    """
    check_graph(graph)
    fraction = check_probability(fraction, "fraction")
    check_choice(strategy, "strategy", STRATEGIES)
    n = graph.node_count
    k = min(n, round_half_up(fraction * n))
    if k == 0:
        return np.zeros(0, dtype=np.int64)
    if strategy == "degree":
        order = np.lexsort((np.arange(n), -graph.degrees))
        chosen = order[:k]
    else:
        if rng is None:
            raise ValueError("random strategy needs an rng")
        chosen = rng.choice(n, size=k, replace=False)
    return np.sort(chosen).astype(np.int64)


def edge_probability(eta, p_imu_j):
    """Occupation probability of half-edge i <- j without protection."""
    out = (1.0 - np.asarray(eta, dtype=np.float64)) ** 2 * np.asarray(p_imu_j, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def edge_probability_protected(eta, p_imu_j, p_j_in_B):
    """Occupation probability of half-edge i <- j when ``j`` is protected with prob. ``p_j_in_B``.

    Evaluated as ``a + (1 - a) b`` rather than ``1 - (1 - a)(1 - b)``: equal in
    exact arithmetic, but this form can never round below the unprotected value.
    """
    a = np.asarray(p_imu_j, dtype=np.float64)
    b = np.asarray(p_j_in_B, dtype=np.float64)
    out = (1.0 - np.asarray(eta, dtype=np.float64)) ** 2 * (a + (1.0 - a) * b)
    return float(out) if out.ndim == 0 else out


@dataclass
class ImmunityProfile:
    """Per-node immunity plus the protected set.

    ``protected`` is a boolean node mask. ``p_in_B`` is what the mean-field
    occupation probabilities use: membership for degree selection, and the
    protected fraction for every node under random selection.
    """

    p_imu: np.ndarray
    protected: np.ndarray
    C: float = 0.9
    eta: float = 0.0
    strategy: str = "degree"
    protect_fraction: float = 0.0
    convention: str = "paper"

    def __post_init__(self):
        self.p_imu = np.asarray(self.p_imu, dtype=np.float64)
        self.protected = np.asarray(self.protected, dtype=bool)
        if self.p_imu.shape != self.protected.shape:
            raise ValueError("p_imu and protected must have the same length")
        if self.p_imu.size and (self.p_imu.min() < 0 or self.p_imu.max() > 1):
            raise ValueError("p_imu values must lie in [0, 1]")

    @property
    def protected_set(self) -> np.ndarray:
        return np.flatnonzero(self.protected)

    @property
    def p_in_B(self) -> np.ndarray:
        if self.strategy == "random":
            return np.full(len(self.p_imu), self.protect_fraction)
        return self.protected.astype(np.float64)

    @classmethod
    def unprotected(cls, p_imu, **kw) -> "ImmunityProfile":
        p_imu = np.asarray(p_imu, dtype=np.float64)
        return cls(p_imu, np.zeros(len(p_imu), dtype=bool), **kw)


def build_profile(graph: Graph, *, C: float = 0.9, convention: str = "paper",
                  protect_fraction: float = 0.0, strategy: str = "degree",
                  rng: np.random.Generator | None = None, eta: float = 0.0) -> ImmunityProfile:
    p_imu = node_immunity(graph, C, convention)
    chosen = select_immune_set(graph, protect_fraction, strategy, rng)
    mask = np.zeros(graph.node_count, dtype=bool)
    mask[chosen] = True
    return ImmunityProfile(p_imu, mask, C=float(C), eta=float(eta), strategy=strategy,
                           protect_fraction=float(protect_fraction), convention=convention)


def half_edge_probabilities(graph: Graph, profile: ImmunityProfile, eta: float) -> np.ndarray:
    """Occupation probability of every half-edge ``targets[e] <- sources[e]``.

    With an empty protected set under degree selection (or a zero fraction
    under random selection) this is the unprotected formula.
    """
    check_graph(graph)
    eta = check_probability(eta, "eta")
    p_imu = check_node_array(profile.p_imu, graph, "p_imu")
    j = graph.sources
    p_in_B = profile.p_in_B
    if not p_in_B.any():
        return edge_probability(eta, p_imu[j])
    return edge_probability_protected(eta, p_imu[j], p_in_B[j])
