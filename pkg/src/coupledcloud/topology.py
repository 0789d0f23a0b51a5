"""Two-layer cloud topology: scale-free tenant sub-networks over physical hosts.

Generation happens in two steps. Sub-network sizes are drawn from a truncated
discrete power law and each sub-network is grown by preferential attachment.
VMs are then placed on hosts by cutting a random permutation into blocks of
``vms_per_host``. :func:`simplify` flattens the result into a single
:class:`~coupledcloud.graph.Graph` with one VM-host edge per VM and no
host-host edges.

VM node ids are ``0..T-1`` assigned sub-network by sub-network; host ``k``
becomes node ``T + k`` in the simplified graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int
from .graph import Graph, NodeKind, build_graph
from .graph import component_sizes

__all__ = [
    "GenConfig",
    "Subnetwork",
    "LayeredTopology",
    "TopologyError",
    "power_law_pmf",
    "sample_power_law",
    "sample_subnetwork_sizes",
    "generate_subnetwork",
    "assign_hosts",
    "generate_topology",
    "simplify",
    "generate_graph",
]


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    """Parameters of the two-step topology model.

    Defaults follow the reference experiment: 5000 hosts with 10 VMs each and
    sub-networks of at most 500 VMs.
    """

    host_count: int = 5000
    vms_per_host: int = 10
    s_min: int = 3
    s_max: int = 500
    alpha: float = 2.5
    m: int = 2
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.host_count, "host_count")
        check_positive_int(self.vms_per_host, "vms_per_host")
        check_positive_int(self.m, "m")
        check_positive_int(self.s_min, "s_min")
        check_positive_int(self.s_max, "s_max")
        if self.s_min < self.m + 1:
            raise TopologyError(f"s_min={self.s_min} must be >= m+1={self.m + 1}")
        if self.s_max < self.s_min:
            raise TopologyError(f"s_max={self.s_max} must be >= s_min={self.s_min}")
        if self.host_count * self.vms_per_host < self.s_min:
            raise TopologyError("host_count * vms_per_host must be >= s_min")
        if not np.isfinite(self.alpha):
            raise TopologyError("alpha must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise TopologyError("seed must be a 64-bit unsigned integer")

    @property
    def total_vms(self) -> int:
        return self.host_count * self.vms_per_host


@dataclass
class Subnetwork:
    subnet_id: int
    members: np.ndarray
    edges: np.ndarray  # (k, 2) global VM ids

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class LayeredTopology:
    subnetworks: list[Subnetwork]
    host_count: int
    vms_per_host: int
    assignment: np.ndarray  # VM id -> host index
    config: GenConfig | None = field(default=None, compare=False)

    @property
    def vm_count(self) -> int:
        return len(self.assignment)

    @property
    def subnet_sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.subnetworks], dtype=np.int64)

    def subnet_of(self) -> np.ndarray:
        out = np.full(self.vm_count, -1, dtype=np.int64)
        for sub in self.subnetworks:
            out[sub.members] = sub.subnet_id
        return out

    def host_load(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.host_count)

    def validate(self) -> None:
        """Raise TopologyError if any structural invariant is broken."""
        owner = self.subnet_of()
        counts = np.zeros(self.vm_count, dtype=np.int64)
        for sub in self.subnetworks:
            np.add.at(counts, sub.members, 1)
        if (counts != 1).any():
            raise TopologyError("every VM must belong to exactly one sub-network")
        if (owner < 0).any():
            raise TopologyError("unassigned VM")
        if self.assignment.min(initial=0) < 0 or self.assignment.max(initial=0) >= self.host_count:
            raise TopologyError("VM assigned to a non-existent host")
        if (self.host_load() > self.vms_per_host).any():
            raise TopologyError("host over capacity")
        cfg = self.config
        for sub in self.subnetworks:
            if cfg is not None and not cfg.s_min <= sub.size <= cfg.s_max:
                raise TopologyError(f"sub-network {sub.subnet_id} size {sub.size} out of bounds")
            if not _is_connected(sub):
                raise TopologyError(f"sub-network {sub.subnet_id} is not connected")


def _is_connected(sub: Subnetwork) -> bool:
    if sub.size <= 1:
        return True
    local = {int(v): k for k, v in enumerate(sub.members)}
    edges = [(local[int(u)], local[int(v)]) for u, v in sub.edges]
    g = build_graph([NodeKind.VM] * sub.size, edges)
    return len(component_sizes(g)) == 1


# -- step 1: sub-network sizes ----------------------------------------------

def power_law_pmf(alpha: float, s_min: int, s_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of Pr(s) proportional to s**-alpha on [s_min, s_max]."""
    support = np.arange(s_min, s_max + 1, dtype=np.int64)
    weights = support.astype(np.float64) ** (-float(alpha))
    return support, weights / weights.sum()


def sample_power_law(size: int, alpha: float, s_min: int, s_max: int,
                     rng: np.random.Generator) -> np.ndarray:
    support, pmf = power_law_pmf(alpha, s_min, s_max)
    return rng.choice(support, size=size, p=pmf)


def sample_subnetwork_sizes(total_vms: int, alpha: float, s_min: int, s_max: int,
                            rng: np.random.Generator) -> list[int]:
    """Draw sub-network sizes until they cover ``total_vms`` exactly.

    The last draw is clamped to the remaining VM count. A remainder below
    ``s_min`` is merged into an earlier sub-network that has room for it, or,
    failing that, split off a large one so both parts stay in bounds.
    """
    if total_vms < s_min:
        raise TopologyError(f"total_vms={total_vms} is smaller than s_min={s_min}")
    if s_max < s_min:
        raise TopologyError(f"s_max={s_max} must be >= s_min={s_min}")
    support, pmf = power_law_pmf(alpha, s_min, s_max)
    mean = float((support * pmf).sum())
    sizes: list[int] = []
    running = 0
    while running < total_vms:
        batch = int((total_vms - running) / mean) + 16
        for s in rng.choice(support, size=batch, p=pmf).tolist():
            if running + s >= total_vms:
                sizes.append(total_vms - running)
                running = total_vms
                break
            sizes.append(s)
            running += s

    rem = sizes[-1]
    if rem >= s_min:
        return sizes
    sizes.pop()
    for k in range(len(sizes) - 1, -1, -1):
        if sizes[k] + rem <= s_max:
            sizes[k] += rem
            return sizes
    for k in range(len(sizes) - 1, -1, -1):
        if sizes[k] + rem >= 2 * s_min:
            sizes[k] += rem - s_min
            sizes.append(s_min)
            return sizes
    raise TopologyError(
        f"cannot split {total_vms} VMs into sub-networks with sizes in [{s_min}, {s_max}]")


# -- step 1b: scale-free sub-networks ---------------------------------------

def generate_subnetwork(size: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Preferential-attachment graph on ``size`` vertices, local ids.

    Starts from a complete graph on ``m + 1`` vertices; each later vertex
    links to ``m`` distinct existing vertices chosen with probability
    proportional to their current degree. Returns an ``(E, 2)`` edge array
    with ``E = m(m+1)/2 + (size - m - 1) m``.
    """
    check_positive_int(m, "m")
    if size < m + 1:
        raise TopologyError(f"sub-network size {size} is smaller than m+1={m + 1}")
    edges = [(u, v) for u in range(m + 1) for v in range(u + 1, m + 1)]
    # Each vertex appears once per incident edge end.
    pool = [v for e in edges for v in e]
    for new in range(m + 1, size):
        chosen: list[int] = []
        n_pool = len(pool)
        while len(chosen) < m:
            t = pool[int(rng.random() * n_pool)]
            if t not in chosen:
                chosen.append(t)
        for t in chosen:
            edges.append((t, new))
            pool.append(t)
            pool.append(new)
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


# -- step 2: host placement -------------------------------------------------

def assign_hosts(vm_count: int, host_count: int, vms_per_host: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Place VMs on hosts: shuffle, then block ``k`` of the permutation goes to host ``k``."""
    if vm_count != host_count * vms_per_host:
        raise TopologyError(
            f"{vm_count} VMs cannot fill {host_count} hosts of capacity {vms_per_host} exactly")
    perm = rng.permutation(vm_count)
    assignment = np.empty(vm_count, dtype=np.int64)
    assignment[perm] = np.arange(vm_count, dtype=np.int64) // vms_per_host
    return assignment


def generate_topology(config: GenConfig) -> LayeredTopology:
    """Run both generation steps with streams split from ``config.seed``."""
    size_ss, net_ss, host_ss = np.random.SeedSequence(int(config.seed)).spawn(3)
    sizes = sample_subnetwork_sizes(config.total_vms, config.alpha, config.s_min,
                                    config.s_max, np.random.default_rng(size_ss))
    net_rng = np.random.default_rng(net_ss)
    subnetworks = []
    offset = 0
    for sid, size in enumerate(sizes):
        local = generate_subnetwork(size, config.m, net_rng)
        members = np.arange(offset, offset + size, dtype=np.int64)
        subnetworks.append(Subnetwork(sid, members, local + offset))
        offset += size
    assignment = assign_hosts(offset, config.host_count, config.vms_per_host,
                              np.random.default_rng(host_ss))
    return LayeredTopology(subnetworks, config.host_count, config.vms_per_host,
                           assignment, config)


def simplify(topology: LayeredTopology) -> Graph:
    """Flatten to one layer: all VMs and hosts, internal edges plus VM-host edges."""
    t = topology.vm_count
    n = t + topology.host_count
    kinds = np.full(n, NodeKind.HOST, dtype=np.int8)
    kinds[:t] = NodeKind.VM
    subnet = np.full(n, -1, dtype=np.int64)
    subnet[:t] = topology.subnet_of()
    host = np.full(n, -1, dtype=np.int64)
    host[:t] = topology.assignment + t
    vm_ids = np.arange(t, dtype=np.int64)
    parts = [s.edges for s in topology.subnetworks]
    parts.append(np.column_stack([vm_ids, host[:t]]))
    edges = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
    return build_graph(kinds, edges, subnet=subnet, host=host)


def generate_graph(config: GenConfig) -> tuple[LayeredTopology, Graph]:
    topology = generate_topology(config)
    return topology, simplify(topology)
