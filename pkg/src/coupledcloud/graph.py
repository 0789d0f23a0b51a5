"""Compact undirected graph with a half-edge view for message passing.

Nodes are dense integers ``0..n-1``. Adjacency is stored CSR-style and every
undirected edge ``{i, j}`` appears as two half-edges. Half-edge ``e`` sits in
row ``targets[e] = i`` with column ``sources[e] = j`` and carries the message
``H[i <- j]`` (what node ``i`` sees through its neighbour ``j``).
"""

from __future__ import annotations

import enum
from typing import IO, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

__all__ = [
    "NodeKind",
    "Graph",
    "GraphError",
    "GraphFormatError",
    "build_graph",
    "largest_connected_component",
    "component_sizes",
    "write_graph",
    "read_graph",
]


class NodeKind(enum.IntEnum):
    VM = 0
    HOST = 1


_KIND_ALIASES = {
    "vm": NodeKind.VM,
    "virtual_instance": NodeKind.VM,
    "host": NodeKind.HOST,
    "physical_host": NodeKind.HOST,
}


class GraphError(ValueError):
    """Raised when a graph cannot be built from the given nodes and edges."""


class GraphFormatError(GraphError):
    """Raised on malformed graph text files."""


def _as_kind(value) -> NodeKind:
    if isinstance(value, str):
        try:
            return _KIND_ALIASES[value.lower()]
        except KeyError:
            raise GraphError(f"unknown node kind {value!r}") from None
    return NodeKind(int(value))


class Graph:
    """Immutable simple undirected graph.

    Build instances with :func:`build_graph`; the constructor trusts its
    arguments.

    Attributes
    ----------
    kinds : ndarray of int8, shape (n,)
        :class:`NodeKind` per node.
    subnet : ndarray of int64, shape (n,)
        Sub-network id of each VM, ``-1`` for hosts or when unknown.
    host : ndarray of int64, shape (n,)
        Node id of the physical host a VM resides on, ``-1`` otherwise.
    indptr, indices : ndarray of int64
        CSR adjacency with sorted rows.
    reverse : ndarray of int64, shape (2m,)
        ``reverse[e]`` is the half-edge pointing the other way.
    """

    def __init__(self, kinds, subnet, host, indptr, indices, reverse):
        self.kinds = kinds
        self.subnet = subnet
        self.host = host
        self.indptr = indptr
        self.indices = indices
        self.reverse = reverse
        self.targets = np.repeat(np.arange(len(kinds), dtype=np.int64), np.diff(indptr))
        for arr in (kinds, subnet, host, indptr, indices, reverse, self.targets):
            arr.setflags(write=False)

    @property
    def node_count(self) -> int:
        return len(self.kinds)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def half_edge_count(self) -> int:
        return len(self.indices)

    @property
    def sources(self) -> np.ndarray:
        return self.indices

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        mask = self.targets < self.indices
        return np.column_stack([self.targets[mask], self.indices[mask]])

    @property
    def vm_mask(self) -> np.ndarray:
        return self.kinds == NodeKind.VM

    @property
    def host_mask(self) -> np.ndarray:
        return self.kinds == NodeKind.HOST

    def adjacency_matrix(self, alive: np.ndarray | None = None) -> sparse.csr_matrix:
        mask = None
        if alive is not None:
            mask = alive[self.targets] & alive[self.indices]
        rows, cols = (self.targets, self.indices) if mask is None else (
            self.targets[mask], self.indices[mask])
        data = np.ones(len(rows), dtype=np.int8)
        n = self.node_count
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def __repr__(self) -> str:
        return (f"Graph(nodes={self.node_count}, edges={self.edge_count}, "
                f"hosts={int(self.host_mask.sum())})")


def build_graph(
    node_kinds: Sequence,
    edges: Iterable[Sequence[int]],
    *,
    subnet: Sequence[int] | None = None,
    host: Sequence[int] | None = None,
) -> Graph:
    """Build a :class:`Graph` from node kinds and unordered node pairs.

    Duplicate pairs (in either orientation) are collapsed. Self-loops,
    out-of-range endpoints and host-host pairs raise :class:`GraphError`.
    ``subnet`` and ``host`` are optional per-node metadata (``-1`` = none).
    """
    kinds = np.array([_as_kind(k) for k in node_kinds], dtype=np.int8)
    n = len(kinds)
    pairs = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                       dtype=np.int64).reshape(-1, 2)
    if len(pairs):
        if pairs.min() < 0 or pairs.max() >= n:
            bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n).any(axis=1)][0]
            raise GraphError(f"edge ({bad[0]}, {bad[1]}) out of range for {n} nodes")
        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            u = pairs[loops][0, 0]
            raise GraphError(f"self-loop on node {u}")
        hh = (kinds[pairs[:, 0]] == NodeKind.HOST) & (kinds[pairs[:, 1]] == NodeKind.HOST)
        if hh.any():
            u, v = pairs[hh][0]
            raise GraphError(f"host-host edge ({u}, {v}) is not allowed")
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)

    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    # Half-edges sorted by (col, row) are exactly the reversed pairs in CSR order.
    by_col = np.lexsort((rows, cols))
    reverse = np.empty(len(rows), dtype=np.int64)
    reverse[by_col] = np.arange(len(rows), dtype=np.int64)

    subnet_arr = _metadata(subnet, n, "subnet")
    host_arr = _metadata(host, n, "host")
    return Graph(kinds, subnet_arr, host_arr, indptr, cols.astype(np.int64), reverse)


def _metadata(values, n: int, name: str) -> np.ndarray:
    if values is None:
        return np.full(n, -1, dtype=np.int64)
    arr = np.asarray(values, dtype=np.int64)
    if arr.shape != (n,):
        raise GraphError(f"{name} metadata has length {arr.size}, expected {n}")
    return arr.copy()


def component_sizes(graph: Graph, alive: np.ndarray | None = None) -> np.ndarray:
    """Sizes of the connected components induced by the alive nodes."""
    n = graph.node_count
    if alive is None:
        alive = np.ones(n, dtype=bool)
    alive = np.asarray(alive, dtype=bool)
    if alive.shape != (n,):
        raise ValueError(f"alive mask has shape {alive.shape}, expected ({n},)")
    if n == 0 or not alive.any():
        return np.zeros(0, dtype=np.int64)
    _, labels = connected_components(graph.adjacency_matrix(alive), directed=False)
    return np.bincount(labels[alive])[np.unique(labels[alive])]


def largest_connected_component(graph: Graph, alive: np.ndarray | None = None) -> int:
    """Number of nodes in the largest component of the alive-induced subgraph."""
    sizes = component_sizes(graph, alive)
    return int(sizes.max()) if len(sizes) else 0


# -- text format -----------------------------------------------------------

def _field(value: int) -> str:
    return "-" if value < 0 else str(int(value))


def write_graph(graph: Graph, fh: IO[str]) -> None:
    """Write ``graph`` in the line-oriented text format."""
    edges = graph.edges()
    out = [f"nodes {graph.node_count} edges {len(edges)}"]
    names = {NodeKind.VM: "vm", NodeKind.HOST: "host"}
    for i in range(graph.node_count):
        kind = names[NodeKind(int(graph.kinds[i]))]
        out.append(f"node {i} {kind} {_field(graph.subnet[i])} {_field(graph.host[i])}")
    out.extend(f"edge {u} {v}" for u, v in edges.tolist())
    fh.write("\n".join(out) + "\n")


def _int_token(token: str, lineno: int) -> int:
    if not token.isdigit():
        raise GraphFormatError(f"line {lineno}: expected a non-negative integer, got {token!r}")
    return int(token)


def _opt_token(token: str, lineno: int) -> int:
    return -1 if token == "-" else _int_token(token, lineno)


def read_graph(fh: IO[str]) -> Graph:
    """Parse the text format strictly; any deviation raises GraphFormatError."""
    lines = fh.read().splitlines()
    if not lines:
        raise GraphFormatError("empty graph file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "nodes" or head[2] != "edges":
        raise GraphFormatError(f"line 1: bad header {lines[0]!r}")
    n, m = _int_token(head[1], 1), _int_token(head[3], 1)
    if len(lines) != 1 + n + m:
        raise GraphFormatError(
            f"header declares {n} nodes and {m} edges but file has {len(lines) - 1} body lines")

    kinds, subnet, host = [], [], []
    for offset, line in enumerate(lines[1:1 + n]):
        lineno = offset + 2
        tok = line.split()
        if len(tok) != 5 or tok[0] != "node":
            raise GraphFormatError(f"line {lineno}: bad node line {line!r}")
        if _int_token(tok[1], lineno) != offset:
            raise GraphFormatError(f"line {lineno}: node ids must be consecutive from 0")
        if tok[2] not in ("vm", "host"):
            raise GraphFormatError(f"line {lineno}: unknown node kind {tok[2]!r}")
        s, h = _opt_token(tok[3], lineno), _opt_token(tok[4], lineno)
        if tok[2] == "host" and (s >= 0 or h >= 0):
            raise GraphFormatError(f"line {lineno}: host lines carry '-' in both trailing fields")
        kinds.append(tok[2])
        subnet.append(s)
        host.append(h)

    pairs = []
    for offset, line in enumerate(lines[1 + n:]):
        lineno = offset + 2 + n
        tok = line.split()
        if len(tok) != 3 or tok[0] != "edge":
            raise GraphFormatError(f"line {lineno}: bad edge line {line!r}")
        u, v = _int_token(tok[1], lineno), _int_token(tok[2], lineno)
        if not u < v:
            raise GraphFormatError(f"line {lineno}: edge endpoints must satisfy u < v")
        pairs.append((u, v))

    try:
        graph = build_graph(kinds, pairs, subnet=subnet, host=host)
    except GraphFormatError:
        raise
    except GraphError as exc:
        raise GraphFormatError(str(exc)) from exc
    if graph.edge_count != m:
        raise GraphFormatError(f"duplicate edges: {m} declared, {graph.edge_count} distinct")
    for i in np.flatnonzero(graph.host >= 0):
        if graph.host[i] >= n or graph.kinds[graph.host[i]] != NodeKind.HOST:
            raise GraphFormatError(f"node {i} references {graph.host[i]}, which is not a host")
    return graph
