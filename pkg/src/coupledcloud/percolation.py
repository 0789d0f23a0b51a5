"""Message-passing bond percolation on a simplified cloud graph.

Two solvers share the half-edge layout of :class:`~coupledcloud.graph.Graph`:

* :func:`solve_scalar` iterates the generating-function messages at ``z = 1``,
  ``h[i<-j] = 1 - p[i<-j] + p[i<-j] * prod_{k in N(j) minus i} h[j<-k]``,
  and returns the expected giant-component fraction
  ``S = 1 - mean_i prod_{j in N(i)} h[i<-j]``.
* :func:`solve_polynomial` carries full coefficient vectors and yields the
  cluster-size distribution of every node. It is exact on forests and is
  meant for small validation graphs.

:func:`brute_force_cluster_distribution` enumerates every bond configuration
and serves as the independent oracle for the polynomial mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_edge_probabilities, check_graph, check_positive_int
from .graph import Graph, component_sizes

__all__ = [
    "ConvergenceError",
    "PercolationSolution",
    "ClusterPolynomials",
    "solve_scalar",
    "giant_fraction",
    "node_marginals",
    "solve_polynomial",
    "brute_force_cluster_distribution",
]

BRUTE_FORCE_MAX_EDGES = 20


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class PercolationSolution:
    h: np.ndarray
    giant_fraction: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class ClusterPolynomials:
    """Cluster-size generating functions as coefficient arrays.

    ``node_coeffs[i, s]`` is the probability that node ``i`` sits in a finite
    cluster of exactly ``s`` nodes (column 0 is always 0). ``edge_coeffs[e, s]``
    are the coefficients of ``H[targets[e] <- sources[e]](z)``; the brute-force
    oracle leaves it as ``None``.
    """

    node_coeffs: np.ndarray
    edge_coeffs: np.ndarray | None
    s_cap: int
    truncated: bool
    is_forest: bool
    converged: bool = True

    def pi(self, node: int, s: int) -> float:
        return float(self.node_coeffs[node, s]) if 0 <= s <= self.s_cap else 0.0

    def percolating_probability(self) -> np.ndarray:
        """``1 - G_i(1)`` per node."""
        return 1.0 - self.node_coeffs.sum(axis=1)


# -- scalar mode ------------------------------------------------------------

def _log_rows(graph: Graph, h: np.ndarray):
    zero = h == 0.0
    logs = np.log(np.where(zero, 1.0, h))
    n = graph.node_count
    row_log = np.bincount(graph.targets, weights=logs, minlength=n)
    row_zero = np.bincount(graph.targets, weights=zero, minlength=n)
    return zero, logs, row_log, row_zero


def _excluded_products(graph: Graph, h: np.ndarray) -> np.ndarray:
    """For each half-edge i <- j: product of h[j <- k] over neighbours k of j other than i."""
    zero, logs, row_log, row_zero = _log_rows(graph, h)
    j = graph.sources
    r = graph.reverse
    zeros_left = row_zero[j] - zero[r]
    return np.where(zeros_left > 0, 0.0, np.exp(row_log[j] - logs[r]))


def _node_products(graph: Graph, h: np.ndarray) -> np.ndarray:
    _, _, row_log, row_zero = _log_rows(graph, h)
    return np.where(row_zero > 0, 0.0, np.exp(row_log))


def node_marginals(graph: Graph, h: np.ndarray) -> np.ndarray:
    """Probability that each node belongs to the percolating cluster, ``1 - G_i(1)``."""
    return 1.0 - _node_products(graph, np.asarray(h, dtype=np.float64))


def giant_fraction(graph: Graph, h: np.ndarray) -> float:
    if graph.node_count == 0:
        return 0.0
    return float(np.clip(node_marginals(graph, h).mean(), 0.0, 1.0))


def solve_scalar(graph: Graph, probs, tol: float = 1e-10, max_iter: int = 10_000,
                 callback=None) -> PercolationSolution:
    """Synchronous fixed-point iteration from ``h = 0``.

    Starting at zero picks the smallest fixed point (``h = 1`` always solves
    the equations trivially). ``callback(iteration, h_new, h_old)`` is invoked
    after every sweep. Raises :class:`ConvergenceError` if the max per-edge
    change is still ``>= tol`` after ``max_iter`` sweeps.
    """
    check_graph(graph)
    p = check_edge_probabilities(probs, graph)
    if not tol > 0:
        raise ValueError("tol must be positive")
    check_positive_int(max_iter, "max_iter")
    h = np.zeros(graph.half_edge_count)
    residual = 0.0
    for it in range(1, max_iter + 1):
        new = 1.0 - p + p * _excluded_products(graph, h)
        residual = float(np.abs(new - h).max()) if new.size else 0.0
        if callback is not None:
            callback(it, new, h)
        h = new
        if residual < tol:
            return PercolationSolution(h, giant_fraction(graph, h), it, residual)
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (residual {residual:.3e})",
        residual, max_iter)


# -- polynomial mode --------------------------------------------------------

def _poly_mul(a: np.ndarray, b: np.ndarray, length: int) -> tuple[np.ndarray, float]:
    full = np.convolve(a, b)
    return full[:length], float(full[length:].sum())


def _shift(a: np.ndarray) -> tuple[np.ndarray, float]:
    out = np.empty_like(a)
    out[0] = 0.0
    out[1:] = a[:-1]
    return out, float(a[-1])


def _is_forest(graph: Graph) -> bool:
    return graph.edge_count == graph.node_count - len(component_sizes(graph))


def _row_product_excluding(polys: list[np.ndarray], length: int):
    """Products of all polynomials but one, via prefix and suffix products."""
    d = len(polys)
    one = np.zeros(length)
    one[0] = 1.0
    lost = 0.0
    prefix = [one]
    for q in polys[:-1]:
        nxt, l = _poly_mul(prefix[-1], q, length)
        prefix.append(nxt)
        lost += l
    suffix = [one] * d
    for k in range(d - 2, -1, -1):
        suffix[k], l = _poly_mul(suffix[k + 1], polys[k + 1], length)
        lost += l
    out = []
    for k in range(d):
        prod, l = _poly_mul(prefix[k], suffix[k], length)
        out.append(prod)
        lost += l
    return out, lost


def solve_polynomial(graph: Graph, probs, s_cap: int | None = None) -> ClusterPolynomials:
    """Cluster-size distributions from coefficient-level message passing.

    ``H[i<-j](z) = (1 - p) + p z prod_{k in N(j) minus i} H[j<-k](z)`` is iterated
    from ``H = 1`` until the coefficients stop changing (exactly; on a forest
    this takes at most diameter + 1 sweeps) or ``n + s_cap + 1`` sweeps pass.
    Products are truncated at degree ``s_cap`` (default ``n``); ``truncated``
    reports whether probability mass was cut, ``is_forest`` whether the
    result is exact.
    """
    check_graph(graph)
    p = check_edge_probabilities(probs, graph)
    n = graph.node_count
    s_cap = n if s_cap is None else check_positive_int(s_cap, "s_cap")
    length = s_cap + 1
    E = graph.half_edge_count
    H = np.zeros((E, length))
    H[:, 0] = 1.0
    indptr = graph.indptr
    converged = False
    lost = 0.0
    for _ in range(n + s_cap + 1):
        new = np.empty_like(H)
        lost = 0.0
        for j in range(n):
            lo, hi = indptr[j], indptr[j + 1]
            if lo == hi:
                continue
            # Row j holds messages H[j<-k]; half-edge e = reverse[lo + t] is i <- j with i = k_t.
            excl, l = _row_product_excluding(list(H[lo:hi]), length)
            lost += l
            for t in range(hi - lo):
                e = graph.reverse[lo + t]
                shifted, l = _shift(excl[t])
                lost += l
                msg = p[e] * shifted
                msg[0] += 1.0 - p[e]
                new[e] = msg
        if np.array_equal(new, H):
            converged = True
            H = new
            break
        H = new

    G = np.zeros((n, length))
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        prod = np.zeros(length)
        prod[0] = 1.0
        for row in H[lo:hi]:
            prod, l = _poly_mul(prod, row, length)
            lost += l
        G[i], l = _shift(prod)
        lost += l
    return ClusterPolynomials(G, H, s_cap, lost > 0.0, _is_forest(graph), converged)


# -- oracle -----------------------------------------------------------------

def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def brute_force_cluster_distribution(graph: Graph, probs) -> ClusterPolynomials:
    """Exact cluster-size distribution by enumerating all ``2**m`` bond states.

    Needs symmetric probabilities (``p[e] == p[reverse[e]]``) and at most 20
    undirected edges.
    """
    check_graph(graph)
    p = check_edge_probabilities(probs, graph)
    if not np.array_equal(p, p[graph.reverse]):
        raise ValueError("brute force needs symmetric half-edge probabilities")
    m = graph.edge_count
    if m > BRUTE_FORCE_MAX_EDGES:
        raise ValueError(f"{m} edges exceed the brute-force limit of {BRUTE_FORCE_MAX_EDGES}")
    n = graph.node_count
    edges = graph.edges().tolist()
    mask = graph.targets < graph.sources
    pe = p[mask].tolist()
    pi = np.zeros((n, n + 1))
    for state in range(1 << m):
        weight = 1.0
        parent = list(range(n))
        for k, (u, v) in enumerate(edges):
            if state >> k & 1:
                weight *= pe[k]
                ru, rv = _find(parent, u), _find(parent, v)
                if ru != rv:
                    parent[ru] = rv
            else:
                weight *= 1.0 - pe[k]
        if weight == 0.0:
            continue
        roots = [_find(parent, i) for i in range(n)]
        size = {}
        for r in roots:
            size[r] = size.get(r, 0) + 1
        for i, r in enumerate(roots):
            pi[i, size[r]] += weight
    return ClusterPolynomials(pi, None, n, False, _is_forest(graph))
