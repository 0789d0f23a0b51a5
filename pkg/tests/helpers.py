"""Shared test utilities: small graph builders and independent statistical oracles."""

import numpy as np

from coupledcloud.graph import NodeKind, build_graph


def vm_graph(n, edges):
    return build_graph([NodeKind.VM] * n, edges)


def path_graph(n):
    return vm_graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves):
    return vm_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_forest(rng, max_nodes=8):
    """Random labelled forest: each node links to an earlier one or starts a new tree."""
    n = int(rng.integers(1, max_nodes + 1))
    edges = []
    for v in range(1, n):
        if rng.random() < 0.8:
            edges.append((int(rng.integers(0, v)), v))
    perm = rng.permutation(n)
    return vm_graph(n, [(int(perm[u]), int(perm[v])) for u, v in edges])


def symmetric_probs(graph, rng):
    """One probability per undirected edge, copied to both half-edges."""
    p = rng.random(graph.half_edge_count)
    lower = graph.targets < graph.sources
    p[~lower] = p[graph.reverse[~lower]]
    return p


def log_binned_slope(counts_by_value, lo, hi, nbins):
    """Weighted log-log slope of binned frequency per integer value over [lo, hi].

    ``counts_by_value[v]`` is the (possibly expected) count at integer ``v``.
    Weights are the bin counts, i.e. inverse Poisson variance of log density.
    """
    edges = np.unique(np.round(np.geomspace(lo, hi + 1, nbins + 1)).astype(int))
    xs, ys, ws = [], [], []
    for a, b in zip(edges[:-1], edges[1:]):
        total = float(np.sum(counts_by_value[a:b]))
        if total <= 0:
            continue
        xs.append(np.log(np.sqrt(a * (b - 1)) if b - 1 > a else a))
        ys.append(np.log(total / (b - a)))
        ws.append(total)
    xs, ys, ws = map(np.asarray, (xs, ys, ws))
    slope, _ = np.polyfit(xs, ys, 1, w=np.sqrt(ws))
    return float(slope)
