"""Synthetic attributed graphs for benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .graph import AttributedGraph

_EMPTY = np.empty(0, dtype=np.int64)


def _build(n: int, m: int, edge_set, attr_sets, labels) -> AttributedGraph:
    nbr_lists = [[] for _ in range(n)]
    for u, v, w in edge_set:
        nbr_lists[u].append((v, w))
        nbr_lists[v].append((u, w))
    neighbors, weights = [], []
    for u in range(n):
        pairs = sorted(nbr_lists[u])
        if pairs:
            ids, wts = zip(*pairs)
            neighbors.append(np.array(ids, dtype=np.int64))
            weights.append(np.array(wts, dtype=np.float64))
        else:
            neighbors.append(_EMPTY)
            weights.append(np.empty(0, dtype=np.float64))
    attributes = tuple(
        np.array(sorted(s), dtype=np.int64) if s else _EMPTY for s in attr_sets
    )
    g = AttributedGraph(
        node_count=n,
        attribute_count=m,
        neighbors=tuple(neighbors),
        weights=tuple(weights),
        attributes=attributes,
        labels=labels,
    )
    g.validate()
    return g


def planted_partition(
    nodes: int = 60,
    communities: int = 2,
    intra_p: float = 0.3,
    inter_p: float = 0.02,
    attributes: int = 20,
    attr_on: float = 0.8,
    attr_off: float = 0.05,
    seed=0,
) -> AttributedGraph:
    """Two-block-style community graph with community-correlated attributes.

    Nodes are split evenly into ``communities`` blocks; same-block pairs get
    an edge with probability ``intra_p``, cross-block pairs with ``inter_p``.
    Attributes are partitioned across blocks, present with probability
    ``attr_on`` on their own block and ``attr_off`` elsewhere.  Labels are
    the block ids.
    """
    rng = np.random.default_rng(seed)
    block = np.arange(nodes) % communities
    edges = []
    for u in range(nodes):
        for v in range(u + 1, nodes):
            p = intra_p if block[u] == block[v] else inter_p
            if rng.random() < p:
                edges.append((u, v, 1.0))
    attr_block = np.arange(attributes) % communities
    attr_sets = []
    for u in range(nodes):
        own = attr_block == block[u]
        draws = rng.random(attributes)
        present = np.where(own, draws < attr_on, draws < attr_off)
        attr_sets.append(set(np.flatnonzero(present).tolist()))
    return _build(nodes, attributes, edges, attr_sets, block.astype(np.int64))


def gnm_random_graph(
    nodes: int,
    edges: int,
    attributes: int = 16,
    attrs_per_node: int = 4,
    seed=0,
) -> AttributedGraph:
    """Uniform random graph with exactly ``edges`` distinct undirected edges
    and a fixed-size random attribute set per node."""
    max_edges = nodes * (nodes - 1) // 2
    if edges > max_edges:
        raise ValueError(f"{edges} edges exceed the {max_edges} possible")
    rng = np.random.default_rng(seed)
    chosen = set()
    while len(chosen) < edges:
        u, v = rng.integers(nodes), rng.integers(nodes)
        if u == v:
            continue
        chosen.add((min(u, v), max(u, v)))
    edge_list = [(int(u), int(v), 1.0) for u, v in sorted(chosen)]
    attr_sets = [
        set(rng.choice(attributes, size=min(attrs_per_node, attributes),
                       replace=False).tolist())
        for _ in range(nodes)
    ]
    return _build(nodes, attributes, edge_list, attr_sets, None)
