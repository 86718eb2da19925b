import numpy as np
import pytest

from neuralbrane.synthetic import gnm_random_graph, planted_partition


def test_planted_partition_structure():
    g = planted_partition(nodes=60, communities=2, seed=1)
    assert g.node_count == 60
    assert g.attribute_count == 20
    assert g.labels is not None
    assert set(np.unique(g.labels)) == {0, 1}
    g.validate()
    # intra edges must dominate at 0.3 versus 0.02
    intra = sum(
        1 for u in range(60) for v in g.neighbors[u]
        if v > u and g.labels[u] == g.labels[v]
    )
    inter = g.edge_count - intra
    assert intra > 5 * inter


def test_planted_partition_attributes_correlate():
    g = planted_partition(nodes=100, attributes=20, seed=2)
    aligned = 0
    total = 0
    for u in range(100):
        for a in g.attributes[u]:
            total += 1
            if a % 2 == g.labels[u]:
                aligned += 1
    assert aligned / total > 0.8


def test_planted_partition_deterministic():
    a = planted_partition(seed=5)
    b = planted_partition(seed=5)
    assert a.edge_count == b.edge_count
    for u in range(a.node_count):
        assert np.array_equal(a.neighbors[u], b.neighbors[u])
        assert np.array_equal(a.attributes[u], b.attributes[u])


def test_gnm_exact_edge_count():
    g = gnm_random_graph(nodes=50, edges=120, seed=3)
    assert g.edge_count == 120
    assert g.labels is None
    g.validate()


def test_gnm_rejects_impossible_edge_count():
    with pytest.raises(ValueError):
        gnm_random_graph(nodes=4, edges=7)
