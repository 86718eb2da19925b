import numpy as np
import pytest

from neuralbrane.graph import load_graph


# Five-vertex toy graph: a=0, b=1, c=2, d=3, e=4; six edges with b adjacent
# to {a, c, d}; seven attributes x1..x7 -> ids 0..6 with b carrying {x2, x6}.
TOY_EDGES = [(0, 1), (1, 2), (1, 3), (2, 3), (3, 4), (0, 4)]
TOY_ATTRS = {0: [0, 2], 1: [1, 5], 2: [1, 2], 3: [3, 6], 4: [4]}
TOY_LABELS = {0: 0, 1: 0, 2: 1, 3: 1, 4: 1}


def write_toy_files(directory, weights=None):
    edge_path = directory / "edges.txt"
    attr_path = directory / "attrs.txt"
    label_path = directory / "labels.txt"
    with open(edge_path, "w") as fh:
        for idx, (u, v) in enumerate(TOY_EDGES):
            w = weights[idx] if weights else 1.0
            fh.write(f"{u} {v} {w}\n")
    with open(attr_path, "w") as fh:
        for node, attrs in TOY_ATTRS.items():
            fh.write(f"{node} " + " ".join(map(str, attrs)) + "\n")
    with open(label_path, "w") as fh:
        for node, label in TOY_LABELS.items():
            fh.write(f"{node} {label}\n")
    return edge_path, attr_path, label_path


@pytest.fixture
def toy_files(tmp_path):
    return write_toy_files(tmp_path)


@pytest.fixture
def toy_graph(toy_files):
    edge_path, attr_path, label_path = toy_files
    return load_graph(edge_path, attr_path, label_path)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
