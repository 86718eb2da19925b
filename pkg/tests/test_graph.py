import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuralbrane.graph import AttributedGraph, GraphFormatError, load_graph, write_graph

from .conftest import TOY_EDGES, write_toy_files


def graphs_equal(a: AttributedGraph, b: AttributedGraph) -> bool:
    if (a.node_count, a.attribute_count) != (b.node_count, b.attribute_count):
        return False
    for u in range(a.node_count):
        if not np.array_equal(a.neighbors[u], b.neighbors[u]):
            return False
        if not np.array_equal(a.weights[u], b.weights[u]):
            return False
        if not np.array_equal(a.attributes[u], b.attributes[u]):
            return False
    if (a.labels is None) != (b.labels is None):
        return False
    return a.labels is None or np.array_equal(a.labels, b.labels)


class TestLoadGraph:
    def test_toy_graph_shape(self, toy_graph):
        assert toy_graph.node_count == 5
        assert toy_graph.attribute_count == 7
        assert toy_graph.edge_count == 6
        # node b (=1) is connected to {a, c, d} and carries attributes {x2, x6}
        assert toy_graph.neighbors[1].tolist() == [0, 2, 3]
        assert toy_graph.attributes[1].tolist() == [1, 5]

    def test_single_node_no_edges(self, tmp_path):
        (tmp_path / "e.txt").write_text("")
        (tmp_path / "a.txt").write_text("0 1 2\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt")
        assert g.node_count == 1
        assert g.neighbors[0].tolist() == []
        assert g.attributes[0].tolist() == [1, 2]

    def test_both_directions_collapse(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 1 2.0\n1 0 2.0\n")
        (tmp_path / "a.txt").write_text("0\n1\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt")
        assert g.edge_count == 1
        assert g.edge_weight(0, 1) == 2.0
        assert g.edge_weight(1, 0) == 2.0

    def test_missing_weight_defaults_to_one(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 1\n")
        (tmp_path / "a.txt").write_text("0\n1\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt")
        assert g.edge_weight(0, 1) == 1.0

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        (tmp_path / "e.txt").write_text("# header\n\n0 1 1.5\n")
        (tmp_path / "a.txt").write_text("# attrs\n0 3\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt")
        assert g.edge_count == 1
        assert g.attribute_count == 4

    def test_self_loops_dropped_and_counted(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 0 1.0\n0 1 1.0\n2 2\n")
        (tmp_path / "a.txt").write_text("0\n1\n2\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt")
        assert g.self_loops_dropped == 2
        assert g.edge_count == 1
        assert not g.has_edge(0, 0)

    def test_conflicting_duplicate_weight_rejected(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 1 1.0\n1 0 3.0\n")
        (tmp_path / "a.txt").write_text("0\n")
        with pytest.raises(GraphFormatError, match="conflicting"):
            load_graph(tmp_path / "e.txt", tmp_path / "a.txt")

    def test_malformed_line_reports_location(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 1 1.0\nnot numbers here\n")
        (tmp_path / "a.txt").write_text("0\n")
        with pytest.raises(GraphFormatError, match=r"e\.txt:2"):
            load_graph(tmp_path / "e.txt", tmp_path / "a.txt")

    def test_non_positive_weight_rejected(self, tmp_path):
        (tmp_path / "a.txt").write_text("0\n")
        for bad in ("0 1 0.0", "0 1 -2"):
            (tmp_path / "e.txt").write_text(bad + "\n")
            with pytest.raises(GraphFormatError, match="positive"):
                load_graph(tmp_path / "e.txt", tmp_path / "a.txt")

    def test_id_beyond_declared_range_rejected(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 5 1.0\n")
        (tmp_path / "a.txt").write_text("0\n")
        with pytest.raises(GraphFormatError, match="declared node count"):
            load_graph(tmp_path / "e.txt", tmp_path / "a.txt", node_count=3)
        (tmp_path / "e.txt").write_text("0 1 1.0\n")
        (tmp_path / "a.txt").write_text("0 9\n")
        with pytest.raises(GraphFormatError, match="attribute count"):
            load_graph(tmp_path / "e.txt", tmp_path / "a.txt", attribute_count=4)

    def test_conflicting_relabel_rejected(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 1\n")
        (tmp_path / "a.txt").write_text("0\n")
        (tmp_path / "l.txt").write_text("0 1\n0 2\n")
        with pytest.raises(GraphFormatError, match="relabeled"):
            load_graph(tmp_path / "e.txt", tmp_path / "a.txt", tmp_path / "l.txt")

    def test_labels_default_unlabeled(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 1\n0 2\n")
        (tmp_path / "a.txt").write_text("0\n1\n2\n")
        (tmp_path / "l.txt").write_text("1 4\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt", tmp_path / "l.txt")
        assert g.labels.tolist() == [-1, 4, -1]
        assert g.labeled_nodes().tolist() == [1]


class TestDegreeVector:
    def test_toy_node_b(self, toy_graph):
        assert toy_graph.degree_vector()[1] == 3

    def test_isolated_node(self, tmp_path):
        (tmp_path / "e.txt").write_text("0 1\n")
        (tmp_path / "a.txt").write_text("2\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt")
        assert g.degree_vector().tolist() == [1, 1, 0]

    def test_complete_graph_on_four(self, tmp_path):
        lines = [f"{u} {v}" for u in range(4) for v in range(u + 1, 4)]
        (tmp_path / "e.txt").write_text("\n".join(lines) + "\n")
        (tmp_path / "a.txt").write_text("0\n")
        g = load_graph(tmp_path / "e.txt", tmp_path / "a.txt")
        assert g.degree_vector().tolist() == [3, 3, 3, 3]

    def test_degree_sum_is_twice_edges(self, toy_graph):
        assert toy_graph.degree_vector().sum() == 2 * toy_graph.edge_count


class TestInvariants:
    def test_weight_symmetric_from_either_endpoint(self, tmp_path):
        write_toy_files(tmp_path, weights=[1.5, 2.0, 0.5, 3.25, 1.0, 7.0])
        g = load_graph(tmp_path / "edges.txt", tmp_path / "attrs.txt")
        for u, v in TOY_EDGES:
            assert g.edge_weight(u, v) == g.edge_weight(v, u)

    def test_round_trip(self, toy_graph, tmp_path):
        write_graph(toy_graph, tmp_path / "e2.txt", tmp_path / "a2.txt", tmp_path / "l2.txt")
        reloaded = load_graph(
            tmp_path / "e2.txt", tmp_path / "a2.txt", tmp_path / "l2.txt",
            node_count=toy_graph.node_count,
            attribute_count=toy_graph.attribute_count,
        )
        assert graphs_equal(toy_graph, reloaded)

    @settings(max_examples=25, deadline=None)
    @given(st.data())
    def test_round_trip_random_graphs(self, tmp_path_factory, data):
        n = data.draw(st.integers(2, 8))
        m = data.draw(st.integers(1, 6))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
        weights = [
            data.draw(st.floats(0.1, 50.0, allow_nan=False)) for _ in chosen
        ]
        directory = tmp_path_factory.mktemp("roundtrip")
        with open(directory / "e.txt", "w") as fh:
            for (u, v), w in zip(chosen, weights):
                fh.write(f"{u} {v} {w!r}\n")
        with open(directory / "a.txt", "w") as fh:
            for u in range(n):
                attrs = data.draw(st.sets(st.integers(0, m - 1)))
                fh.write(f"{u} " + " ".join(map(str, sorted(attrs))) + "\n")
        g = load_graph(directory / "e.txt", directory / "a.txt",
                       node_count=n, attribute_count=m)
        write_graph(g, directory / "e2.txt", directory / "a2.txt")
        reloaded = load_graph(directory / "e2.txt", directory / "a2.txt",
                              node_count=n, attribute_count=m)
        assert graphs_equal(g, reloaded)
        assert g.degree_vector().sum() == 2 * g.edge_count

    def test_validate_catches_asymmetry(self):
        g = AttributedGraph(
            node_count=2,
            attribute_count=1,
            neighbors=(np.array([1]), np.array([], dtype=np.int64)),
            weights=(np.array([1.0]), np.array([])),
            attributes=(np.array([], dtype=np.int64),) * 2,
        )
        with pytest.raises(GraphFormatError, match="reverse"):
            g.validate()
