"""Parsing, featurization and batching of the flat-file graph datasets."""

from pathlib import Path

import numpy as np
import pytest

from simgrace.data import (
    Dataset,
    Graph,
    featurize,
    make_batch,
    make_batches,
    parse_tudataset,
    split_batch,
    write_tudataset,
)
from simgrace.errors import (
    ConfigError,
    IngestionError,
    MalformedDatasetError,
    ParseError,
)

from conftest import cycle_graph, star_graph, two_class_dataset


def _write(directory: Path, name: str, a, indicator, labels, node_labels=None):
    (directory / f"{name}_A.txt").write_text("".join(f"{u}, {v}\n" for u, v in a))
    (directory / f"{name}_graph_indicator.txt").write_text("".join(f"{g}\n" for g in indicator))
    (directory / f"{name}_graph_labels.txt").write_text("".join(f"{v}\n" for v in labels))
    if node_labels is not None:
        (directory / f"{name}_node_labels.txt").write_text("".join(f"{v}\n" for v in node_labels))


class TestParse:
    def test_two_graph_fixture(self, tmp_path):
        # Indicator (1,1,2) with both directed rows of one edge: graph 0 has
        # 2 nodes and 1 undirected edge, graph 1 is a singleton.
        _write(tmp_path, "T", [(1, 2), (2, 1)], [1, 1, 2], [0, 1])
        ds = parse_tudataset(tmp_path, "T")
        assert len(ds.graphs) == 2
        assert ds.graphs[0].node_count == 2
        assert ds.graphs[0].edges.tolist() == [[0, 1]]
        assert ds.graphs[1].node_count == 1
        assert ds.graphs[1].edges.shape == (0, 2)

    def test_missing_mandatory_file_named(self, tmp_path):
        _write(tmp_path, "T", [(1, 2), (2, 1)], [1, 1], [0])
        (tmp_path / "T_graph_labels.txt").unlink()
        with pytest.raises(IngestionError, match="T_graph_labels.txt"):
            parse_tudataset(tmp_path, "T")

    def test_cross_graph_edge_rejected(self, tmp_path):
        _write(tmp_path, "T", [(1, 3)], [1, 1, 2], [0, 1])
        with pytest.raises(MalformedDatasetError, match="crosses graphs"):
            parse_tudataset(tmp_path, "T")

    def test_node_id_out_of_range_rejected(self, tmp_path):
        _write(tmp_path, "T", [(1, 9)], [1, 1, 2], [0, 1])
        with pytest.raises(MalformedDatasetError):
            parse_tudataset(tmp_path, "T")

    def test_non_integer_token_reports_line(self, tmp_path):
        _write(tmp_path, "T", [(1, 2), (2, 1)], [1, 1], [0])
        (tmp_path / "T_graph_indicator.txt").write_text("1\nfoo\n")
        with pytest.raises(ParseError, match=":2:"):
            parse_tudataset(tmp_path, "T")

    def test_self_loops_dropped_with_warning(self, tmp_path):
        _write(tmp_path, "T", [(1, 1), (1, 2), (2, 1)], [1, 1], [0])
        with pytest.warns(UserWarning, match="self-loop"):
            ds = parse_tudataset(tmp_path, "T")
        assert ds.graphs[0].edges.tolist() == [[0, 1]]

    def test_reciprocal_rows_collapse_to_one_edge(self, tmp_path):
        _write(tmp_path, "T", [(1, 2), (2, 1), (2, 3), (3, 2)], [1, 1, 1], [5])
        ds = parse_tudataset(tmp_path, "T")
        assert ds.graphs[0].edges.tolist() == [[0, 1], [1, 2]]

    def test_labels_remapped_contiguous(self, tmp_path):
        _write(tmp_path, "T", [(1, 2), (2, 1), (3, 4), (4, 3)], [1, 1, 2, 2], [-1, 1])
        ds = parse_tudataset(tmp_path, "T")
        assert ds.num_classes == 2
        assert [g.label for g in ds.graphs] == [0, 1]

    def test_indicator_partition(self, tmp_path):
        ds = two_class_dataset(10)
        write_tudataset(ds, tmp_path)
        reparsed = parse_tudataset(tmp_path, ds.name)
        lines = (tmp_path / f"{ds.name}_graph_indicator.txt").read_text().strip().splitlines()
        assert sum(g.node_count for g in reparsed.graphs) == len(lines)

    def test_round_trip(self, tmp_path):
        original = Dataset(
            name="RT",
            graphs=[cycle_graph(5), star_graph(4), cycle_graph(3)],
            num_classes=2,
            feature_dim=1,
        )
        write_tudataset(original, tmp_path)
        reparsed = parse_tudataset(tmp_path, "RT")
        assert len(reparsed.graphs) == len(original.graphs)
        assert reparsed.num_classes == original.num_classes
        for a, b in zip(original.graphs, reparsed.graphs):
            assert a.node_count == b.node_count
            assert a.label == b.label
            np.testing.assert_array_equal(a.edges, b.edges)
            np.testing.assert_array_equal(a.node_labels, b.node_labels)
            np.testing.assert_array_equal(a.node_features, b.node_features)


class TestFeaturize:
    def test_node_label_onehot_dim_counts_distinct_values(self, tmp_path):
        ds = Dataset(name="F", graphs=[cycle_graph(4), star_graph(5)], num_classes=2, feature_dim=1)
        write_tudataset(ds, tmp_path)
        # Independent count straight from the file.
        values = {int(v) for v in (tmp_path / "F_node_labels.txt").read_text().split()}
        reparsed = parse_tudataset(tmp_path, "F")
        feat = featurize(reparsed, "node_label_onehot")
        assert feat.feature_dim == len(values)
        for g in feat.graphs:
            np.testing.assert_array_equal(g.node_features.sum(axis=1), np.ones(g.node_count))

    def test_node_label_onehot_requires_labels(self):
        g = Graph(2, np.array([[0, 1]], dtype=np.int64), np.ones((2, 1)), 0)
        ds = Dataset(name="X", graphs=[g], num_classes=1, feature_dim=1)
        with pytest.raises(ConfigError):
            featurize(ds, "node_label_onehot")

    def test_degree_onehot_triangle(self):
        tri = cycle_graph(3)
        ds = Dataset(name="X", graphs=[tri], num_classes=1, feature_dim=1)
        feat = featurize(ds, "degree_onehot", degree_cap=4)
        assert feat.feature_dim == 5
        expected = np.zeros((3, 5))
        expected[:, 2] = 1.0
        np.testing.assert_array_equal(feat.graphs[0].node_features, expected)

    def test_degree_onehot_clamps_to_cap(self):
        hub = star_graph(8)  # hub degree 7
        ds = Dataset(name="X", graphs=[hub], num_classes=1, feature_dim=1)
        feat = featurize(ds, "degree_onehot", degree_cap=4)
        assert feat.graphs[0].node_features[0, 4] == 1.0

    def test_constant(self):
        ds = two_class_dataset(4)
        feat = featurize(ds, "constant")
        assert feat.feature_dim == 1
        for g in feat.graphs:
            np.testing.assert_array_equal(g.node_features, np.ones((g.node_count, 1)))

    def test_unknown_scheme(self):
        ds = two_class_dataset(4)
        with pytest.raises(ConfigError):
            featurize(ds, "bogus")


class TestBatching:
    def test_chunk_sizes_188_by_128(self):
        ds = two_class_dataset(188)
        batches = make_batches(ds, 128, np.random.default_rng(0))
        assert [b.graph_count for b in batches] == [128, 60]

    def test_trailing_singleton_repaired(self):
        ds = two_class_dataset(129)
        batches = make_batches(ds, 128, np.random.default_rng(0))
        assert [b.graph_count for b in batches] == [127, 2]

    def test_batch_size_two_odd_count_merges(self):
        ds = two_class_dataset(5)
        batches = make_batches(ds, 2, np.random.default_rng(0))
        assert all(b.graph_count >= 2 for b in batches)
        assert sum(b.graph_count for b in batches) == 5

    def test_same_seed_same_order(self):
        ds = two_class_dataset(20)
        a = make_batches(ds, 8, np.random.default_rng(42))
        b = make_batches(ds, 8, np.random.default_rng(42))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.dataset_indices, y.dataset_indices)

    def test_union_covers_dataset_without_duplicates(self):
        ds = two_class_dataset(23)
        batches = make_batches(ds, 8, np.random.default_rng(3))
        seen = np.concatenate([b.dataset_indices for b in batches])
        assert sorted(seen.tolist()) == list(range(23))

    def test_too_small_dataset(self):
        ds = two_class_dataset(1)
        with pytest.raises(ConfigError):
            make_batches(ds, 4, np.random.default_rng(0))

    def test_batch_size_below_two(self):
        ds = two_class_dataset(6)
        with pytest.raises(ConfigError):
            make_batches(ds, 1, np.random.default_rng(0))

    def test_indicator_nondecreasing_and_no_cross_edges(self):
        ds = two_class_dataset(9)
        for batch in make_batches(ds, 4, np.random.default_rng(1)):
            assert np.all(np.diff(batch.indicator) >= 0)
            assert set(batch.indicator.tolist()) == set(range(batch.graph_count))
            if batch.edges.shape[0]:
                assert np.all(batch.indicator[batch.edges[:, 0]] == batch.indicator[batch.edges[:, 1]])

    def test_slicing_recovers_members(self):
        ds = two_class_dataset(7)
        for batch in make_batches(ds, 3, np.random.default_rng(5)):
            members = split_batch(batch)
            for slot, graph in enumerate(members):
                source = ds.graphs[int(batch.dataset_indices[slot])]
                assert graph.node_count == source.node_count
                assert graph.label == source.label
                np.testing.assert_array_equal(graph.edges, source.edges)
                np.testing.assert_array_equal(graph.node_features, source.node_features)

    def test_make_batch_preserves_order(self):
        graphs = [cycle_graph(4), star_graph(6)]
        batch = make_batch(graphs)
        assert batch.total_nodes == 10
        assert batch.labels.tolist() == [0, 1]
        assert batch.indicator.tolist() == [0] * 4 + [1] * 6
