"""Graph domain types, TUDataset flat-file ingestion, featurization, batching.

The on-disk layout follows the public TUDataset convention: per dataset
``<name>_A.txt`` (comma-separated 1-based node-id pairs, one edge direction
per line), ``<name>_graph_indicator.txt`` (one 1-based graph id per node
line), ``<name>_graph_labels.txt`` (one integer per graph line) and an
optional ``<name>_node_labels.txt`` (one integer per node line).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    IngestionError,
    MalformedDatasetError,
    ParseError,
)

DEFAULT_DEGREE_CAP = 64

FEATURE_SCHEMES = ("node_label_onehot", "degree_onehot", "constant")


@dataclass
class Graph:
    """One undirected attributed graph with an integer class label.

    ``edges`` holds each undirected edge once as a ``(u, v)`` row with
    ``u < v``, sorted lexicographically; node indices are 0-based.
    ``node_labels`` carries the raw per-node integers from the source files
    when present (needed for label-based featurization and round-trips).
    """

    node_count: int
    edges: np.ndarray
    node_features: np.ndarray
    label: int
    node_labels: np.ndarray | None = None

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        if self.edges.shape[0]:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def validate(self) -> None:
        if self.node_count <= 0:
            raise MalformedDatasetError("graph has no nodes")
        if self.edges.shape[0]:
            if self.edges.min() < 0 or self.edges.max() >= self.node_count:
                raise MalformedDatasetError("edge endpoint outside [0, node_count)")
            if np.any(self.edges[:, 0] == self.edges[:, 1]):
                raise MalformedDatasetError("self-loop in edge list")
            canon = {(int(u), int(v)) for u, v in self.edges}
            if len(canon) != self.edges.shape[0]:
                raise MalformedDatasetError("duplicate undirected edge")
        if self.node_features.shape[0] != self.node_count:
            raise MalformedDatasetError("feature row count != node count")


@dataclass
class Dataset:
    """An ordered collection of graphs sharing a feature space."""

    name: str
    graphs: list[Graph]
    num_classes: int
    feature_dim: int

    def __len__(self) -> int:
        return len(self.graphs)

    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    def validate(self) -> None:
        for g in self.graphs:
            g.validate()
            if g.label < 0 or g.label >= self.num_classes:
                raise MalformedDatasetError("graph label outside [0, num_classes)")
            if g.node_features.shape[1] != self.feature_dim:
                raise MalformedDatasetError("inconsistent feature_dim across graphs")


@dataclass
class GraphBatch:
    """Disjoint union of graphs: the unit of encoder evaluation.

    ``indicator`` maps each node of the union to its graph slot and is
    non-decreasing; edges never cross slots. ``labels`` and
    ``dataset_indices`` record the member graphs' class ids and positions in
    the source dataset so that slicing a batch recovers them exactly.
    """

    total_nodes: int
    edges: np.ndarray
    node_features: np.ndarray
    indicator: np.ndarray
    graph_count: int
    labels: np.ndarray
    dataset_indices: np.ndarray


def _check_int(token: str, path: Path, lineno: int) -> int:
    try:
        return int(token.strip())
    except ValueError:
        raise ParseError(path, lineno, f"expected integer, got {token.strip()!r}") from None


def _read_column(path: Path) -> list[int]:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            values.append(_check_int(line, path, lineno))
    return values


def _read_pairs(path: Path) -> list[tuple[int, int]]:
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(path, lineno, f"expected 'u, v', got {line!r}")
            pairs.append((_check_int(parts[0], path, lineno), _check_int(parts[1], path, lineno)))
    return pairs


def parse_tudataset(directory: str | Path, name: str) -> Dataset:
    """Parse a TUDataset directory into a :class:`Dataset`.

    Node ids are converted from the files' 1-based global indexing to
    0-based per-graph indexing, graph labels are remapped to contiguous
    0-based ids, and the two directed rows per edge are collapsed into one
    undirected edge. Self-loops are dropped with a warning. Every graph gets
    a single constant feature column; use :func:`featurize` to replace it.
    """
    directory = Path(directory)
    paths = {key: directory / f"{name}_{key}.txt" for key in ("A", "graph_indicator", "graph_labels", "node_labels")}
    for key in ("A", "graph_indicator", "graph_labels"):
        if not paths[key].is_file():
            raise IngestionError(f"missing mandatory file {paths[key]}")

    indicator = _read_column(paths["graph_indicator"])
    raw_graph_labels = _read_column(paths["graph_labels"])
    edge_rows = _read_pairs(paths["A"])
    node_labels = _read_column(paths["node_labels"]) if paths["node_labels"].is_file() else None

    total_nodes = len(indicator)
    num_graphs = len(raw_graph_labels)
    if node_labels is not None and len(node_labels) != total_nodes:
        raise MalformedDatasetError(
            f"{paths['node_labels'].name} has {len(node_labels)} lines for {total_nodes} nodes"
        )

    # Group nodes by graph; local index = rank of the node within its graph,
    # in file order.
    node_graph = np.empty(total_nodes, dtype=np.int64)
    local_index = np.empty(total_nodes, dtype=np.int64)
    counts = np.zeros(num_graphs, dtype=np.int64)
    for node, gid in enumerate(indicator):
        if gid < 1 or gid > num_graphs:
            raise MalformedDatasetError(f"graph indicator {gid} outside [1, {num_graphs}]")
        g = gid - 1
        node_graph[node] = g
        local_index[node] = counts[g]
        counts[g] += 1
    if np.any(counts == 0):
        empty = int(np.argmin(counts)) + 1
        raise MalformedDatasetError(f"graph {empty} has no nodes")

    per_graph_edges: list[set[tuple[int, int]]] = [set() for _ in range(num_graphs)]
    dropped_self_loops = 0
    for a, b in edge_rows:
        if not (1 <= a <= total_nodes) or not (1 <= b <= total_nodes):
            raise MalformedDatasetError(f"edge ({a}, {b}) references a node outside [1, {total_nodes}]")
        if a == b:
            dropped_self_loops += 1
            continue
        ga, gb = node_graph[a - 1], node_graph[b - 1]
        if ga != gb:
            raise MalformedDatasetError(
                f"edge ({a}, {b}) crosses graphs {ga + 1} and {gb + 1} per the indicator"
            )
        u, v = int(local_index[a - 1]), int(local_index[b - 1])
        per_graph_edges[ga].add((min(u, v), max(u, v)))
    if dropped_self_loops:
        warnings.warn(f"dropped {dropped_self_loops} self-loop edge row(s)", stacklevel=2)

    label_values = sorted(set(raw_graph_labels))
    label_map = {v: i for i, v in enumerate(label_values)}

    node_label_arrays: list[np.ndarray | None]
    if node_labels is None:
        node_label_arrays = [None] * num_graphs
    else:
        arr = np.asarray(node_labels, dtype=np.int64)
        order = np.argsort(node_graph, kind="stable")
        node_label_arrays = list(np.split(arr[order], np.cumsum(counts)[:-1]))

    graphs = []
    for g in range(num_graphs):
        edges = np.array(sorted(per_graph_edges[g]), dtype=np.int64).reshape(-1, 2)
        graphs.append(
            Graph(
                node_count=int(counts[g]),
                edges=edges,
                node_features=np.ones((int(counts[g]), 1), dtype=np.float64),
                label=label_map[raw_graph_labels[g]],
                node_labels=node_label_arrays[g],
            )
        )

    dataset = Dataset(name=name, graphs=graphs, num_classes=len(label_values), feature_dim=1)
    dataset.validate()
    return dataset


def write_tudataset(dataset: Dataset, directory: str | Path) -> None:
    """Serialize a dataset back to the TUDataset flat-file layout.

    Writes both directed rows per undirected edge, matching the public
    files. Re-parsing the written directory reproduces ``dataset`` exactly
    provided its features are the parser's constant column.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a_lines = []
    indicator_lines = []
    label_lines = []
    node_label_lines: list[str] = []
    offset = 0
    for gid, g in enumerate(dataset.graphs, start=1):
        for u, v in g.edges:
            a_lines.append(f"{offset + int(u) + 1}, {offset + int(v) + 1}")
            a_lines.append(f"{offset + int(v) + 1}, {offset + int(u) + 1}")
        indicator_lines.extend([str(gid)] * g.node_count)
        label_lines.append(str(g.label))
        if g.node_labels is not None:
            node_label_lines.extend(str(int(x)) for x in g.node_labels)
        offset += g.node_count
    (directory / f"{dataset.name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (directory / f"{dataset.name}_graph_indicator.txt").write_text("\n".join(indicator_lines) + "\n")
    (directory / f"{dataset.name}_graph_labels.txt").write_text("\n".join(label_lines) + "\n")
    if node_label_lines:
        (directory / f"{dataset.name}_node_labels.txt").write_text("\n".join(node_label_lines) + "\n")


def featurize(dataset: Dataset, scheme: str, degree_cap: int = DEFAULT_DEGREE_CAP) -> Dataset:
    """Rebuild node features for every graph under the given scheme.

    ``node_label_onehot`` one-hot encodes the per-node integer labels over
    the distinct values present in the dataset; ``degree_onehot`` one-hot
    encodes node degree clamped to ``degree_cap`` (``degree_cap + 1``
    columns); ``constant`` assigns a single all-ones column.
    """
    if scheme not in FEATURE_SCHEMES:
        raise ConfigError(f"unknown feature scheme {scheme!r}; expected one of {FEATURE_SCHEMES}")

    if scheme == "node_label_onehot":
        if any(g.node_labels is None for g in dataset.graphs):
            raise ConfigError("node_label_onehot requires a node-label file, which this dataset lacks")
        values = sorted({int(v) for g in dataset.graphs for v in g.node_labels})
        index = {v: i for i, v in enumerate(values)}
        dim = len(values)

        def features(g: Graph) -> np.ndarray:
            out = np.zeros((g.node_count, dim), dtype=np.float64)
            out[np.arange(g.node_count), [index[int(v)] for v in g.node_labels]] = 1.0
            return out

    elif scheme == "degree_onehot":
        if degree_cap < 0:
            raise ConfigError("degree_cap must be non-negative")
        dim = degree_cap + 1

        def features(g: Graph) -> np.ndarray:
            deg = np.minimum(g.degrees(), degree_cap)
            out = np.zeros((g.node_count, dim), dtype=np.float64)
            out[np.arange(g.node_count), deg] = 1.0
            return out

    else:
        dim = 1

        def features(g: Graph) -> np.ndarray:
            return np.ones((g.node_count, 1), dtype=np.float64)

    graphs = [replace(g, node_features=features(g)) for g in dataset.graphs]
    return Dataset(name=dataset.name, graphs=graphs, num_classes=dataset.num_classes, feature_dim=dim)


def make_batch(graphs: Sequence[Graph], dataset_indices: Iterable[int] | None = None) -> GraphBatch:
    """Assemble graphs into one disjoint-union batch, preserving order."""
    if not graphs:
        raise ConfigError("cannot build an empty batch")
    offsets = np.cumsum([0] + [g.node_count for g in graphs])
    edges = [g.edges + offsets[i] for i, g in enumerate(graphs) if g.edges.shape[0]]
    indicator = np.repeat(np.arange(len(graphs), dtype=np.int64), [g.node_count for g in graphs])
    if dataset_indices is None:
        dataset_indices = range(len(graphs))
    return GraphBatch(
        total_nodes=int(offsets[-1]),
        edges=np.concatenate(edges, axis=0) if edges else np.empty((0, 2), dtype=np.int64),
        node_features=np.concatenate([g.node_features for g in graphs], axis=0).astype(np.float64),
        indicator=indicator,
        graph_count=len(graphs),
        labels=np.array([g.label for g in graphs], dtype=np.int64),
        dataset_indices=np.asarray(list(dataset_indices), dtype=np.int64),
    )


def split_batch(batch: GraphBatch) -> list[Graph]:
    """Invert :func:`make_batch`: recover the member graphs slot by slot."""
    graphs = []
    starts = np.searchsorted(batch.indicator, np.arange(batch.graph_count))
    bounds = np.append(starts, batch.total_nodes)
    edge_slot = batch.indicator[batch.edges[:, 0]] if batch.edges.shape[0] else np.empty(0, dtype=np.int64)
    for slot in range(batch.graph_count):
        lo, hi = int(bounds[slot]), int(bounds[slot + 1])
        mask = edge_slot == slot
        graphs.append(
            Graph(
                node_count=hi - lo,
                edges=(batch.edges[mask] - lo).reshape(-1, 2),
                node_features=batch.node_features[lo:hi].copy(),
                label=int(batch.labels[slot]),
                node_labels=None,
            )
        )
    return graphs


def make_batches(dataset: Dataset, batch_size: int, rng: np.random.Generator) -> list[GraphBatch]:
    """Shuffle the dataset and chunk it into batches of at least 2 graphs.

    A trailing singleton chunk is repaired by moving one graph out of the
    previous batch, keeping every batch within ``batch_size``; when the
    previous batch cannot spare one (``batch_size == 2``), the singleton is
    merged into it instead.
    """
    if batch_size < 2:
        raise ConfigError("batch_size must be at least 2 (the loss needs a negative)")
    n = len(dataset.graphs)
    if n < 2:
        raise ConfigError("dataset must contain at least 2 graphs")
    perm = rng.permutation(n)
    chunks = [perm[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        if len(chunks[-2]) > 2:
            moved = chunks[-2][-1:]
            chunks[-2] = chunks[-2][:-1]
            chunks[-1] = np.concatenate([moved, chunks[-1]])
        else:
            chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
            chunks.pop()
    return [make_batch([dataset.graphs[i] for i in chunk], chunk) for chunk in chunks]
