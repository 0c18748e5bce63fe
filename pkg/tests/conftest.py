"""Shared fixtures: small deterministic graph datasets and weight sets."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from simgrace.data import Dataset, Graph, featurize, write_tudataset
from simgrace.weights import EncoderConfig, init_weights


def cycle_graph(n: int, label: int = 0) -> Graph:
    edges = sorted((i, (i + 1) % n) if i < (i + 1) % n else ((i + 1) % n, i) for i in range(n))
    return Graph(
        node_count=n,
        edges=np.array(edges, dtype=np.int64),
        node_features=np.ones((n, 1)),
        label=label,
        node_labels=np.full(n, 2, dtype=np.int64),
    )


def star_graph(n: int, label: int = 1) -> Graph:
    edges = [(0, i) for i in range(1, n)]
    labels = np.ones(n, dtype=np.int64)
    labels[0] = 0
    return Graph(
        node_count=n,
        edges=np.array(edges, dtype=np.int64),
        node_features=np.ones((n, 1)),
        label=label,
        node_labels=labels,
    )


def two_class_dataset(num_graphs: int, name: str = "synthetic", degree_cap: int = 4) -> Dataset:
    """Alternating cycles (class 0) and stars (class 1) of varying size."""
    graphs = []
    for i in range(num_graphs):
        n = 4 + (i // 2) % 6
        graphs.append(cycle_graph(n) if i % 2 == 0 else star_graph(n))
    ds = Dataset(name=name, graphs=graphs, num_classes=2, feature_dim=1)
    return featurize(ds, "degree_onehot", degree_cap=degree_cap)


def random_attributed_graphs(count: int, feature_dim: int, rng: np.random.Generator) -> list[Graph]:
    graphs = []
    for _ in range(count):
        n = int(rng.integers(2, 6))
        pairs = sorted({(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6})
        graphs.append(
            Graph(
                node_count=n,
                edges=np.array(pairs, dtype=np.int64).reshape(-1, 2),
                node_features=rng.normal(size=(n, feature_dim)),
                label=int(rng.integers(0, 2)),
            )
        )
    return graphs


@pytest.fixture
def eight_graph_dataset() -> Dataset:
    return two_class_dataset(8)


@pytest.fixture
def training_dataset() -> Dataset:
    return two_class_dataset(24)


@pytest.fixture
def small_config() -> EncoderConfig:
    return EncoderConfig(feature_dim=4, num_layers=2, hidden_dim=6)


@pytest.fixture
def small_weights(small_config):
    return init_weights(small_config, np.random.default_rng(0))


@pytest.fixture
def synthetic_tudataset_dir(tmp_path) -> Path:
    """A two-class dataset written out in the TUDataset flat-file layout."""
    ds = Dataset(
        name="SYNTH",
        graphs=[cycle_graph(4 + (i // 2) % 6) if i % 2 == 0 else star_graph(4 + (i // 2) % 6) for i in range(24)],
        num_classes=2,
        feature_dim=1,
    )
    write_tudataset(ds, tmp_path)
    return tmp_path


def mutag_directory() -> Path | None:
    """Locate the MUTAG files: $SIMGRACE_DATA/MUTAG or <repo>/data/MUTAG."""
    candidates = []
    if os.environ.get("SIMGRACE_DATA"):
        candidates.append(Path(os.environ["SIMGRACE_DATA"]) / "MUTAG")
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "MUTAG")
    for directory in candidates:
        if (directory / "MUTAG_A.txt").is_file():
            return directory
    return None
