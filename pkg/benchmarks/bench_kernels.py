"""Benchmark the compiled scatter kernels against the numpy fallback.

Times the two raw kernels on synthetic batches of increasing size, then a
full contrastive forward/backward step through the encoder with each
backend. Run with ``python benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from simgrace import backend
from simgrace.data import Graph, make_batch
from simgrace.encoder import nt_xent_gradients
from simgrace.perturb import PerturbationConfig, sample_perturbed
from simgrace.weights import EncoderConfig, init_weights


def timeit(fn, repeats: int) -> float:
    fn()  # warm up
    tic = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - tic) / repeats


def bench_raw_kernels(repeats: int) -> None:
    print(f"{'kernel':<14} {'nodes':>8} {'edges':>8} {'dim':>4} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for n_nodes, n_edges, dim in [
        (2_000, 8_000, 32),
        (20_000, 80_000, 32),
        (100_000, 400_000, 32),
        (100_000, 400_000, 128),
    ]:
        x = rng.normal(size=(n_nodes, dim))
        edges = rng.integers(0, n_nodes, size=(n_edges, 2)).astype(np.int64)
        seg = np.sort(rng.integers(0, n_nodes // 20, size=n_nodes)).astype(np.int64)
        rows = {}
        for name in ("numpy", "compiled") if backend.HAVE_COMPILED else ("numpy",):
            backend.set_backend(name)
            rows[name] = (
                timeit(lambda: backend.neighbor_sum(x, edges, n_nodes), repeats),
                timeit(lambda: backend.segment_sum(x, seg, n_nodes // 20), repeats),
            )
        for i, kernel in enumerate(("neighbor_sum", "segment_sum")):
            np_t = rows["numpy"][i]
            c_t = rows.get("compiled", (None, None))[i]
            speed = f"{np_t / c_t:7.1f}x" if c_t else "      --"
            c_str = f"{c_t * 1e3:9.2f}ms" if c_t else "        --"
            print(f"{kernel:<14} {n_nodes:>8} {n_edges:>8} {dim:>4} {np_t * 1e3:9.2f}ms {c_str} {speed}")


def bench_training_step(repeats: int) -> None:
    rng = np.random.default_rng(1)
    graphs = []
    for _ in range(128):
        n = int(rng.integers(10, 30))
        pairs = sorted({(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.15})
        graphs.append(Graph(n, np.array(pairs, dtype=np.int64).reshape(-1, 2), rng.normal(size=(n, 8)), 0))
    batch = make_batch(graphs)
    config = EncoderConfig(feature_dim=8, num_layers=3, hidden_dim=32)
    weights = init_weights(config, np.random.default_rng(0))
    view = sample_perturbed(weights, PerturbationConfig(eta=1.0), np.random.default_rng(1))

    print(f"\nfull forward/backward step, {batch.graph_count} graphs, {batch.total_nodes} nodes:")
    results = {}
    for name in ("numpy", "compiled") if backend.HAVE_COMPILED else ("numpy",):
        backend.set_backend(name)
        results[name] = timeit(
            lambda: nt_xent_gradients(batch, weights, view, config, 0.5, wrt="anchor"), repeats
        )
        print(f"  {name:<9} {results[name] * 1e3:8.2f} ms/step")
    if len(results) == 2:
        print(f"  speedup   {results['numpy'] / results['compiled']:8.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend at import: {backend.backend_name()}")
    if not backend.HAVE_COMPILED:
        print("compiled kernels unavailable; timing the fallback only")
    bench_raw_kernels(args.repeats)
    bench_training_step(args.repeats)


if __name__ == "__main__":
    main()
