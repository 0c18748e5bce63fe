"""Scatter-kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the
numpy fallback takes over. Set ``SIMGRACE_PURE_PYTHON=1`` to force the
fallback, or call :func:`set_backend` (used by the benchmark and the
equivalence tests).
"""

from __future__ import annotations

import os

import numpy as np

from . import _scatter_py

try:
    from . import _scatter  # type: ignore[attr-defined]
except ImportError:
    _scatter = None

HAVE_COMPILED = _scatter is not None

if os.environ.get("SIMGRACE_PURE_PYTHON") or not HAVE_COMPILED:
    _impl = _scatter_py
else:
    _impl = _scatter


def backend_name() -> str:
    return "compiled" if _impl is _scatter else "numpy"


def set_backend(name: str) -> None:
    """Switch the active kernel implementation ("compiled" or "numpy")."""
    global _impl
    if name == "compiled":
        if _scatter is None:
            raise RuntimeError("compiled scatter kernels are not available")
        _impl = _scatter
    elif name == "numpy":
        _impl = _scatter_py
    else:
        raise ValueError(f"unknown backend {name!r}")


def neighbor_sum(x: np.ndarray, edges: np.ndarray, num_nodes: int) -> np.ndarray:
    """Sum of neighbor rows of ``x`` for every node of an undirected edge list."""
    out = np.zeros((num_nodes, x.shape[1]), dtype=np.float64)
    if edges.shape[0]:
        _impl.neighbor_sum(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(edges, dtype=np.int64),
            out,
        )
    return out


def segment_sum(x: np.ndarray, segment_ids: np.ndarray, num_segments: int) -> np.ndarray:
    """Row-wise sums of ``x`` grouped by ``segment_ids`` (values in [0, num_segments))."""
    out = np.zeros((num_segments, x.shape[1]), dtype=np.float64)
    if x.shape[0]:
        _impl.segment_sum(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(segment_ids, dtype=np.int64),
            out,
        )
    return out
