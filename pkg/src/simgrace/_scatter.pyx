# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled scatter kernels for message passing and graph readout.

These two loops dominate the runtime of the numpy encoder; everything else
is dense BLAS. The pure-numpy equivalents live in ``_scatter_py``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def neighbor_sum(double[:, ::1] x, cnp.int64_t[:, ::1] edges, double[:, ::1] out):
    """Accumulate ``out[u] += x[v]`` and ``out[v] += x[u]`` per undirected edge.

    Two passes, one per direction, so the summation order matches the
    numpy fallback bit for bit.
    """
    cdef Py_ssize_t e, d
    cdef Py_ssize_t n_edges = edges.shape[0]
    cdef Py_ssize_t dim = x.shape[1]
    cdef cnp.int64_t u, v
    for e in range(n_edges):
        u = edges[e, 0]
        v = edges[e, 1]
        for d in range(dim):
            out[u, d] += x[v, d]
    for e in range(n_edges):
        u = edges[e, 0]
        v = edges[e, 1]
        for d in range(dim):
            out[v, d] += x[u, d]


def segment_sum(double[:, ::1] x, cnp.int64_t[::1] segment_ids, double[:, ::1] out):
    """Accumulate ``out[segment_ids[i]] += x[i]`` row by row."""
    cdef Py_ssize_t i, d
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t dim = x.shape[1]
    cdef cnp.int64_t s
    for i in range(n):
        s = segment_ids[i]
        for d in range(dim):
            out[s, d] += x[i, d]
