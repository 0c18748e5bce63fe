"""Cosine similarity and the temperature-scaled batch contrastive objective.

For a batch of N paired embeddings the per-graph loss is

    l_n = -log[ exp(sim(z_n, z'_n)/tau) / sum_{m != n} exp(sim(z_n, z'_m)/tau) ]

i.e. the positive pair sits only in the numerator and the other N-1 rows of
the second view act as negatives. The reported scalar is the mean of l_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateEmbeddingError, ShapeError


@dataclass(frozen=True)
class LossConfig:
    temperature: float = 0.5

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigError("temperature must be positive")


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two nonzero vectors, in [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateEmbeddingError("cosine similarity of a zero-norm vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def _normalize_rows(z: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms == 0.0):
        row = int(np.argmin(norms))
        raise DegenerateEmbeddingError(f"{what} row {row} has zero norm")
    return z / norms[:, None], norms


def _check_pair(z: np.ndarray, z_prime: np.ndarray) -> None:
    if z.ndim != 2 or z_prime.ndim != 2 or z.shape != z_prime.shape:
        raise ShapeError(f"paired embeddings must share a 2-D shape, got {z.shape} and {z_prime.shape}")
    if z.shape[0] < 2:
        raise ValueError("contrastive loss needs at least 2 graphs (no negatives otherwise)")


def nt_xent(z: np.ndarray, z_prime: np.ndarray, config: LossConfig = LossConfig()) -> tuple[float, np.ndarray]:
    """Mean contrastive loss and the per-graph losses.

    Rows of ``z`` anchor the loss; rows of ``z_prime`` supply the positive
    (same index) and the negatives (other indices).
    """
    z = np.asarray(z, dtype=np.float64)
    z_prime = np.asarray(z_prime, dtype=np.float64)
    _check_pair(z, z_prime)
    zh, _ = _normalize_rows(z, "anchor")
    zp, _ = _normalize_rows(z_prime, "view")
    s = (zh @ zp.T) / config.temperature
    pos = np.diag(s).copy()
    np.fill_diagonal(s, -np.inf)
    row_max = s.max(axis=1)
    lse = row_max + np.log(np.sum(np.exp(s - row_max[:, None]), axis=1))
    per_graph = lse - pos
    return float(per_graph.mean()), per_graph


def nt_xent_embedding_grad(
    z: np.ndarray, z_prime: np.ndarray, config: LossConfig = LossConfig()
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Loss plus exact gradients of the mean loss w.r.t. both embedding matrices."""
    z = np.asarray(z, dtype=np.float64)
    z_prime = np.asarray(z_prime, dtype=np.float64)
    _check_pair(z, z_prime)
    n = z.shape[0]
    zh, z_norms = _normalize_rows(z, "anchor")
    zp, zp_norms = _normalize_rows(z_prime, "view")
    s = (zh @ zp.T) / config.temperature
    pos = np.diag(s).copy()
    masked = s.copy()
    np.fill_diagonal(masked, -np.inf)
    row_max = masked.max(axis=1)
    lse = row_max + np.log(np.sum(np.exp(masked - row_max[:, None]), axis=1))
    per_graph = lse - pos

    # d(mean loss)/dS: softmax over the negatives, -1 on the diagonal.
    grad_s = np.exp(masked - lse[:, None])
    np.fill_diagonal(grad_s, -1.0)
    grad_s /= n * config.temperature

    grad_zh = grad_s @ zp
    grad_zp = grad_s.T @ zh
    # Undo the row normalization: project out the radial component.
    grad_z = (grad_zh - np.sum(grad_zh * zh, axis=1, keepdims=True) * zh) / z_norms[:, None]
    grad_zp_full = (grad_zp - np.sum(grad_zp * zp, axis=1, keepdims=True) * zp) / zp_norms[:, None]
    return float(per_graph.mean()), per_graph, grad_z, grad_zp_full
