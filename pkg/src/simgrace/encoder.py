"""Message-passing encoder, shared projection head, and exact gradients.

Each layer computes ``MLP_k((1 + eps_k) * state + neighbor_sum(state))``
where the MLP is affine -> normalization -> rectifier -> affine, and the
graph embedding is the sum of final node states per graph slot. The
projection head is a two-layer perceptron without normalization.

The backward pass is derived by hand, layer by layer, so gradients are
exact up to floating point; the test suite checks every named tensor
against central finite differences. All math is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .data import GraphBatch
from .errors import NumericError, ShapeError
from .loss import LossConfig, nt_xent_embedding_grad
from .weights import EncoderConfig, WeightSet, validate_weights, zero_gradients

NORM_EPS = 1e-5
RUNNING_STAT_MOMENTUM = 0.1


@dataclass
class _LayerCache:
    x_in: np.ndarray
    agg: np.ndarray
    u: np.ndarray
    mu: np.ndarray | None
    inv_std: np.ndarray | None
    xhat: np.ndarray | None
    relu_mask: np.ndarray
    activated: np.ndarray


@dataclass
class _ForwardCache:
    mode: str
    layers: list[_LayerCache]
    h: np.ndarray | None = None
    head_pre: np.ndarray | None = None
    head_mid: np.ndarray | None = None


def _check_inputs(batch: GraphBatch, weights: WeightSet, config: EncoderConfig, mode: str) -> None:
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if batch.node_features.shape[1] != config.feature_dim:
        raise ShapeError(
            f"batch feature dim {batch.node_features.shape[1]} != config feature_dim {config.feature_dim}"
        )
    validate_weights(weights, config)


def _forward_nodes(
    batch: GraphBatch, weights: WeightSet, config: EncoderConfig, mode: str
) -> tuple[np.ndarray, list[_LayerCache]]:
    x = np.asarray(batch.node_features, dtype=np.float64)
    caches = []
    for k in range(config.num_layers):
        p = f"layers.{k}."
        eps = float(weights[p + "eps"])
        agg = (1.0 + eps) * x + backend.neighbor_sum(x, batch.edges, batch.total_nodes)
        u = agg @ weights[p + "lin1.w"] + weights[p + "lin1.b"]
        if config.use_normalization:
            if mode == "train":
                mu = u.mean(axis=0)
                var = u.var(axis=0)
            else:
                mu = weights[p + "norm.mean"]
                var = weights[p + "norm.var"]
            inv_std = 1.0 / np.sqrt(var + NORM_EPS)
            xhat = (u - mu) * inv_std
            y = weights[p + "norm.scale"] * xhat + weights[p + "norm.shift"]
        else:
            mu = inv_std = xhat = None
            y = u
        relu_mask = y > 0.0
        a = np.where(relu_mask, y, 0.0)
        x_out = a @ weights[p + "lin2.w"] + weights[p + "lin2.b"]
        if not np.all(np.isfinite(x_out)):
            raise NumericError(f"non-finite node state after layer layers.{k}")
        caches.append(_LayerCache(x, agg, u, mu, inv_std, xhat, relu_mask, a))
        x = x_out
    return x, caches


def encode(batch: GraphBatch, weights: WeightSet, config: EncoderConfig, mode: str = "eval") -> np.ndarray:
    """Graph-level embeddings ``h``: one row per slot of the batch.

    In eval mode normalization uses the stored running statistics, so a
    graph's row does not depend on what else is in the batch. Inputs are
    never mutated.
    """
    _check_inputs(batch, weights, config, mode)
    nodes, _ = _forward_nodes(batch, weights, config, mode)
    return backend.segment_sum(nodes, batch.indicator, batch.graph_count)


def project(h: np.ndarray, weights: WeightSet) -> np.ndarray:
    """Apply the shared two-layer projection head row-wise."""
    h = np.asarray(h, dtype=np.float64)
    w1 = weights["head.lin1.w"]
    if h.ndim != 2 or h.shape[1] != w1.shape[0]:
        raise ShapeError(f"projection expects rows of dim {w1.shape[0]}, got shape {h.shape}")
    t = h @ w1 + weights["head.lin1.b"]
    return np.maximum(t, 0.0) @ weights["head.lin2.w"] + weights["head.lin2.b"]


def _forward_projected(
    batch: GraphBatch, weights: WeightSet, config: EncoderConfig, mode: str
) -> tuple[np.ndarray, _ForwardCache]:
    nodes, layer_caches = _forward_nodes(batch, weights, config, mode)
    h = backend.segment_sum(nodes, batch.indicator, batch.graph_count)
    pre = h @ weights["head.lin1.w"] + weights["head.lin1.b"]
    mid = np.maximum(pre, 0.0)
    z = mid @ weights["head.lin2.w"] + weights["head.lin2.b"]
    return z, _ForwardCache(mode=mode, layers=layer_caches, h=h, head_pre=pre, head_mid=mid)


def _backward(
    batch: GraphBatch,
    weights: WeightSet,
    config: EncoderConfig,
    cache: _ForwardCache,
    grad_z: np.ndarray,
) -> dict[str, np.ndarray]:
    grads = zero_gradients(config)

    grads["head.lin2.w"] = cache.head_mid.T @ grad_z
    grads["head.lin2.b"] = grad_z.sum(axis=0)
    grad_mid = grad_z @ weights["head.lin2.w"].T
    grad_pre = np.where(cache.head_pre > 0.0, grad_mid, 0.0)
    grads["head.lin1.w"] = cache.h.T @ grad_pre
    grads["head.lin1.b"] = grad_pre.sum(axis=0)
    grad_h = grad_pre @ weights["head.lin1.w"].T

    # Readout is a segment sum, so its backward is a gather.
    grad_x = grad_h[batch.indicator]
    for k in reversed(range(config.num_layers)):
        p = f"layers.{k}."
        c = cache.layers[k]
        grads[p + "lin2.w"] = c.activated.T @ grad_x
        grads[p + "lin2.b"] = grad_x.sum(axis=0)
        grad_a = grad_x @ weights[p + "lin2.w"].T
        grad_y = np.where(c.relu_mask, grad_a, 0.0)
        if config.use_normalization:
            grads[p + "norm.scale"] = (grad_y * c.xhat).sum(axis=0)
            grads[p + "norm.shift"] = grad_y.sum(axis=0)
            grad_xhat = grad_y * weights[p + "norm.scale"]
            if cache.mode == "train":
                m = c.u.shape[0]
                centered = c.u - c.mu
                grad_var = np.sum(grad_xhat * centered, axis=0) * (-0.5) * c.inv_std**3
                grad_mu = -c.inv_std * grad_xhat.sum(axis=0) + grad_var * (-2.0 / m) * centered.sum(axis=0)
                grad_u = grad_xhat * c.inv_std + grad_var * (2.0 / m) * centered + grad_mu / m
            else:
                grad_u = grad_xhat * c.inv_std
        else:
            grad_u = grad_y
        grads[p + "lin1.w"] = c.agg.T @ grad_u
        grads[p + "lin1.b"] = grad_u.sum(axis=0)
        grad_agg = grad_u @ weights[p + "lin1.w"].T
        grads[p + "eps"] = np.asarray(np.sum(grad_agg * c.x_in))
        eps = float(weights[p + "eps"])
        grad_x = (1.0 + eps) * grad_agg + backend.neighbor_sum(grad_agg, batch.edges, batch.total_nodes)
    return grads


@dataclass
class ContrastiveStep:
    """Result of one paired forward/backward evaluation on a batch."""

    loss: float
    per_graph: np.ndarray
    grads_anchor: dict[str, np.ndarray] | None
    grads_view: dict[str, np.ndarray] | None
    anchor_cache: _ForwardCache
    view_cache: _ForwardCache


def nt_xent_gradients(
    batch: GraphBatch,
    anchor_weights: WeightSet,
    view_weights: WeightSet,
    config: EncoderConfig,
    temperature: float,
    wrt: str = "anchor",
    mode: str = "train",
) -> ContrastiveStep:
    """Contrastive loss of the two encoder views, plus weight gradients.

    ``wrt`` selects which weight set(s) to differentiate: "anchor", "view",
    "both" or "none". The other view is treated as a constant.
    """
    _check_inputs(batch, anchor_weights, config, mode)
    validate_weights(view_weights, config)
    if wrt not in ("anchor", "view", "both", "none"):
        raise ValueError(f"wrt must be anchor/view/both/none, got {wrt!r}")
    z, anchor_cache = _forward_projected(batch, anchor_weights, config, mode)
    z_prime, view_cache = _forward_projected(batch, view_weights, config, mode)
    loss_cfg = LossConfig(temperature=temperature)
    loss, per_graph, grad_z, grad_zp = nt_xent_embedding_grad(z, z_prime, loss_cfg)
    grads_anchor = grads_view = None
    if wrt in ("anchor", "both"):
        grads_anchor = _backward(batch, anchor_weights, config, anchor_cache, grad_z)
    if wrt in ("view", "both"):
        grads_view = _backward(batch, view_weights, config, view_cache, grad_zp)
    for grads in (grads_anchor, grads_view):
        if grads is not None and not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise NumericError("non-finite weight gradient")
    return ContrastiveStep(loss, per_graph, grads_anchor, grads_view, anchor_cache, view_cache)


def loss_gradient(
    batch: GraphBatch,
    anchor_weights: WeightSet,
    view_weights: WeightSet,
    config: EncoderConfig,
    temperature: float,
    wrt: str = "anchor",
) -> dict[str, np.ndarray]:
    """Gradient of the mean contrastive loss w.r.t. the selected weight set.

    Entries the loss does not depend on (the running statistics, in
    particular) come back as exact zeros.
    """
    if wrt not in ("anchor", "view"):
        raise ValueError(f"wrt must be 'anchor' or 'view', got {wrt!r}")
    step = nt_xent_gradients(batch, anchor_weights, view_weights, config, temperature, wrt=wrt)
    return step.grads_anchor if wrt == "anchor" else step.grads_view


def updated_running_stats(
    weights: WeightSet, cache: _ForwardCache, config: EncoderConfig, momentum: float = RUNNING_STAT_MOMENTUM
) -> dict[str, np.ndarray]:
    """Exponential-moving-average update of the normalization statistics.

    Returns the new ``norm.mean``/``norm.var`` tensors computed from the
    batch statistics recorded in a train-mode forward cache; the caller
    decides when to write them back (the trainers apply them once per step).
    """
    if not config.use_normalization or cache.mode != "train":
        return {}
    out = {}
    for k, c in enumerate(cache.layers):
        p = f"layers.{k}."
        var = c.u.var(axis=0)
        out[p + "norm.mean"] = (1.0 - momentum) * weights[p + "norm.mean"] + momentum * c.mu
        out[p + "norm.var"] = (1.0 - momentum) * weights[p + "norm.var"] + momentum * var
    return out
