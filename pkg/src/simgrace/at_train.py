"""Adversarial weight-space pretraining.

Instead of a random perturbed view, each step runs a short projected
gradient ascent on a perturbation of the perturbable encoder tensors,
constrained to an L2 ball of radius epsilon, then takes a plain SGD step on
the weights using the gradient evaluated at the perturbed point (the
unperturbed view is held constant throughout).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, GraphBatch, make_batches
from .encoder import nt_xent_gradients, updated_running_stats
from .errors import ConfigError, NumericError
from .loss import LossConfig
from .metrics import MetricConfig, alignment, uniformity
from .trajectory import EpochRecord, TrainTrajectory
from .train import Sgd, choose_probe, spawn_rngs
from .weights import (
    EncoderConfig,
    WeightSet,
    add_delta,
    flat_l2,
    init_weights,
    perturbable_names,
    save_checkpoint,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ATConfig:
    """Adversarial training uses a longer default schedule than the plain
    loop: the inner maximization slows convergence."""

    epsilon: float = 0.01
    zeta: float = 0.001
    inner_iters: int = 3
    gamma: float = 0.01
    epochs: int = 150
    batch_size: int = 128
    loss: LossConfig = field(default_factory=LossConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    seed: int = 0
    probe_size: int = 256

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.zeta > 0:
            raise ConfigError("zeta must be positive")
        if self.inner_iters < 0:
            raise ConfigError("inner_iters must be >= 0")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.probe_size < 2:
            raise ConfigError("probe_size must be >= 2 (uniformity needs a pair)")


def inner_maximize(
    batch: GraphBatch, weights: WeightSet, enc_config: EncoderConfig, cfg: ATConfig
) -> dict[str, np.ndarray]:
    """Projected gradient ascent on the view perturbation.

    Starts from zero; each of the ``inner_iters`` steps adds
    ``zeta * grad`` of the batch-mean loss evaluated at the perturbed
    weights (unperturbed view constant) and re-projects onto the epsilon
    ball whenever the global L2 norm exceeds it. The returned perturbation
    always satisfies the ball constraint.
    """
    delta = {name: np.zeros_like(weights[name]) for name in perturbable_names(weights)}
    for _ in range(cfg.inner_iters):
        anchor = add_delta(weights, delta)
        step = nt_xent_gradients(batch, anchor, weights, enc_config, cfg.loss.temperature, wrt="anchor")
        for name in delta:
            delta[name] = delta[name] + cfg.zeta * step.grads_anchor[name]
        norm = flat_l2(delta)
        if norm > cfg.epsilon:
            scale = cfg.epsilon / norm
            for name in delta:
                delta[name] = delta[name] * scale
    return delta


def batch_loss(
    batch: GraphBatch,
    anchor_weights: WeightSet,
    view_weights: WeightSet,
    enc_config: EncoderConfig,
    temperature: float,
) -> float:
    """Mean contrastive loss of the two views, gradients skipped."""
    step = nt_xent_gradients(batch, anchor_weights, view_weights, enc_config, temperature, wrt="none")
    return step.loss


def sharpness_probe(
    batch: GraphBatch,
    weights: WeightSet,
    enc_config: EncoderConfig,
    temperature: float,
    radius: float,
    directions: int,
    rng: np.random.Generator,
) -> float:
    """Worst loss increase over random unit directions at the given radius.

    Directions are Gaussian draws over the perturbable tensors, normalized
    to unit global L2 norm. Probes how sharp the loss landscape is around
    the current weights on a fixed batch.
    """
    base = batch_loss(batch, weights, weights, enc_config, temperature)
    worst = -np.inf
    for _ in range(directions):
        direction = {name: rng.standard_normal(weights[name].shape) for name in perturbable_names(weights)}
        norm = flat_l2(direction)
        shifted = add_delta(weights, direction, scale=radius / norm)
        value = batch_loss(batch, shifted, weights, enc_config, temperature)
        worst = max(worst, value - base)
    return float(worst)


def at_pretrain(
    dataset: Dataset,
    enc_config: EncoderConfig,
    cfg: ATConfig,
    checkpoint_path=None,
    delta_norms_out: list[float] | None = None,
) -> tuple[WeightSet, TrainTrajectory]:
    """Adversarial pretraining loop; returns final weights and trajectory.

    Epoch alignment is measured between the weights and their last
    adversarially perturbed view; ``delta_norms_out``, when given, collects
    the post-projection perturbation norm of every batch.
    """
    rngs = spawn_rngs(cfg.seed)
    weights = init_weights(enc_config, rngs["init"])
    probe_idx = choose_probe(dataset, cfg.probe_size, rngs["probe"])
    probe = [dataset.graphs[i] for i in probe_idx]
    optimizer = Sgd(cfg.gamma)
    trajectory = TrainTrajectory([])

    for epoch in range(1, cfg.epochs + 1):
        tic = time.perf_counter()
        batches = make_batches(dataset, cfg.batch_size, rngs["batching"])
        loss_sum = 0.0
        graph_count = 0
        last_delta: dict[str, np.ndarray] = {}
        for b, batch in enumerate(batches):
            delta = inner_maximize(batch, weights, enc_config, cfg)
            if delta_norms_out is not None:
                delta_norms_out.append(flat_l2(delta))
            anchor = add_delta(weights, delta)
            try:
                step = nt_xent_gradients(
                    batch, anchor, weights, enc_config, cfg.loss.temperature, wrt="anchor"
                )
            except NumericError as exc:
                raise NumericError(f"epoch {epoch} batch {b}: {exc}") from exc
            if not np.isfinite(step.loss):
                raise NumericError(f"epoch {epoch} batch {b}: non-finite loss")
            optimizer.step(weights, step.grads_anchor)
            for name, value in updated_running_stats(weights, step.view_cache, enc_config).items():
                weights[name] = value
            loss_sum += step.loss * batch.graph_count
            graph_count += batch.graph_count
            last_delta = delta

        align = alignment(probe, weights, add_delta(weights, last_delta), enc_config, cfg.metric)
        unif = uniformity(probe, weights, enc_config, cfg.metric)
        seconds = time.perf_counter() - tic
        trajectory.append(EpochRecord(epoch, loss_sum / graph_count, align, unif, seconds))
        log.info(
            "epoch %d: loss=%.6f alignment=%.6f uniformity=%.6f (%.2fs)",
            epoch, loss_sum / graph_count, align, unif, seconds,
        )

    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, weights, enc_config)
    return weights, trajectory
