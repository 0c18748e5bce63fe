"""Contrastive pretraining with randomly perturbed encoder views.

Every step samples a fresh perturbed copy of the current weights, encodes
the batch with both weight sets through the shared projection head, and
descends the contrastive loss with gradients taken through the unperturbed
path only (the perturbed view is a constant). Epoch-level alignment and
uniformity are computed on a probe subset fixed once per run.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, make_batches
from .encoder import nt_xent_gradients, updated_running_stats
from .errors import ConfigError, NumericError
from .loss import LossConfig
from .metrics import MetricConfig, alignment, uniformity
from .perturb import PerturbationConfig, sample_perturbed
from .trajectory import EpochRecord, TrainTrajectory
from .weights import (
    EncoderConfig,
    WeightSet,
    init_weights,
    is_trainable,
    save_checkpoint,
)

log = logging.getLogger(__name__)

OPTIMIZERS = ("sgd", "adaptive_moment")

DEFAULT_PROBE_SIZE = 256


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 128
    learning_rate: float = 0.01
    optimizer: str = "adaptive_moment"
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    seed: int = 0
    probe_size: int = DEFAULT_PROBE_SIZE

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
        if self.probe_size < 2:
            raise ConfigError("probe_size must be >= 2 (uniformity needs a pair)")


class Sgd:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, weights: WeightSet, grads: dict[str, np.ndarray]) -> None:
        for name, g in grads.items():
            if is_trainable(name):
                weights[name] = weights[name] - self.learning_rate * g


class Adam:
    """Adaptive-moment estimation with bias correction."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, weights: WeightSet, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            if not is_trainable(name):
                continue
            m = self.m.get(name, np.zeros_like(g))
            v = self.v.get(name, np.zeros_like(g))
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * np.square(g)
            self.m[name], self.v[name] = m, v
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            weights[name] = weights[name] - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, learning_rate: float):
    return Sgd(learning_rate) if name == "sgd" else Adam(learning_rate)


def spawn_rngs(seed: int) -> dict[str, np.random.Generator]:
    """Fixed layout of child generators shared by both trainers."""
    children = np.random.SeedSequence(seed).spawn(5)
    names = ("init", "batching", "perturbation", "probe", "diagnostics")
    return {name: np.random.default_rng(ss) for name, ss in zip(names, children)}


def choose_probe(dataset: Dataset, probe_size: int, rng: np.random.Generator) -> list[int]:
    size = min(probe_size, len(dataset))
    return sorted(int(i) for i in rng.choice(len(dataset), size=size, replace=False))


def pretrain(
    dataset: Dataset,
    enc_config: EncoderConfig,
    cfg: TrainConfig,
    checkpoint_path=None,
) -> tuple[WeightSet, TrainTrajectory]:
    """Run the pretraining loop; returns final weights and the trajectory.

    Deterministic given (dataset, configs, seed): two runs on one machine
    produce bit-identical weights and trajectory values.
    """
    rngs = spawn_rngs(cfg.seed)
    weights = init_weights(enc_config, rngs["init"])
    probe_idx = choose_probe(dataset, cfg.probe_size, rngs["probe"])
    probe = [dataset.graphs[i] for i in probe_idx]
    optimizer = make_optimizer(cfg.optimizer, cfg.learning_rate)
    trajectory = TrainTrajectory([])

    for epoch in range(1, cfg.epochs + 1):
        tic = time.perf_counter()
        batches = make_batches(dataset, cfg.batch_size, rngs["batching"])
        loss_sum = 0.0
        graph_count = 0
        for b, batch in enumerate(batches):
            perturbed = sample_perturbed(weights, cfg.perturbation, rngs["perturbation"])
            try:
                step = nt_xent_gradients(
                    batch, weights, perturbed, enc_config, cfg.loss.temperature, wrt="anchor"
                )
            except NumericError as exc:
                raise NumericError(f"epoch {epoch} batch {b}: {exc}") from exc
            if not np.isfinite(step.loss):
                raise NumericError(f"epoch {epoch} batch {b}: non-finite loss")
            optimizer.step(weights, step.grads_anchor)
            for name, value in updated_running_stats(weights, step.anchor_cache, enc_config).items():
                weights[name] = value
            loss_sum += step.loss * batch.graph_count
            graph_count += batch.graph_count

        diag_view = sample_perturbed(weights, cfg.perturbation, rngs["diagnostics"])
        align = alignment(probe, weights, diag_view, enc_config, cfg.metric)
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
