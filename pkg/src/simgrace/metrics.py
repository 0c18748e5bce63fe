"""Alignment/uniformity diagnostics and the trajectory report artifact.

Alignment is the mean distance (to the power alpha) between the two
encoders' embeddings of the same graph; uniformity is the log of the
average pairwise Gaussian potential over distinct unordered embedding
pairs of one encoder. Lower is better for both. Both metrics run the
encoder in eval mode on pre-projection embeddings, L2-normalized by
default, and never mutate weights or running statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Graph, make_batch
from .encoder import encode
from .errors import ConfigError, DegenerateEmbeddingError
from .trajectory import TrainTrajectory, write_trajectory_csv
from .weights import EncoderConfig, WeightSet


@dataclass(frozen=True)
class MetricConfig:
    alpha: float = 2.0
    t: float = 2.0
    normalize_embeddings: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not self.t > 0:
            raise ConfigError("t must be positive")


def _maybe_normalize(h: np.ndarray, cfg: MetricConfig) -> np.ndarray:
    if not cfg.normalize_embeddings:
        return h
    norms = np.linalg.norm(h, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateEmbeddingError("cannot normalize a zero embedding")
    return h / norms[:, None]


def alignment_from_embeddings(h: np.ndarray, h_prime: np.ndarray, cfg: MetricConfig = MetricConfig()) -> float:
    h = _maybe_normalize(np.asarray(h, dtype=np.float64), cfg)
    h_prime = _maybe_normalize(np.asarray(h_prime, dtype=np.float64), cfg)
    d = np.linalg.norm(h - h_prime, axis=1)
    return float(np.mean(d**cfg.alpha))


def uniformity_from_embeddings(h: np.ndarray, cfg: MetricConfig = MetricConfig()) -> float:
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] < 2:
        raise ConfigError("uniformity needs at least 2 embeddings")
    h = _maybe_normalize(h, cfg)
    sq_norms = np.sum(h * h, axis=1)
    sq_dist = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (h @ h.T)
    iu = np.triu_indices(h.shape[0], k=1)
    potentials = np.exp(-cfg.t * np.maximum(sq_dist[iu], 0.0))
    return float(np.log(np.mean(potentials)))


def alignment(
    sample: Sequence[Graph],
    weights: WeightSet,
    perturbed: WeightSet,
    enc_config: EncoderConfig,
    cfg: MetricConfig = MetricConfig(),
) -> float:
    """Mean shift of the sample's embeddings under the perturbed encoder."""
    if not sample:
        raise ConfigError("alignment needs a non-empty sample")
    batch = make_batch(sample)
    h = encode(batch, weights, enc_config, mode="eval")
    h_prime = encode(batch, perturbed, enc_config, mode="eval")
    return alignment_from_embeddings(h, h_prime, cfg)


def uniformity(
    sample: Sequence[Graph],
    weights: WeightSet,
    enc_config: EncoderConfig,
    cfg: MetricConfig = MetricConfig(),
) -> float:
    """Log average pairwise Gaussian potential of the sample's embeddings."""
    if len(sample) < 2:
        raise ConfigError("uniformity needs a sample of at least 2 graphs")
    batch = make_batch(sample)
    h = encode(batch, weights, enc_config, mode="eval")
    return uniformity_from_embeddings(h, cfg)


def trajectory_report(traj: TrainTrajectory, out_csv: str | Path) -> list[Path]:
    """Write the trajectory CSV and, best-effort, an annotated scatter plot.

    The plot puts uniformity on the x-axis and alignment on the y-axis with
    each point labeled by its epoch index. The CSV is the contract; plotting
    failures only emit a warning.
    """
    if not traj.records:
        raise ConfigError("cannot report an empty trajectory")
    out_csv = Path(out_csv)
    written = [write_trajectory_csv(traj, out_csv)]
    try:
        import matplotlib

        matplotlib.use("Agg", force=False)
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4))
        xs = traj.column("uniformity")
        ys = traj.column("alignment")
        ax.plot(xs, ys, "-o", color="tab:blue", markersize=4)
        for r in traj.records:
            ax.annotate(str(r.epoch), (r.uniformity, r.alignment), fontsize=7,
                        textcoords="offset points", xytext=(4, 4))
        ax.set_xlabel("uniformity (lower is better)")
        ax.set_ylabel("alignment (lower is better)")
        ax.set_title("alignment-uniformity trajectory")
        fig.tight_layout()
        plot_path = out_csv.with_suffix(".png")
        fig.savefig(plot_path, dpi=150)
        plt.close(fig)
        written.append(plot_path)
    except Exception as exc:  # plotting is best-effort
        import warnings

        warnings.warn(f"trajectory plot not written: {exc}", stacklevel=2)
    return written
