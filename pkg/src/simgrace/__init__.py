"""Graph contrastive learning without data augmentation.

Two views of each graph come from the same encoder evaluated at its
weights and at a perturbed copy of them, random (SimGRACE-style training)
or adversarial within a norm ball (the AT variant). The package also ships
alignment/uniformity diagnostics, a frozen-embedding evaluation harness
and a CLI for reproducible experiment runs.
"""

__version__ = "0.1.0"

from .at_train import ATConfig, at_pretrain, inner_maximize, sharpness_probe
from .data import (
    Dataset,
    Graph,
    GraphBatch,
    featurize,
    make_batch,
    make_batches,
    parse_tudataset,
    split_batch,
    write_tudataset,
)
from .encoder import encode, loss_gradient, nt_xent_gradients, project
from .evaluation import EvalReport, embed_all, evaluate
from .loss import LossConfig, cosine_sim, nt_xent
from .metrics import MetricConfig, alignment, trajectory_report, uniformity
from .perturb import PerturbationConfig, sample_perturbed
from .train import TrainConfig, pretrain
from .trajectory import EpochRecord, TrainTrajectory, read_trajectory_csv, write_trajectory_csv
from .weights import (
    EncoderConfig,
    WeightSet,
    init_weights,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "ATConfig",
    "Dataset",
    "EncoderConfig",
    "EpochRecord",
    "EvalReport",
    "Graph",
    "GraphBatch",
    "LossConfig",
    "MetricConfig",
    "PerturbationConfig",
    "TrainConfig",
    "TrainTrajectory",
    "WeightSet",
    "alignment",
    "at_pretrain",
    "cosine_sim",
    "embed_all",
    "encode",
    "evaluate",
    "featurize",
    "init_weights",
    "inner_maximize",
    "load_checkpoint",
    "loss_gradient",
    "make_batch",
    "make_batches",
    "nt_xent",
    "nt_xent_gradients",
    "parse_tudataset",
    "pretrain",
    "project",
    "read_trajectory_csv",
    "sample_perturbed",
    "save_checkpoint",
    "sharpness_probe",
    "split_batch",
    "trajectory_report",
    "uniformity",
    "write_trajectory_csv",
    "write_tudataset",
]
