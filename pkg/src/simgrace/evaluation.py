"""Downstream evaluation: frozen embeddings into a linear classifier.

Repeated stratified k-fold cross-validation; per fold the embeddings are
standardized with training-fold statistics and a max-margin linear
classifier is fit with its regularization strength grid-searched by inner
validation on the training fold only. Accuracies are percentages; the
reported std is taken across the repeat means.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.svm import LinearSVC

from .data import Dataset, make_batch
from .encoder import encode, project
from .errors import CheckpointError, ConfigError
from .weights import EncoderConfig, WeightSet

C_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
INNER_FOLDS = 3
EMBED_CHUNK = 256


@dataclass
class EvalReport:
    fold_accuracies: np.ndarray  # [repeats, folds], percent
    mean_accuracy: float
    std_accuracy: float

    @classmethod
    def from_folds(cls, fold_accuracies: np.ndarray) -> "EvalReport":
        repeat_means = fold_accuracies.mean(axis=1)
        return cls(
            fold_accuracies=fold_accuracies,
            mean_accuracy=float(fold_accuracies.mean()),
            std_accuracy=float(repeat_means.std()),
        )

    def to_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "fold_accuracies": self.fold_accuracies.tolist(),
        }


def embed_all(
    dataset: Dataset, weights: WeightSet, enc_config: EncoderConfig, space: str = "h"
) -> np.ndarray:
    """Eval-mode embeddings for every graph, in dataset order.

    ``space`` selects the pre-projection encoder output ("h", the default)
    or the projected output ("z").
    """
    if space not in ("h", "z"):
        raise ConfigError(f"space must be 'h' or 'z', got {space!r}")
    if dataset.feature_dim != enc_config.feature_dim:
        raise CheckpointError(
            f"checkpoint expects feature_dim {enc_config.feature_dim}, dataset has {dataset.feature_dim}"
        )
    rows = []
    for start in range(0, len(dataset), EMBED_CHUNK):
        graphs = dataset.graphs[start : start + EMBED_CHUNK]
        h = encode(make_batch(graphs), weights, enc_config, mode="eval")
        rows.append(project(h, weights) if space == "z" else h)
    return np.concatenate(rows, axis=0)


def stratified_fold_ids(labels: np.ndarray, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Assign each sample a fold id in [0, folds), stratified by class.

    Each class's indices are shuffled and dealt round-robin, with the
    starting fold rotating as classes are processed so fold sizes stay
    balanced. Classes smaller than ``folds`` simply cover fewer folds; no
    error is raised.
    """
    labels = np.asarray(labels)
    fold_ids = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        for j, sample in enumerate(idx):
            fold_ids[sample] = (offset + j) % folds
        offset += len(idx)
    return fold_ids


def _standardize(train_x: np.ndarray, test_x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = train_x.mean(axis=0)
    std = train_x.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return (train_x - mean) / std, (test_x - mean) / std


def _fit_fold(
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
    rng: np.random.Generator,
) -> float:
    """Accuracy (%) of one outer fold; all fitting uses training rows only.

    The grid deliberately probes extreme regularization values, where the
    solver may stop at its iteration cap; inner validation discards those
    settings, so the convergence warnings are noise here.
    """
    train_x, test_x = _standardize(train_x, test_x)
    inner = stratified_fold_ids(train_y, INNER_FOLDS, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        scores = []
        for c in C_GRID:
            correct = 0
            for f in range(INNER_FOLDS):
                mask = inner == f
                if not mask.any() or mask.all() or len(np.unique(train_y[~mask])) < 2:
                    continue
                clf = LinearSVC(C=c, dual=False, max_iter=10_000, random_state=0)
                clf.fit(train_x[~mask], train_y[~mask])
                correct += int((clf.predict(train_x[mask]) == train_y[mask]).sum())
            scores.append(correct)
        best_c = C_GRID[int(np.argmax(scores))]
        clf = LinearSVC(C=best_c, dual=False, max_iter=10_000, random_state=0)
        clf.fit(train_x, train_y)
    return 100.0 * float((clf.predict(test_x) == test_y).mean())


def evaluate(
    embeddings: np.ndarray,
    labels: Sequence[int],
    folds: int = 10,
    repeats: int = 5,
    rng: np.random.Generator | None = None,
) -> EvalReport:
    """Repeated stratified k-fold linear classification of the embeddings."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if embeddings.shape[0] != len(labels):
        raise ConfigError("embeddings and labels disagree on sample count")
    if len(labels) < folds:
        raise ConfigError(f"{folds}-fold evaluation needs at least {folds} samples")
    if len(np.unique(labels)) < 2:
        raise ConfigError("evaluation needs at least 2 classes")
    if rng is None:
        rng = np.random.default_rng(0)

    fold_acc = np.zeros((repeats, folds))
    for r in range(repeats):
        fold_ids = stratified_fold_ids(labels, folds, rng)
        for f in range(folds):
            test_mask = fold_ids == f
            fold_acc[r, f] = _fit_fold(
                embeddings[~test_mask], labels[~test_mask],
                embeddings[test_mask], labels[test_mask],
                rng,
            )
    return EvalReport.from_folds(fold_acc)
