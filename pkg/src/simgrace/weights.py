"""Weight collections for the encoder and projection head.

A :class:`WeightSet` is an ordered name-to-array map whose name set and
shapes are fixed by :class:`EncoderConfig`. Per layer ``k`` it holds the
learnable aggregation scalar ``layers.k.eps``, the two affine maps
``lin1``/``lin2`` of the layer MLP and, when normalization is enabled, the
normalization parameters ``norm.scale``/``norm.shift`` plus the (non-
trainable) running statistics ``norm.mean``/``norm.var``. The shared
projection head contributes ``head.lin1`` and ``head.lin2``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError, ShapeError

CHECKPOINT_FORMAT = "simgrace-weights"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    """Architecture of the message-passing encoder and projection head."""

    feature_dim: int
    num_layers: int = 3
    hidden_dim: int = 32
    use_normalization: bool = True

    def __post_init__(self):
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be >= 1")
        if self.num_layers < 1:
            raise ConfigError("num_layers must be >= 1")
        if self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1")


def weight_spec(config: EncoderConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) pairs fixed by the config."""
    spec: list[tuple[str, tuple[int, ...]]] = []
    h = config.hidden_dim
    in_dim = config.feature_dim
    for k in range(config.num_layers):
        p = f"layers.{k}."
        spec.append((p + "eps", ()))
        spec.append((p + "lin1.w", (in_dim, h)))
        spec.append((p + "lin1.b", (h,)))
        if config.use_normalization:
            spec.append((p + "norm.scale", (h,)))
            spec.append((p + "norm.shift", (h,)))
            spec.append((p + "norm.mean", (h,)))
            spec.append((p + "norm.var", (h,)))
        spec.append((p + "lin2.w", (h, h)))
        spec.append((p + "lin2.b", (h,)))
        in_dim = h
    spec.append(("head.lin1.w", (h, h)))
    spec.append(("head.lin1.b", (h,)))
    spec.append(("head.lin2.w", (h, h)))
    spec.append(("head.lin2.b", (h,)))
    return spec


def is_running_stat(name: str) -> bool:
    return name.endswith("norm.mean") or name.endswith("norm.var")


def is_trainable(name: str) -> bool:
    return not is_running_stat(name)


def is_perturbable(name: str) -> bool:
    """Whether random/adversarial view perturbations may touch this tensor.

    The shared projection head, the aggregation scalars and the running
    statistics are off-limits; encoder affine maps and normalization
    scale/shift are fair game.
    """
    if name.startswith("head."):
        return False
    if name.endswith(".eps") or is_running_stat(name):
        return False
    return True


class WeightSet:
    """Ordered, shape-checked name → float64 array collection."""

    def __init__(self, tensors: dict[str, np.ndarray]):
        self._tensors = {name: np.asarray(t, dtype=np.float64) for name, t in tensors.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64)
        if name in self._tensors and value.shape != self._tensors[name].shape:
            raise ShapeError(
                f"{name}: expected shape {self._tensors[name].shape}, got {value.shape}"
            )
        self._tensors[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def copy(self) -> "WeightSet":
        return WeightSet({name: t.copy() for name, t in self._tensors.items()})

    def equals(self, other: "WeightSet") -> bool:
        return self.names() == other.names() and all(
            np.array_equal(self[n], other[n]) for n in self.names()
        )


def validate_weights(weights: WeightSet, config: EncoderConfig) -> None:
    """Check that the name set and shapes match the config exactly."""
    spec = weight_spec(config)
    expected = dict(spec)
    if weights.names() != [name for name, _ in spec]:
        missing = set(expected) - set(weights.names())
        extra = set(weights.names()) - set(expected)
        raise ShapeError(f"weight name set mismatch (missing={sorted(missing)}, extra={sorted(extra)})")
    for name, shape in spec:
        if weights[name].shape != shape:
            raise ShapeError(f"{name}: expected shape {shape}, got {weights[name].shape}")


def init_weights(config: EncoderConfig, rng: np.random.Generator) -> WeightSet:
    """Fan-in-scaled symmetric uniform affine weights; zero biases.

    Normalization starts at identity (scale 1, shift 0) with running mean 0
    and running variance 1; aggregation scalars start at 0.
    """
    tensors: dict[str, np.ndarray] = {}
    for name, shape in weight_spec(config):
        if name.endswith(".w"):
            bound = 1.0 / np.sqrt(shape[0])
            tensors[name] = rng.uniform(-bound, bound, size=shape)
        elif name.endswith("norm.scale") or name.endswith("norm.var"):
            tensors[name] = np.ones(shape)
        else:
            tensors[name] = np.zeros(shape)
    return WeightSet(tensors)


def zero_gradients(config: EncoderConfig) -> dict[str, np.ndarray]:
    return {name: np.zeros(shape) for name, shape in weight_spec(config)}


def perturbable_names(weights: WeightSet) -> list[str]:
    return [name for name in weights.names() if is_perturbable(name)]


def add_delta(weights: WeightSet, delta: dict[str, np.ndarray], scale: float = 1.0) -> WeightSet:
    """New WeightSet with ``scale * delta`` added to the named tensors."""
    out = weights.copy()
    for name, d in delta.items():
        out[name] = out[name] + scale * d
    return out


def flat_l2(delta: dict[str, np.ndarray]) -> float:
    """L2 norm of the concatenation of all tensors in the collection."""
    total = 0.0
    for d in delta.values():
        total += float(np.sum(np.square(d)))
    return float(np.sqrt(total))


def save_checkpoint(path: str | Path, weights: WeightSet, config: EncoderConfig) -> None:
    """Write weights plus config as a self-describing JSON container.

    The header lists (name, shape, dtype) per tensor; payloads are flat
    row-major lists. Plain-text floats round-trip bit-exactly.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(config),
        "tensors": [
            {
                "name": name,
                "shape": list(t.shape),
                "dtype": "float64",
                "data": t.ravel().tolist(),
            }
            for name, t in weights.items()
        ],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[WeightSet, EncoderConfig]:
    """Load a checkpoint, rejecting name/shape/layout mismatches."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint is not valid JSON: {exc}") from None
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"not a {CHECKPOINT_FORMAT} file: {path}")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('version')}")
    try:
        config = EncoderConfig(**payload["config"])
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint config: {exc}") from None
    tensors: dict[str, np.ndarray] = {}
    for entry in payload["tensors"]:
        shape = tuple(entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise CheckpointError(f"{entry['name']}: payload length does not match shape {shape}")
        tensors[entry["name"]] = data.reshape(shape)
    weights = WeightSet(tensors)
    try:
        validate_weights(weights, config)
    except ShapeError as exc:
        raise CheckpointError(str(exc)) from None
    return weights, config
