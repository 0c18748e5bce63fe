"""Random weight-space perturbation producing the second encoder view.

Each perturbable tensor t gets ``t + eta * noise`` with ``noise`` drawn
i.i.d. Gaussian with standard deviation ``sigma(t)``; by default sigma is
the empirical standard deviation of t's own entries, which keeps eta
dimensionless across layers. The shared projection head, the aggregation
scalars and the running statistics are never perturbed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .weights import WeightSet, perturbable_names

SIGMA_RULES = ("per_tensor_std", "fixed")


@dataclass(frozen=True)
class PerturbationConfig:
    eta: float = 1.0
    sigma_rule: str = "per_tensor_std"
    sigma_value: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.eta < 0:
            raise ConfigError("eta must be non-negative")
        if self.sigma_rule not in SIGMA_RULES:
            raise ConfigError(f"sigma_rule must be one of {SIGMA_RULES}, got {self.sigma_rule!r}")
        if self.sigma_rule == "fixed":
            if self.sigma_value is None or self.sigma_value < 0:
                raise ConfigError("fixed sigma_rule needs a non-negative sigma_value")

    @classmethod
    def parse_rule(cls, text: str, eta: float, seed: int = 0) -> "PerturbationConfig":
        """Build a config from the CLI spelling: per-tensor-std or fixed:<v>."""
        text = text.strip()
        if text == "per-tensor-std":
            return cls(eta=eta, sigma_rule="per_tensor_std", seed=seed)
        if text.startswith("fixed:"):
            try:
                value = float(text[len("fixed:"):])
            except ValueError:
                raise ConfigError(f"cannot parse sigma value in {text!r}") from None
            return cls(eta=eta, sigma_rule="fixed", sigma_value=value, seed=seed)
        raise ConfigError(f"cannot parse sigma rule {text!r} (expected per-tensor-std or fixed:<v>)")


def sample_perturbed(
    weights: WeightSet, config: PerturbationConfig, rng: np.random.Generator | None = None
) -> WeightSet:
    """Fresh perturbed copy of ``weights``; the input is left untouched.

    With ``eta == 0`` the result is bit-identical to the input. A tensor
    whose empirical standard deviation is zero (all entries equal) is left
    unperturbed under the per_tensor_std rule.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    out = weights.copy()
    if config.eta == 0.0:
        return out
    for name in perturbable_names(weights):
        t = weights[name]
        sigma = float(t.std()) if config.sigma_rule == "per_tensor_std" else float(config.sigma_value)
        if sigma == 0.0:
            continue
        out[name] = t + config.eta * sigma * rng.standard_normal(t.shape)
    return out
