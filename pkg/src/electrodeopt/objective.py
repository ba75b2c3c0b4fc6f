"""Weighted bi-objective cost built on the two trained surrogates.

Predictions for energy and power density are rescaled to [0, 1] against the
training dataset range, then combined into the scalar cost

    C(x) = w_E * (1 - y_E(x))^2 + w_P * (1 - y_P(x))^2

so that maximizing both descriptors means driving the cost toward zero.
Weight pairs come from ranked weighting schemes or are given explicitly per
application scenario.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cellsim import Dataset
from .doe import ParameterBounds
from .gp import GPModel, predict_batch

WEIGHT_METHODS = ("equal", "rank-sum", "rank-exponent", "rank-order-centroid", "explicit")


@dataclass(frozen=True)
class FitnessScaler:
    """Per-target (min, max) over the training dataset, mapping predictions
    linearly to [0, 1] with clipping for out-of-range values."""

    energy_range: tuple[float, float]
    power_range: tuple[float, float]

    def __post_init__(self):
        for name, (lo, hi) in (("energy", self.energy_range), ("power", self.power_range)):
            if not lo < hi:
                raise ValueError(f"{name} range is degenerate: [{lo}, {hi}]")

    def apply(self, value, target: str):
        lo, hi = self._range(target)
        return np.clip((np.asarray(value, dtype=float) - lo) / (hi - lo), 0.0, 1.0)

    def _range(self, target: str) -> tuple[float, float]:
        if target == "energy":
            return self.energy_range
        if target == "power":
            return self.power_range
        raise ValueError(f"unknown target {target!r}")

    def to_dict(self) -> dict:
        return {"energy": list(self.energy_range), "power": list(self.power_range)}

    @staticmethod
    def from_dict(d: dict) -> "FitnessScaler":
        return FitnessScaler(
            energy_range=tuple(d["energy"]), power_range=tuple(d["power"])
        )


def fit_scaler(ds: Dataset) -> FitnessScaler:
    """Extract the per-target min/max from a dataset."""
    e = ds.energies()
    p = ds.powers()
    if len(ds) < 2:
        raise ValueError("dataset too small to define a fitness range")
    return FitnessScaler(
        energy_range=(float(e.min()), float(e.max())),
        power_range=(float(p.min()), float(p.max())),
    )


def apply_scaler(scaler: FitnessScaler, value: float, target: str) -> float:
    return float(scaler.apply(value, target))


@dataclass(frozen=True)
class WeightScheme:
    """A pair of objective weights summing to 1 (energy first, power second)."""

    method: str
    w_energy: float
    w_power: float
    p: int | None = None

    def __post_init__(self):
        if self.method not in WEIGHT_METHODS:
            raise ValueError(f"unknown weight method {self.method!r}")
        if self.w_energy < 0.0 or self.w_power < 0.0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_energy + self.w_power - 1.0) > 1e-12:
            raise ValueError(
                f"weights must sum to 1, got {self.w_energy} + {self.w_power}"
            )

    def as_tuple(self) -> tuple[float, float]:
        return (self.w_energy, self.w_power)


def rank_weights(
    method: str, p: int | None = None, explicit: tuple[float, float] | None = None
) -> WeightScheme:
    """Build the two objective weights from a ranked weighting method.

    rank-exponent: w_i = (n - i + 1)^p / sum_k (n - k + 1)^p with n = 2, so
    p = 0 gives equal weights and p = 1 reduces to rank-sum. The explicit
    method passes a weight pair through unchanged, which is how fractional
    scenario weights like (7/8, 1/8) enter.
    """
    if method == "equal":
        return WeightScheme(method=method, w_energy=0.5, w_power=0.5)
    if method == "rank-sum":
        # w_i = 2 (n + 1 - i) / (n (n + 1)) with n = 2
        return WeightScheme(method=method, w_energy=2.0 / 3.0, w_power=1.0 / 3.0)
    if method == "rank-order-centroid":
        # w_i = (1/n) sum_{k=i..n} 1/k with n = 2
        return WeightScheme(method=method, w_energy=0.75, w_power=0.25)
    if method == "rank-exponent":
        if p is None or p < 0:
            raise ValueError("rank-exponent needs a natural-number exponent p")
        num = np.array([2.0**p, 1.0**p])
        w = num / num.sum()
        return WeightScheme(method=method, w_energy=float(w[0]), w_power=float(w[1]), p=p)
    if method == "explicit":
        if explicit is None:
            raise ValueError("explicit method needs a weight pair")
        return WeightScheme(method=method, w_energy=explicit[0], w_power=explicit[1])
    raise ValueError(f"unknown weight method {method!r}")


@dataclass
class ObjectiveSpec:
    """Everything needed to score a manufacturing condition: the two trained
    surrogates, the fitness scaler from their training data, the weight
    scheme, and the design box."""

    model_energy: GPModel
    model_power: GPModel
    scaler: FitnessScaler
    scheme: WeightScheme
    bounds: ParameterBounds

    def __post_init__(self):
        if self.scaler is None:
            raise ValueError("an ObjectiveSpec requires a fitness scaler")
        if self.model_energy.dimension != self.model_power.dimension:
            raise ValueError("energy and power models have different input dimensions")


def cost_batch(x: np.ndarray, spec: ObjectiveSpec) -> np.ndarray:
    """Scalarized cost for row-stacked manufacturing conditions."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mean_e, _ = predict_batch(spec.model_energy, x)
    mean_p, _ = predict_batch(spec.model_power, x)
    y_e = spec.scaler.apply(mean_e, "energy")
    y_p = spec.scaler.apply(mean_p, "power")
    w_e, w_p = spec.scheme.as_tuple()
    return w_e * (1.0 - y_e) ** 2 + w_p * (1.0 - y_p) ** 2


def cost_function(x, spec: ObjectiveSpec) -> float:
    """Scalarized cost of one manufacturing condition (lower is better)."""
    arr = np.asarray(x.as_array() if hasattr(x, "as_array") else x, dtype=float)
    if not spec.bounds.contains(arr, tol=1e-9):
        raise ValueError(f"point {arr.tolist()} is outside the design bounds")
    return float(cost_batch(arr[None, :], spec)[0])
