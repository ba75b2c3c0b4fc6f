"""Bayesian minimization of the scalarized cost over the design box.

The loop keeps a GP surrogate of the cost over evaluated conditions,
proposes the next condition by scoring a quasi-random candidate set with an
acquisition function (lower confidence bound, negative expected improvement,
or negative probability of improvement, drawn probabilistically per
iteration), and stops once the best cost falls under a threshold or the
iteration budget runs out. Everything is seeded, so a run is reproducible
end to end.

Internally the search runs in the unit cube; candidate slices advance along
a single Sobol stream so later iterations probe on an ever finer grid.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .doe import ParameterBounds, SobolEngine, latin_hypercube, scale_array, to_unit
from .gp import GPModel, gp_fit, predict_batch, rbf
from .objective import ObjectiveSpec, cost_batch

ACQUISITION_KINDS = (
    "lcb",
    "neg-expected-improvement",
    "neg-probability-of-improvement",
    "probabilistic-mix",
)
_MIX_ORDER = ("lcb", "neg-expected-improvement", "neg-probability-of-improvement")


@dataclass(frozen=True)
class AcquisitionSpec:
    """Acquisition policy: a fixed kind, or a probabilistic mix over the
    three standard kinds with the given probabilities."""

    kind: str = "probabilistic-mix"
    kappa: float = 2.0
    mix: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def __post_init__(self):
        if self.kind not in ACQUISITION_KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if len(self.mix) != 3 or any(m < 0.0 for m in self.mix):
            raise ValueError("mix must be three non-negative probabilities")
        total = sum(self.mix)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mix probabilities must sum to 1, got {total}")


def acquisition_score(
    kind: str,
    mean: np.ndarray,
    std: np.ndarray,
    f_best: float,
    kappa: float = 2.0,
) -> np.ndarray:
    """Score posterior(s) under one acquisition kind; lower is better.

    Zero-std posteriors are handled by the deterministic limits: expected
    improvement becomes max(f_best - mean, 0) and the probability of
    improvement becomes the indicator of mean < f_best.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if kind == "lcb":
        return mean - kappa * std
    positive = std > 0.0
    z = np.where(positive, (f_best - mean) / np.where(positive, std, 1.0), 0.0)
    if kind == "neg-expected-improvement":
        phi = np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)
        ei = np.where(
            positive,
            (f_best - mean) * ndtr(z) + std * phi,
            np.maximum(f_best - mean, 0.0),
        )
        return -ei
    if kind == "neg-probability-of-improvement":
        pi = np.where(positive, ndtr(z), (mean < f_best).astype(float))
        return -pi
    raise ValueError(f"unknown acquisition kind {kind!r}")


@dataclass
class BOState:
    """Evaluated conditions (unit-cube coordinates), their costs, the cost
    surrogate, and the incumbent."""

    x_unit: np.ndarray  # (n, d)
    values: np.ndarray  # (n,)
    surrogate: GPModel | None
    best_index: int
    iteration: int

    @property
    def best_value(self) -> float:
        return float(self.values[self.best_index])

    @property
    def best_x_unit(self) -> np.ndarray:
        return self.x_unit[self.best_index]


def _fit_surrogate(x_unit: np.ndarray, values: np.ndarray, noise_variance: float) -> GPModel:
    finite = np.isfinite(values)
    if finite.sum() < 2:
        raise RuntimeError("cannot fit a cost surrogate on fewer than 2 finite evaluations")
    return gp_fit(x_unit[finite], values[finite], rbf(1.0), noise_variance)


def propose_next(
    state: BOState,
    acq: AcquisitionSpec,
    candidate_count: int,
    engine: SobolEngine,
    rng: np.random.Generator,
) -> tuple[np.ndarray, str]:
    """Pick the next unit-cube point: draw an acquisition kind (for the
    probabilistic mix), score the next Sobol candidate slice, and return the
    best-scoring candidate that was not evaluated before."""
    if state.surrogate is None:
        raise RuntimeError("propose_next requires a fitted surrogate")
    kind = acq.kind
    if kind == "probabilistic-mix":
        kind = _MIX_ORDER[int(rng.choice(3, p=np.asarray(acq.mix, dtype=float)))]

    for attempt in range(2):
        if attempt == 0:
            candidates = engine.draw(candidate_count)
        else:
            candidates = rng.random((candidate_count, state.x_unit.shape[1]))
        mean, std = predict_batch(state.surrogate, candidates)
        scores = acquisition_score(kind, mean, std, state.best_value, acq.kappa)
        for idx in np.argsort(scores, kind="stable"):
            cand = candidates[idx]
            if not np.any(np.all(np.abs(state.x_unit - cand) < 1e-12, axis=1)):
                return cand, kind
    raise RuntimeError("all proposal candidates duplicate already-evaluated points")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    x: tuple[float, ...]
    value: float
    acquisition: str
    best_value: float


@dataclass
class BOResult:
    """Optimizer outcome: the best condition found, its cost, the full
    evaluation trace, and why the loop stopped."""

    x_best: np.ndarray
    value_best: float
    trace: list[TraceEntry]
    converged: str  # "threshold" or "budget"
    seed: int
    bounds: ParameterBounds

    def best_named(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.bounds.names, self.x_best)}

    def to_dict(self) -> dict:
        return {
            "x_best": self.best_named(),
            "value_best": self.value_best,
            "converged": self.converged,
            "seed": self.seed,
            "bounds": self.bounds.to_dict(),
            "n_evaluations": len(self.trace),
        }

    def write_json(self, path: Path | str, extra: dict | None = None) -> None:
        doc = self.to_dict()
        if extra:
            doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    def write_trace_csv(self, path: Path | str) -> None:
        names = list(self.bounds.names)
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", *names, "cost", "acquisition", "best_cost"])
            for entry in self.trace:
                writer.writerow(
                    [
                        entry.iteration,
                        *[repr(v) for v in entry.x],
                        repr(entry.value),
                        entry.acquisition,
                        repr(entry.best_value),
                    ]
                )


def minimize(
    func: Callable[[np.ndarray], float],
    bounds: ParameterBounds,
    acq: AcquisitionSpec | None = None,
    budget: int = 300,
    n_init: int = 10,
    threshold: float = 1e-4,
    seed: int = 0,
    candidate_count: int = 4096,
    noise_variance: float = 1e-6,
) -> BOResult:
    """Minimize a black-box function over the bounds box.

    ``func`` receives a point in original (bounded) coordinates. Evaluation
    failures are recorded as +inf and skipped by the surrogate. The loop runs
    ``budget`` iterations after the ``n_init`` Latin hypercube evaluations,
    stopping early when the incumbent cost reaches the threshold.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if n_init < 2:
        raise ValueError(f"n_init must be >= 2, got {n_init}")
    acq = acq if acq is not None else AcquisitionSpec()
    d = bounds.dimension
    seed_seq = np.random.SeedSequence(seed)
    lhs_seed, mix_seed = seed_seq.spawn(2)
    rng = np.random.default_rng(mix_seed)

    def evaluate(unit_point: np.ndarray) -> float:
        raw = scale_array(unit_point[None, :], bounds)[0]
        try:
            value = float(func(raw))
        except Exception:  # noqa: BLE001 - failures become +inf by contract
            return np.inf
        return value if np.isfinite(value) else np.inf

    x_unit = latin_hypercube(n_init, d, int(lhs_seed.generate_state(1)[0]))
    values = np.array([evaluate(x) for x in x_unit])

    trace: list[TraceEntry] = []
    best_idx = int(np.argmin(values))
    for i in range(n_init):
        running_best = float(np.min(values[: i + 1]))
        raw = scale_array(x_unit[i][None, :], bounds)[0]
        trace.append(
            TraceEntry(
                iteration=0,
                x=tuple(float(v) for v in raw),
                value=float(values[i]),
                acquisition="init",
                best_value=running_best,
            )
        )

    engine = SobolEngine(d, skip=1)
    converged = "budget"
    if float(values[best_idx]) <= threshold:
        converged = "threshold"
    else:
        for iteration in range(1, budget + 1):
            surrogate = _fit_surrogate(x_unit, values, noise_variance)
            state = BOState(
                x_unit=x_unit,
                values=values,
                surrogate=surrogate,
                best_index=best_idx,
                iteration=iteration,
            )
            cand, kind = propose_next(state, acq, candidate_count, engine, rng)
            value = evaluate(cand)
            x_unit = np.vstack([x_unit, cand])
            values = np.append(values, value)
            if value < values[best_idx]:
                best_idx = len(values) - 1
            raw = scale_array(cand[None, :], bounds)[0]
            trace.append(
                TraceEntry(
                    iteration=iteration,
                    x=tuple(float(v) for v in raw),
                    value=float(value),
                    acquisition=kind,
                    best_value=float(values[best_idx]),
                )
            )
            if float(values[best_idx]) <= threshold:
                converged = "threshold"
                break

    x_best = scale_array(x_unit[best_idx][None, :], bounds)[0]
    return BOResult(
        x_best=x_best,
        value_best=float(values[best_idx]),
        trace=trace,
        converged=converged,
        seed=seed,
        bounds=bounds,
    )


def optimize(
    problem: ObjectiveSpec,
    acq: AcquisitionSpec | None = None,
    budget: int = 300,
    n_init: int = 10,
    threshold: float = 1e-4,
    seed: int = 0,
    candidate_count: int = 4096,
) -> BOResult:
    """Minimize the scalarized bi-objective cost over the problem's bounds."""

    def func(x: np.ndarray) -> float:
        return float(cost_batch(x[None, :], problem)[0])

    return minimize(
        func,
        problem.bounds,
        acq=acq,
        budget=budget,
        n_init=n_init,
        threshold=threshold,
        seed=seed,
        candidate_count=candidate_count,
    )
