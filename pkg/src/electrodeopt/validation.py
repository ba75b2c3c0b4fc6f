"""Surrogate validation: repeated random splits, fit metrics, confidence
intervals.

The protocol mirrors the dataset validation used for the energy and power
surrogates: an 80/20 random split scored with R2 and a percentage RMSE,
repeated over 75 seeds to bound the variability of R2 with a 95% confidence
interval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cellsim import Dataset
from .gp import GPModel, KernelSpec, gp_fit, predict_batch, rbf

TARGETS = ("energy", "power")
PHASES = ("train", "test")


def split_dataset(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint random partition into train and test subsets.

    Train size is round(n * train_fraction); the remainder goes to test.
    Deterministic for a given seed.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(ds)
    if n < 5:
        raise ValueError(f"dataset with {n} rows is too small to split")
    n_train = int(round(n * train_fraction))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = Dataset(rows=[ds.rows[i] for i in train_idx], provenance=ds.provenance)
    test = Dataset(rows=[ds.rows[i] for i in test_idx], provenance=ds.provenance)
    return train, test


def r2_score(pred: np.ndarray, actual: np.ndarray) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot."""
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if pred.shape != actual.shape or pred.size < 2:
        raise ValueError("pred and actual must be equal-length vectors with >= 2 entries")
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R2 is undefined for a constant actual vector")
    ss_res = float(np.sum((actual - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def rmse_pct(pred: np.ndarray, actual: np.ndarray) -> float:
    """Root mean square error as a percentage of the mean absolute actual value."""
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if pred.shape != actual.shape or pred.size < 1:
        raise ValueError("pred and actual must be equal-length non-empty vectors")
    norm = float(np.mean(np.abs(actual)))
    if norm == 0.0:
        raise ValueError("RMSE%% is undefined when the actual values average to zero")
    return 100.0 * float(np.sqrt(np.mean((pred - actual) ** 2))) / norm


@dataclass(frozen=True)
class SeedRecord:
    """Scores of one resampled split (R2 and RMSE% per target and phase)."""

    seed: int
    r2: dict  # {target: {phase: value}}
    rmse: dict


@dataclass
class ValidationReport:
    """Aggregated validation metrics over resampled splits.

    metrics[target][phase] holds the mean R2 and RMSE% over seeds and the
    95% confidence interval on R2; the full per-seed table is retained.
    """

    n_seeds: int
    metrics: dict
    records: list[SeedRecord] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)
    ci_method: str = "normal"

    def to_dict(self) -> dict:
        return {
            "n_seeds": self.n_seeds,
            "ci_method": self.ci_method,
            "metrics": self.metrics,
            "per_seed": [
                {"seed": rec.seed, "r2": rec.r2, "rmse_pct": rec.rmse}
                for rec in self.records
            ],
            "failures": [{"seed": s, "error": msg} for s, msg in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save_json(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def to_markdown(self) -> str:
        lines = [
            "| Property | RMSE % | R2 | CI95 |",
            "| --- | --- | --- | --- |",
        ]
        label = {"energy": "E", "power": "P"}
        for phase in PHASES:
            lines.append(f"| {phase.capitalize()} process | | | |")
            for target in TARGETS:
                m = self.metrics[target][phase]
                lo, hi = m["r2_ci95"]
                lines.append(
                    f"| {label[target]} | {m['rmse_pct']:.3f} | {m['r2']:.3f} "
                    f"| [{lo:.3f}; {hi:.3f}] |"
                )
        return "\n".join(lines) + "\n"

    def save_markdown(self, path: Path | str) -> None:
        Path(path).write_text(self.to_markdown())


def _ci95(values: np.ndarray, method: str) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if method == "normal":
        half = 1.96 * float(values.std(ddof=0)) / np.sqrt(values.size)
        return mean - half, mean + half
    if method == "bootstrap":
        rng = np.random.default_rng(0)
        boots = np.array(
            [values[rng.integers(0, values.size, values.size)].mean() for _ in range(2000)]
        )
        return float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))
    raise ValueError(f"unknown CI method {method!r}")


def fit_target_models(
    ds: Dataset,
    kernel: KernelSpec | None = None,
    noise_variance: float = 1e-6,
    standardize_outputs: bool = True,
) -> dict[str, GPModel]:
    """Fit one GP per descriptor (energy and power) on the full dataset."""
    kernel = kernel if kernel is not None else rbf(1.0)
    x = ds.inputs()
    return {
        "energy": gp_fit(x, ds.energies(), kernel, noise_variance, standardize_outputs),
        "power": gp_fit(x, ds.powers(), kernel, noise_variance, standardize_outputs),
    }


def ci95_resampling(
    ds: Dataset,
    n_seeds: int = 75,
    train_fraction: float = 0.8,
    kernel: KernelSpec | None = None,
    noise_variance: float = 1e-6,
    standardize_outputs: bool = True,
    base_seed: int = 0,
    ci_method: str = "normal",
) -> ValidationReport:
    """Repeat split/fit/score over ``n_seeds`` resampled splits.

    Individual seed failures are recorded and excluded; more than 20%
    failures aborts. The returned report carries mean R2 and RMSE% per
    target and phase plus the CI95 on R2 over the seed distribution.
    """
    if n_seeds < 2:
        raise ValueError(f"n_seeds must be >= 2, got {n_seeds}")
    kernel = kernel if kernel is not None else rbf(1.0)
    seeds = [int(s) for s in np.random.default_rng(base_seed).integers(0, 2**31 - 1, n_seeds)]

    records: list[SeedRecord] = []
    failures: list[tuple[int, str]] = []
    for seed in seeds:
        try:
            train, test = split_dataset(ds, train_fraction, seed)
            x_tr, x_te = train.inputs(), test.inputs()
            data = {
                "energy": (train.energies(), test.energies()),
                "power": (train.powers(), test.powers()),
            }
            r2: dict = {t: {} for t in TARGETS}
            rmse: dict = {t: {} for t in TARGETS}
            for target in TARGETS:
                y_tr, y_te = data[target]
                model = gp_fit(x_tr, y_tr, kernel, noise_variance, standardize_outputs)
                pred_tr, _ = predict_batch(model, x_tr)
                pred_te, _ = predict_batch(model, x_te)
                r2[target]["train"] = r2_score(pred_tr, y_tr)
                r2[target]["test"] = r2_score(pred_te, y_te)
                rmse[target]["train"] = rmse_pct(pred_tr, y_tr)
                rmse[target]["test"] = rmse_pct(pred_te, y_te)
            records.append(SeedRecord(seed=seed, r2=r2, rmse=rmse))
        except Exception as err:  # noqa: BLE001 - per-seed isolation is the contract
            failures.append((seed, str(err)))

    if len(failures) > 0.2 * n_seeds:
        raise RuntimeError(
            f"{len(failures)} of {n_seeds} validation seeds failed; "
            f"first error: {failures[0][1]}"
        )

    metrics: dict = {}
    for target in TARGETS:
        metrics[target] = {}
        for phase in PHASES:
            r2s = np.array([rec.r2[target][phase] for rec in records])
            rmses = np.array([rec.rmse[target][phase] for rec in records])
            lo, hi = _ci95(r2s, ci_method)
            metrics[target][phase] = {
                "r2": float(r2s.mean()),
                "rmse_pct": float(rmses.mean()),
                "r2_ci95": [lo, hi],
            }
    return ValidationReport(
        n_seeds=n_seeds,
        metrics=metrics,
        records=records,
        failures=failures,
        ci_method=ci_method,
    )
