"""Gaussian-process regression with a small composable kernel language.

The posterior at a new point x* follows from the joint Gaussian of the
training targets and the new output under the kernel prior:

    mean = k(X, x*)^T (K + s2 I)^-1 y
    var  = k(x*, x*) - k(X, x*)^T (K + s2 I)^-1 k(X, x*)

computed through a Cholesky factorization of the regularized Gram matrix.
Inputs are standardized per dimension and outputs are optionally
standardized before fitting; predictions are mapped back to original units.
No hyperparameter optimization happens by default: the standard kernel is
an RBF with unit length scale on standardized inputs and zero prior mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

KERNEL_KINDS = ("rbf", "constant", "exp-sine-squared", "sum", "product")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel expression tree. Leaf kinds: rbf, constant, exp-sine-squared;
    composite kinds: sum, product."""

    kind: str
    length_scale: float = 1.0
    constant: float = 1.0
    periodicity: float = 1.0
    children: tuple["KernelSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind in ("sum", "product"):
            if len(self.children) < 2:
                raise ValueError(f"{self.kind} kernel needs at least two children")
        else:
            if self.children:
                raise ValueError(f"{self.kind} kernel cannot have children")
        for name in ("length_scale", "constant", "periodicity"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"kernel parameter {name} must be positive")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "rbf":
            d["length_scale"] = self.length_scale
        elif self.kind == "constant":
            d["constant"] = self.constant
        elif self.kind == "exp-sine-squared":
            d["length_scale"] = self.length_scale
            d["periodicity"] = self.periodicity
        else:
            d["children"] = [c.to_dict() for c in self.children]
        return d

    @staticmethod
    def from_dict(d: dict) -> "KernelSpec":
        kind = d["kind"]
        if kind in ("sum", "product"):
            return KernelSpec(
                kind=kind,
                children=tuple(KernelSpec.from_dict(c) for c in d["children"]),
            )
        return KernelSpec(
            kind=kind,
            length_scale=d.get("length_scale", 1.0),
            constant=d.get("constant", 1.0),
            periodicity=d.get("periodicity", 1.0),
        )


def rbf(length_scale: float = 1.0) -> KernelSpec:
    return KernelSpec(kind="rbf", length_scale=length_scale)


def constant(value: float) -> KernelSpec:
    return KernelSpec(kind="constant", constant=value)


def exp_sine_squared(length_scale: float = 1.0, periodicity: float = 1.0) -> KernelSpec:
    return KernelSpec(kind="exp-sine-squared", length_scale=length_scale, periodicity=periodicity)


def kernel_sum(*children: KernelSpec) -> KernelSpec:
    return KernelSpec(kind="sum", children=tuple(children))


def kernel_product(*children: KernelSpec) -> KernelSpec:
    return KernelSpec(kind="product", children=tuple(children))


def _sq_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Clamp tiny negatives from cancellation so diagonals are exact zeros.
    d2 = (
        np.sum(x**2, axis=1)[:, None]
        + np.sum(y**2, axis=1)[None, :]
        - 2.0 * (x @ y.T)
    )
    return np.maximum(d2, 0.0)


def kernel_matrix(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Covariance matrix k(x_i, y_j) for row-stacked point sets."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"point dimensions differ: {x.shape[1]} vs {y.shape[1]}")
    if spec.kind == "rbf":
        return np.exp(-_sq_distances(x, y) / (2.0 * spec.length_scale**2))
    if spec.kind == "constant":
        return np.full((x.shape[0], y.shape[0]), spec.constant)
    if spec.kind == "exp-sine-squared":
        dist = np.sqrt(_sq_distances(x, y))
        s = np.sin(np.pi * dist / spec.periodicity)
        return np.exp(-2.0 * s**2 / spec.length_scale**2)
    parts = [kernel_matrix(c, x, y) for c in spec.children]
    out = parts[0]
    for p in parts[1:]:
        out = out + p if spec.kind == "sum" else out * p
    return out


def kernel_eval(spec: KernelSpec, x, x_other) -> float:
    """Scalar kernel value k(x, x')."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_other = np.atleast_1d(np.asarray(x_other, dtype=float))
    if x.shape != x_other.shape:
        raise ValueError(f"point dimensions differ: {x.shape} vs {x_other.shape}")
    return float(kernel_matrix(spec, x[None, :], x_other[None, :])[0, 0])


@dataclass(frozen=True)
class Posterior:
    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0.0:
            raise ValueError("posterior std cannot be negative")


@dataclass
class GPModel:
    """A trained GP: kernel, noise level, standardized training data, the
    lower Cholesky factor of the regularized Gram matrix, and the weight
    vector (K + s2 I)^-1 y in standardized units."""

    kernel: KernelSpec
    noise_variance: float
    x_train: np.ndarray  # standardized, shape (n, d)
    y_train: np.ndarray  # standardized, shape (n,)
    chol: np.ndarray  # lower triangular, shape (n, n)
    weights: np.ndarray  # shape (n,)
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    jitter: float = 0.0

    @property
    def n_train(self) -> int:
        return self.x_train.shape[0]

    @property
    def dimension(self) -> int:
        return self.x_train.shape[1]

    @staticmethod
    def prior(kernel: KernelSpec, dimension: int) -> "GPModel":
        """Data-free model: zero mean, prior variance k(x, x)."""
        return GPModel(
            kernel=kernel,
            noise_variance=0.0,
            x_train=np.zeros((0, dimension)),
            y_train=np.zeros(0),
            chol=np.zeros((0, 0)),
            weights=np.zeros(0),
            x_mean=np.zeros(dimension),
            x_scale=np.ones(dimension),
            y_mean=0.0,
            y_scale=1.0,
        )

    def to_json(self) -> str:
        doc = {
            "kernel": self.kernel.to_dict(),
            "noise_variance": self.noise_variance,
            "jitter": self.jitter,
            "x_train": self.x_train.tolist(),
            "y_train": self.y_train.tolist(),
            "chol": self.chol.tolist(),
            "weights": self.weights.tolist(),
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "GPModel":
        doc = json.loads(text)
        dim = len(doc["x_mean"])
        return GPModel(
            kernel=KernelSpec.from_dict(doc["kernel"]),
            noise_variance=doc["noise_variance"],
            jitter=doc.get("jitter", 0.0),
            x_train=np.array(doc["x_train"], dtype=float).reshape(-1, dim),
            y_train=np.array(doc["y_train"], dtype=float),
            chol=np.array(doc["chol"], dtype=float),
            weights=np.array(doc["weights"], dtype=float),
            x_mean=np.array(doc["x_mean"], dtype=float),
            x_scale=np.array(doc["x_scale"], dtype=float),
            y_mean=doc["y_mean"],
            y_scale=doc["y_scale"],
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @staticmethod
    def load(path: Path | str) -> "GPModel":
        return GPModel.from_json(Path(path).read_text())


def _standardize(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    scale = values.std(axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    return (values - mean) / scale, mean, scale


def gp_fit(
    x: np.ndarray,
    y: np.ndarray,
    kernel: KernelSpec | None = None,
    noise_variance: float = 1e-6,
    standardize_outputs: bool = True,
) -> GPModel:
    """Fit a GP to (x, y). Factorizes K + s2 I and solves for the weights.

    If the factorization fails (duplicate rows at zero noise), a small jitter
    is added to the diagonal and escalated a few times before giving up.
    """
    kernel = kernel if kernel is not None else rbf(1.0)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]} values")
    if x.shape[0] < 1:
        raise ValueError("at least one training point is required")
    if noise_variance < 0.0:
        raise ValueError("noise variance cannot be negative")

    xs, x_mean, x_scale = _standardize(x)
    if standardize_outputs:
        ys, y_mean, y_scale = _standardize(y[:, None])
        ys = ys.ravel()
        y_mean = float(y_mean[0])
        y_scale = float(y_scale[0])
    else:
        ys, y_mean, y_scale = y, 0.0, 1.0

    gram = kernel_matrix(kernel, xs, xs)
    n = gram.shape[0]
    jitter = 0.0
    last_err: Exception | None = None
    for attempt in range(6):
        try:
            c, low = cho_factor(
                gram + (noise_variance + jitter) * np.eye(n), lower=True, check_finite=False
            )
            break
        except np.linalg.LinAlgError as err:
            last_err = err
            jitter = 1e-10 if jitter == 0.0 else jitter * 100.0
    else:
        raise np.linalg.LinAlgError(
            f"Gram matrix factorization failed even with jitter {jitter:.1e}: {last_err}"
        )

    weights = cho_solve((c, low), ys, check_finite=False)
    return GPModel(
        kernel=kernel,
        noise_variance=noise_variance,
        x_train=xs,
        y_train=ys,
        chol=np.tril(c),
        weights=weights,
        x_mean=x_mean,
        x_scale=x_scale,
        y_mean=y_mean,
        y_scale=y_scale,
        jitter=jitter,
    )


def predict_batch(model: GPModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and standard deviations at row-stacked query points,
    in original output units."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.dimension and model.n_train > 0:
        raise ValueError(
            f"query dimension {x.shape[1]} does not match training dimension {model.dimension}"
        )
    if model.n_train == 0:
        prior_var = np.array([kernel_eval(model.kernel, row, row) for row in x])
        return np.zeros(x.shape[0]), np.sqrt(np.maximum(prior_var, 0.0))

    xs = (x - model.x_mean) / model.x_scale
    k_star = kernel_matrix(model.kernel, model.x_train, xs)  # (n, m)
    mean_s = k_star.T @ model.weights
    v = solve_triangular(model.chol, k_star, lower=True, check_finite=False)
    prior = np.array([kernel_eval(model.kernel, row, row) for row in xs])
    var_s = prior - np.sum(v**2, axis=0)
    std_s = np.sqrt(np.maximum(var_s, 0.0))
    return model.y_mean + model.y_scale * mean_s, model.y_scale * std_s


def gp_predict(model: GPModel, x_star) -> Posterior:
    """Posterior distribution of the output at a single query point."""
    mean, std = predict_batch(model, np.atleast_1d(np.asarray(x_star, dtype=float))[None, :])
    return Posterior(mean=float(mean[0]), std=float(std[0]))
