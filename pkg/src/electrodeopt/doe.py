"""Design-of-experiments generators for the manufacturing parameter space.

Provides a quasi-random Sobol sequence (Joe-Kuo direction numbers, up to 16
dimensions), the Saltelli block expansion used to build the simulation
dataset, and Latin hypercube sampling used to initialize the optimizer.
All generators are deterministic: identical arguments always reproduce the
same points.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .electrode import (
    InfeasiblePointError,
    ManufacturingParams,
    PropertyModelConfig,
    properties_from_manufacturing,
)

MAX_SOBOL_DIM = 16

# Primitive polynomial (binary encoding) and initial direction numbers for
# dimensions 2..16, from the published Joe-Kuo "new-joe-kuo-6" table.
# Dimension 1 is the plain van der Corput sequence in base 2.
_JOE_KUO: dict[int, tuple[int, tuple[int, ...]]] = {
    2: (3, (1,)),
    3: (7, (1, 3)),
    4: (11, (1, 3, 1)),
    5: (13, (1, 1, 1)),
    6: (19, (1, 1, 3, 3)),
    7: (25, (1, 3, 5, 13)),
    8: (37, (1, 1, 5, 5, 17)),
    9: (41, (1, 1, 5, 5, 5)),
    10: (47, (1, 1, 7, 11, 19)),
    11: (55, (1, 1, 5, 1, 1)),
    12: (59, (1, 1, 1, 3, 11)),
    13: (61, (1, 3, 5, 5, 31)),
    14: (67, (1, 3, 3, 9, 7, 49)),
    15: (91, (1, 1, 1, 15, 21, 21)),
    16: (97, (1, 3, 1, 13, 27, 49)),
}

_MAXBITS = 32
_SCALE = float(2**_MAXBITS)


def _direction_integers(dim: int) -> np.ndarray:
    """Direction integers V_1..V_maxbits for one coordinate, scaled by 2^32."""
    v = np.zeros(_MAXBITS, dtype=np.uint64)
    if dim == 1:
        for k in range(1, _MAXBITS + 1):
            v[k - 1] = 1 << (_MAXBITS - k)
        return v
    poly, m_init = _JOE_KUO[dim]
    s = poly.bit_length() - 1
    a = (poly - (1 << s) - 1) >> 1
    for k in range(1, s + 1):
        v[k - 1] = m_init[k - 1] << (_MAXBITS - k)
    for k in range(s + 1, _MAXBITS + 1):
        prev = int(v[k - s - 1])
        vk = prev ^ (prev >> s)
        for j in range(1, s):
            if (a >> (s - 1 - j)) & 1:
                vk ^= int(v[k - j - 1])
        v[k - 1] = vk
    return v


class SobolEngine:
    """Incremental Sobol generator (Gray-code order, first point all zeros).

    The engine keeps its position in the sequence so consecutive ``draw``
    calls return consecutive slices. ``sobol_sequence`` wraps it for one-shot
    use.
    """

    def __init__(self, dimension: int, skip: int = 0):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        if dimension > MAX_SOBOL_DIM:
            raise ValueError(
                f"dimension {dimension} unsupported: direction numbers are "
                f"embedded for d <= {MAX_SOBOL_DIM}"
            )
        if skip < 0:
            raise ValueError(f"skip must be >= 0, got {skip}")
        self.dimension = dimension
        self._v = np.stack([_direction_integers(d + 1) for d in range(dimension)])
        self._state = np.zeros(dimension, dtype=np.uint64)
        self._index = 0  # index of the next point to emit
        if skip:
            self.fast_forward(skip)

    def fast_forward(self, n: int) -> None:
        for _ in range(n):
            self._advance()

    def _advance(self) -> None:
        # Antonov-Saleev update: XOR with the direction integer indexed by
        # the rightmost zero bit of the previous point index.
        i = self._index
        c = 0
        while (i >> c) & 1:
            c += 1
        self._state ^= self._v[:, c]
        self._index += 1

    def draw(self, n: int) -> np.ndarray:
        """Return the next ``n`` points as an (n, d) array in [0, 1)."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        out = np.empty((n, self.dimension))
        for row in range(n):
            out[row] = self._state / _SCALE
            self._advance()
        return out


def sobol_sequence(d: int, n: int, skip: int = 0) -> np.ndarray:
    """First ``n`` Sobol points in dimension ``d`` after skipping ``skip``.

    Convention: with skip=0 the first element of the sequence is the origin
    (all coordinates 0.0).
    """
    return SobolEngine(d, skip=skip).draw(n)


def saltelli_expand(base: np.ndarray, d: int, second_order: bool = False) -> np.ndarray:
    """Expand an (N, 2d) quasi-random block into Saltelli sample matrices.

    Columns 0..d-1 form matrix A, columns d..2d-1 matrix B. The result stacks
    A, B, then the d cross matrices AB_i (A with column i taken from B),
    giving N*(d+2) rows. With ``second_order`` the BA_i matrices are appended
    as well, for N*(2d+2) rows.
    """
    base = np.asarray(base, dtype=float)
    if base.ndim != 2 or base.shape[1] != 2 * d:
        raise ValueError(
            f"base block must have 2*d = {2 * d} columns, got shape {base.shape}"
        )
    a = base[:, :d]
    b = base[:, d:]
    blocks = [a, b]
    for i in range(d):
        ab = a.copy()
        ab[:, i] = b[:, i]
        blocks.append(ab)
    if second_order:
        for i in range(d):
            ba = b.copy()
            ba[:, i] = a[:, i]
            blocks.append(ba)
    return np.vstack(blocks)


def latin_hypercube(n: int, d: int, seed: int) -> np.ndarray:
    """Latin hypercube sample: one point per stratum in every 1-D projection.

    Each coordinate column is a random permutation of the n strata with a
    uniform jitter inside each stratum. Deterministic for a given seed.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    pts = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        jitter = rng.random(n)
        pts[:, j] = (perm + jitter) / n
    return pts


@dataclass(frozen=True)
class ParameterBounds:
    """Axis-aligned box bounds for the manufacturing parameters."""

    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.lower) == len(self.upper)):
            raise ValueError("names, lower and upper must have equal length")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"bound for {name} requires lower < upper, got [{lo}, {hi}]")

    @property
    def dimension(self) -> int:
        return len(self.names)

    def lower_array(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=float)

    def upper_array(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float)

    def contains(self, x: Sequence[float], tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower_array() - tol) and np.all(x <= self.upper_array() + tol)
        )

    def to_dict(self) -> dict:
        return {
            name: [lo, hi]
            for name, lo, hi in zip(self.names, self.lower, self.upper)
        }


def default_bounds() -> ParameterBounds:
    """Default design box: AM% upper edge 96.8, SC% and CD% ranges
    [43, 72.8] and [1.4, 38.8]. The AM% lower edge is a configurable choice
    (90.0 by default)."""
    return ParameterBounds(
        names=("am_pct", "sc_pct", "cd_pct"),
        lower=(90.0, 43.0, 1.4),
        upper=(96.8, 72.8, 38.8),
    )


def scale_to_bounds(points: np.ndarray, bounds: ParameterBounds) -> list[ManufacturingParams]:
    """Affine map of unit-cube points into the bounds box."""
    arr = scale_array(points, bounds)
    return [ManufacturingParams(*row) for row in arr]


def scale_array(points: np.ndarray, bounds: ParameterBounds) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != bounds.dimension:
        raise ValueError(
            f"point dimension {points.shape[1]} does not match bounds "
            f"dimension {bounds.dimension}"
        )
    lo = bounds.lower_array()
    hi = bounds.upper_array()
    return lo + points * (hi - lo)


def to_unit(points: np.ndarray, bounds: ParameterBounds) -> np.ndarray:
    """Inverse of ``scale_array``: map bounded points back into [0, 1]^d."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != bounds.dimension:
        raise ValueError(
            f"point dimension {points.shape[1]} does not match bounds "
            f"dimension {bounds.dimension}"
        )
    lo = bounds.lower_array()
    hi = bounds.upper_array()
    return (points - lo) / (hi - lo)


@dataclass
class DesignOfExperiments:
    """A concrete set of manufacturing conditions plus generator provenance."""

    points: list[ManufacturingParams]
    generator: str
    seed: int
    skip: int
    bounds: ParameterBounds
    rejected: list[tuple[ManufacturingParams, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array([p.as_array() for p in self.points])

    def metadata(self) -> dict:
        return {
            "generator": self.generator,
            "seed": self.seed,
            "skip": self.skip,
            "bounds": self.bounds.to_dict(),
            "n_points": len(self.points),
            "n_rejected": len(self.rejected),
        }


def generate_dataset_doe(
    bounds: ParameterBounds,
    property_cfg: PropertyModelConfig,
    block_size: int = 40,
    skip: int = 1,
    second_order: bool = False,
    seed: int = 0,
) -> DesignOfExperiments:
    """Sobol block with Saltelli expansion, filtered for physical feasibility.

    A (block_size, 2d) Sobol block is expanded into block_size*(d+2) candidate
    conditions; candidates whose derived electrode properties fall outside the
    configured physical ranges are rejected and recorded. The default skip of 1
    drops the all-zero first Sobol row, which would collapse the A/B/AB blocks
    into duplicates.
    """
    d = bounds.dimension
    base = sobol_sequence(2 * d, block_size, skip=skip)
    unit = saltelli_expand(base, d, second_order=second_order)
    params = scale_to_bounds(unit, bounds)

    accepted: list[ManufacturingParams] = []
    rejected: list[tuple[ManufacturingParams, str]] = []
    seen: set[tuple[float, ...]] = set()
    for p in params:
        key = (p.am_pct, p.sc_pct, p.cd_pct)
        if key in seen:
            rejected.append((p, "duplicate point"))
            continue
        try:
            properties_from_manufacturing(p, property_cfg)
        except InfeasiblePointError as err:
            rejected.append((p, str(err)))
            continue
        seen.add(key)
        accepted.append(p)
    return DesignOfExperiments(
        points=accepted,
        generator="sobol-saltelli",
        seed=seed,
        skip=skip,
        bounds=bounds,
        rejected=rejected,
    )


DOE_CSV_HEADER = ["am_pct", "sc_pct", "cd_pct"]


def write_doe_csv(doe: DesignOfExperiments, path: Path | str) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DOE_CSV_HEADER)
        for p in doe.points:
            writer.writerow([repr(p.am_pct), repr(p.sc_pct), repr(p.cd_pct)])


def write_doe_metadata(doe: DesignOfExperiments, path: Path | str) -> None:
    path = Path(path)
    with path.open("w") as fh:
        json.dump(doe.metadata(), fh, indent=2)
        fh.write("\n")


def read_doe_csv(path: Path | str) -> list[ManufacturingParams]:
    """Parse a DOE CSV. Malformed rows raise with their 1-based line number."""
    path = Path(path)
    points: list[ManufacturingParams] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return points
        if [h.strip() for h in header] != DOE_CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(DOE_CSV_HEADER)}, got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            points.append(ManufacturingParams(*values))
    return points
