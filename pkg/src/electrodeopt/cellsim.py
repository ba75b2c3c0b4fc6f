"""Reduced-order galvanostatic discharge model and dataset assembly.

A constant-current discharge is evaluated in closed form on a time grid:
the cell voltage is the open-circuit voltage at the current depth of
discharge minus three loss terms (ohmic drop through the coating, reaction
overpotential on the active surface, and electrolyte-transport polarization).
Transport through the pore network carries a depletion term so thick,
dense coatings lose capacity the way diffusion-limited electrodes do, while
thin porous ones discharge nearly their full nominal capacity.

Two descriptors summarize each run: the gravimetric energy density
(current times voltage integrated over the discharge, per total electrode
mass including coating, electrolyte and current collector) and the average
gravimetric power density (energy density divided by total discharge time).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .doe import DesignOfExperiments
from .electrode import (
    ElectrodeProperties,
    InfeasiblePointError,
    ManufacturingParams,
    PropertyModelConfig,
    properties_from_manufacturing,
)

DEFAULT_OCV_TABLE: tuple[tuple[float, float], ...] = (
    (1.00, 4.30),
    (0.95, 4.15),
    (0.90, 4.05),
    (0.80, 3.95),
    (0.70, 3.87),
    (0.60, 3.80),
    (0.50, 3.74),
    (0.40, 3.68),
    (0.30, 3.62),
    (0.20, 3.55),
    (0.10, 3.45),
    (0.05, 3.35),
    (0.00, 3.20),
)


@dataclass(frozen=True)
class SimConfig:
    """Discharge model constants.

    Setting ``exchange_current_ref``, ``limiting_current_coeff`` or
    ``ohmic_scale`` to zero disables the corresponding loss term, which gives
    the lossless reference discharge.
    """

    c_rate: float = 1.0
    cutoff_voltage: float = 3.2  # V
    time_step: float = 5.0  # s
    ocv_table: tuple[tuple[float, float], ...] = DEFAULT_OCV_TABLE
    thermal_voltage: float = 0.025693  # V at 298 K
    transference_factor: float = 0.4
    exchange_current_ref: float = 1.5  # A/m^2 of active surface
    limiting_current_coeff: float = 0.09  # A/m, scales the limiting current
    depletion_strength: float = 0.85  # fraction of transport headroom lost at full depth
    ohmic_scale: float = 1.0
    specific_capacity: float = 170.0  # mAh per g of active material
    electrolyte_density: float = 1200.0  # kg/m^3
    collector_areal_mass: float = 0.04  # kg/m^2
    active_material_density: float = 4.8  # g/cm^3, must match the property model
    binder_domain_density: float = 1.8  # g/cm^3, must match the property model

    def __post_init__(self):
        if self.time_step <= 0.0:
            raise ValueError(f"time_step must be positive, got {self.time_step}")
        if self.c_rate <= 0.0:
            raise ValueError(f"c_rate must be positive, got {self.c_rate}")
        if not 0.0 <= self.depletion_strength < 1.0:
            raise ValueError("depletion_strength must be in [0, 1)")
        socs = [row[0] for row in self.ocv_table]
        volts = [row[1] for row in self.ocv_table]
        if len(self.ocv_table) < 2:
            raise ValueError("ocv_table needs at least two rows")
        if any(b >= a for a, b in zip(socs, socs[1:])):
            raise ValueError("ocv_table SOC column must be strictly decreasing")
        if any(b >= a for a, b in zip(volts, volts[1:])):
            raise ValueError("ocv_table voltage must be strictly decreasing along the table")
        if not (math.isclose(socs[0], 1.0) and math.isclose(socs[-1], 0.0)):
            raise ValueError("ocv_table must span SOC from 1.0 down to 0.0")
        if self.cutoff_voltage >= volts[0]:
            raise ValueError("cutoff_voltage must be below the top of the OCV table")

    def depth_knots(self) -> tuple[np.ndarray, np.ndarray]:
        """OCV as voltage vs depth of discharge (ascending grid for interp)."""
        socs = np.array([row[0] for row in self.ocv_table])
        volts = np.array([row[1] for row in self.ocv_table])
        return 1.0 - socs, volts


@dataclass
class DischargeResult:
    """Outcome of one simulated discharge.

    curve columns: time (s), voltage (V), discharged capacity (mAh/cm^2).
    electrode_mass is the areal mass in kg/m^2 over which the densities are
    normalized. transport_limited marks runs where the applied current
    already exceeds the transport limit at the first step.
    """

    curve: np.ndarray
    t_total: float
    capacity_final: float
    energy_density: float
    power_density: float
    electrode_mass: float
    transport_limited: bool = False


def _active_mass_fraction(props: ElectrodeProperties, cfg: SimConfig) -> float:
    """Invert the coating density for the active-material mass fraction.

    The coating's solid density follows from mass loading, thickness and
    porosity; the AM/CBD mixture rule then yields the mass split. The result
    is clamped to [0.05, 1] so slightly inconsistent hand-built property sets
    still simulate.
    """
    thickness_cm = props.thickness * 1e-4
    rho_eff = props.mass_loading * 1e-3 / ((1.0 - props.porosity) * thickness_cm)
    inv_cbd = 1.0 / cfg.binder_domain_density
    inv_am = 1.0 / cfg.active_material_density
    w = (inv_cbd - 1.0 / rho_eff) / (inv_cbd - inv_am)
    return float(np.clip(w, 0.05, 1.0))


def _areal_capacity(props: ElectrodeProperties, cfg: SimConfig) -> float:
    """Nominal areal capacity in Ah/m^2."""
    coating_g_m2 = props.mass_loading * 10.0
    am_g_m2 = coating_g_m2 * _active_mass_fraction(props, cfg)
    return cfg.specific_capacity * am_g_m2 / 1000.0


def electrode_mass(props: ElectrodeProperties, cfg: SimConfig) -> float:
    """Total areal mass in kg/m^2: coating + pore electrolyte + collector."""
    coating = props.mass_loading * 0.01
    electrolyte = props.porosity * props.thickness * 1e-6 * cfg.electrolyte_density
    return coating + electrolyte + cfg.collector_areal_mass


def energy_density(curve: np.ndarray, i_app: float, m_electrode: float) -> float:
    """Gravimetric energy density in Wh/kg from a (time, voltage) curve.

    Trapezoidal integration of i_app * V over time, divided by the areal
    electrode mass.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 2 or curve.shape[0] < 1:
        raise ValueError("curve must be a non-empty 2-D array with time and voltage columns")
    if m_electrode <= 0.0:
        raise ValueError(f"electrode mass must be positive, got {m_electrode}")
    t = curve[:, 0]
    v = curve[:, 1]
    return float(np.trapezoid(i_app * v, t) / m_electrode / 3600.0)


def power_density(e: float, t_total: float) -> float:
    """Average gravimetric power density in W/kg: energy over discharge time."""
    if t_total <= 0.0:
        raise ValueError("power density is undefined for a zero-length discharge")
    return e / (t_total / 3600.0)


def no_loss_energy_density(props: ElectrodeProperties, cfg: SimConfig) -> float:
    """Upper bound on the energy density: full capacity at open-circuit voltage."""
    z, u = cfg.depth_knots()
    mean_u = float(np.trapezoid(u, z))
    return _areal_capacity(props, cfg) * mean_u / electrode_mass(props, cfg)


def simulate_discharge(props: ElectrodeProperties, cfg: SimConfig) -> DischargeResult:
    """Run one constant-current discharge down to the cut-off voltage.

    The discharge ends at the cut-off crossing (located by linear
    interpolation inside the final step) or when the nominal capacity is
    exhausted, whichever comes first. If the applied current is already at or
    beyond the transport limit at the start, a zero-length result flagged
    ``transport_limited`` is returned.
    """
    q_areal = _areal_capacity(props, cfg)
    i_app = cfg.c_rate * q_areal
    mass = electrode_mass(props, cfg)
    thickness_m = props.thickness * 1e-6

    t_end = 3600.0 / cfg.c_rate
    n_steps = math.ceil(t_end / cfg.time_step - 1e-12)
    t = np.minimum(np.arange(n_steps + 1) * cfg.time_step, t_end)
    t[-1] = t_end
    z = np.clip(cfg.c_rate * t / 3600.0, 0.0, 1.0)

    z_knots, v_knots = cfg.depth_knots()
    u = np.interp(z, z_knots, v_knots)

    v_ohm = 0.0
    if cfg.ohmic_scale > 0.0:
        v_ohm = cfg.ohmic_scale * i_app * thickness_m / props.conductivity

    eta_kin = 0.0
    if cfg.exchange_current_ref > 0.0:
        i_local = i_app / (props.active_area * thickness_m)
        eta_kin = 2.0 * cfg.thermal_voltage * math.asinh(
            i_local / (2.0 * cfg.exchange_current_ref)
        )

    transport_limited = False
    eta_conc = np.zeros_like(z)
    if cfg.limiting_current_coeff > 0.0:
        i_lim0 = cfg.limiting_current_coeff * (props.porosity / props.tortuosity) / thickness_m
        if i_app >= i_lim0:
            transport_limited = True
        else:
            ratio = i_app / (i_lim0 * (1.0 - cfg.depletion_strength * z))
            # Beyond the depletion wall the closed form diverges; clamping
            # keeps the grid finite and far below any realistic cut-off.
            ratio = np.minimum(ratio, 1.0 - 1e-9)
            eta_conc = -cfg.thermal_voltage * (1.0 + cfg.transference_factor) * np.log1p(-ratio)

    if transport_limited:
        curve = np.array([[0.0, cfg.cutoff_voltage, 0.0]])
        return DischargeResult(
            curve=curve,
            t_total=0.0,
            capacity_final=0.0,
            energy_density=0.0,
            power_density=0.0,
            electrode_mass=mass,
            transport_limited=True,
        )

    v = u - v_ohm - eta_kin - eta_conc

    below = v <= cfg.cutoff_voltage
    if below[0]:
        curve = np.array([[0.0, cfg.cutoff_voltage, 0.0]])
        return DischargeResult(
            curve=curve,
            t_total=0.0,
            capacity_final=0.0,
            energy_density=0.0,
            power_density=0.0,
            electrode_mass=mass,
            transport_limited=True,
        )

    if below.any():
        k = int(np.argmax(below))
        frac = (v[k - 1] - cfg.cutoff_voltage) / (v[k - 1] - v[k])
        t_cut = t[k - 1] + frac * (t[k] - t[k - 1])
        t_curve = np.append(t[:k], t_cut)
        v_curve = np.append(v[:k], cfg.cutoff_voltage)
    else:
        t_curve = t
        v_curve = v

    t_total = float(t_curve[-1])
    z_curve = cfg.c_rate * t_curve / 3600.0
    cap_curve = q_areal * z_curve * 0.1  # Ah/m^2 -> mAh/cm^2
    curve = np.column_stack([t_curve, v_curve, cap_curve])

    e = energy_density(curve[:, :2], i_app, mass)
    p = power_density(e, t_total)
    return DischargeResult(
        curve=curve,
        t_total=t_total,
        capacity_final=float(cap_curve[-1]),
        energy_density=e,
        power_density=p,
        electrode_mass=mass,
        transport_limited=False,
    )


@dataclass(frozen=True)
class DatasetRow:
    params: ManufacturingParams
    props: ElectrodeProperties
    capacity: float  # mAh/cm^2
    t_total: float  # s
    energy_density: float  # Wh/kg
    power_density: float  # W/kg


@dataclass
class Dataset:
    """Simulation results over a DOE, in DOE order, plus rejected conditions."""

    rows: list[DatasetRow]
    rejected: list[tuple[int, ManufacturingParams, str]] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def inputs(self) -> np.ndarray:
        return np.array([r.params.as_array() for r in self.rows])

    def energies(self) -> np.ndarray:
        return np.array([r.energy_density for r in self.rows])

    def powers(self) -> np.ndarray:
        return np.array([r.power_density for r in self.rows])

    def mass_loadings(self) -> np.ndarray:
        return np.array([r.props.mass_loading for r in self.rows])


def run_doe(
    doe: DesignOfExperiments,
    property_cfg: PropertyModelConfig,
    sim_cfg: SimConfig,
    collect_curves: bool = False,
) -> tuple[Dataset, list[DischargeResult]]:
    """Simulate every DOE point. Per-point failures become rejected rows and
    never abort the sweep. Returns the dataset and, when requested, the full
    discharge results in row order."""
    rows: list[DatasetRow] = []
    rejected: list[tuple[int, ManufacturingParams, str]] = []
    curves: list[DischargeResult] = []
    for idx, params in enumerate(doe.points):
        try:
            props = properties_from_manufacturing(params, property_cfg)
        except InfeasiblePointError as err:
            rejected.append((idx, params, str(err)))
            continue
        result = simulate_discharge(props, sim_cfg)
        if result.transport_limited:
            rejected.append((idx, params, "transport-limited: no usable discharge at this current"))
            continue
        rows.append(
            DatasetRow(
                params=params,
                props=props,
                capacity=result.capacity_final,
                t_total=result.t_total,
                energy_density=result.energy_density,
                power_density=result.power_density,
            )
        )
        if collect_curves:
            curves.append(result)
    ds = Dataset(rows=rows, rejected=rejected, provenance=doe.metadata())
    return ds, curves


def mass_loading_split_correlations(ds: Dataset) -> tuple[float, float]:
    """Pearson corr(E, P) on the below-median and above-median loading halves."""
    ml = ds.mass_loadings()
    e = ds.energies()
    p = ds.powers()
    median = float(np.median(ml))
    low = ml <= median
    high = ~low
    if low.sum() < 3 or high.sum() < 3:
        raise ValueError("dataset too small to split at the loading median")
    corr_low = float(np.corrcoef(e[low], p[low])[0, 1])
    corr_high = float(np.corrcoef(e[high], p[high])[0, 1])
    return corr_low, corr_high


DATASET_CSV_HEADER = [
    "am_pct",
    "sc_pct",
    "cd_pct",
    "porosity",
    "tortuosity",
    "mass_loading",
    "active_area",
    "conductivity",
    "thickness",
    "capacity",
    "t_total",
    "energy_density",
    "power_density",
]


def write_dataset_csv(ds: Dataset, path: Path | str) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_CSV_HEADER)
        for r in ds.rows:
            writer.writerow(
                [
                    repr(val)
                    for val in (
                        r.params.am_pct,
                        r.params.sc_pct,
                        r.params.cd_pct,
                        r.props.porosity,
                        r.props.tortuosity,
                        r.props.mass_loading,
                        r.props.active_area,
                        r.props.conductivity,
                        r.props.thickness,
                        r.capacity,
                        r.t_total,
                        r.energy_density,
                        r.power_density,
                    )
                ]
            )


def write_rejections_csv(
    rejected: Iterable[tuple[int, ManufacturingParams, str]], path: Path | str
) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doe_index", "am_pct", "sc_pct", "cd_pct", "reason"])
        for idx, params, reason in rejected:
            writer.writerow(
                [idx, repr(params.am_pct), repr(params.sc_pct), repr(params.cd_pct), reason]
            )


def read_dataset_csv(path: Path | str) -> Dataset:
    """Load a dataset CSV written by ``write_dataset_csv``."""
    path = Path(path)
    rows: list[DatasetRow] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return Dataset(rows=[])
        if [h.strip() for h in header] != DATASET_CSV_HEADER:
            raise ValueError(f"{path}: unexpected dataset header: {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(DATASET_CSV_HEADER):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(DATASET_CSV_HEADER)} columns, "
                    f"got {len(row)}"
                )
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            rows.append(
                DatasetRow(
                    params=ManufacturingParams(vals[0], vals[1], vals[2]),
                    props=ElectrodeProperties(
                        porosity=vals[3],
                        tortuosity=vals[4],
                        mass_loading=vals[5],
                        active_area=vals[6],
                        conductivity=vals[7],
                        thickness=vals[8],
                    ),
                    capacity=vals[9],
                    t_total=vals[10],
                    energy_density=vals[11],
                    power_density=vals[12],
                )
            )
    return Dataset(rows=rows)


def write_curve_csv(result: DischargeResult, path: Path | str) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_s", "voltage_v", "capacity_mah_cm2"])
        for t, v, cap in result.curve:
            writer.writerow([repr(float(t)), repr(float(v)), repr(float(cap))])
