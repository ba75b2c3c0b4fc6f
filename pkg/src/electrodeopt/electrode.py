"""Empirical map from manufacturing parameters to electrode properties.

The six properties consumed by the discharge simulator (porosity, tortuosity,
mass loading, specific active surface area, electronic conductivity,
thickness) are derived from the three manufacturing parameters with simple
monotone closed forms. The functional shapes and constants are a documented
stand-in for a full microstructure simulation chain; only the directions of
change are treated as contractual:

  * slurry solid content drives mass loading linearly,
  * calendering compresses porosity, raises tortuosity and conductivity,
    and thins the coating at constant solid volume,
  * a larger active-material fraction thins the coating and exposes more
    active surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InfeasiblePointError(ValueError):
    """Raised when derived electrode properties leave the physical ranges."""


@dataclass(frozen=True)
class ManufacturingParams:
    """One manufacturing condition: active material mass fraction (percent),
    slurry solid content (percent), calendering compression degree (percent)."""

    am_pct: float
    sc_pct: float
    cd_pct: float

    def __post_init__(self):
        if not 0.0 < self.am_pct < 100.0:
            raise ValueError(f"am_pct must be in (0, 100), got {self.am_pct}")
        if not 0.0 <= self.cd_pct < 100.0:
            raise ValueError(f"cd_pct must be in [0, 100), got {self.cd_pct}")
        if self.sc_pct <= 0.0:
            raise ValueError(f"sc_pct must be positive, got {self.sc_pct}")

    def as_array(self) -> np.ndarray:
        return np.array([self.am_pct, self.sc_pct, self.cd_pct])


@dataclass(frozen=True)
class ElectrodeProperties:
    """Electrode-scale inputs for the discharge model.

    porosity: electrolyte-accessible void fraction (the carbon-binder domain
      counts as solid because it blocks ion transport)
    tortuosity: transport hindrance factor, >= 1
    mass_loading: areal coating mass, mg/cm^2
    active_area: active surface per electrode volume at the
      active-material/electrolyte interface, 1/m
    conductivity: effective electronic conductivity, S/m
    thickness: coating thickness, micrometers
    """

    porosity: float
    tortuosity: float
    mass_loading: float
    active_area: float
    conductivity: float
    thickness: float

    def __post_init__(self):
        if not 0.0 < self.porosity < 1.0:
            raise ValueError(f"porosity must be in (0, 1), got {self.porosity}")
        if self.tortuosity < 1.0:
            raise ValueError(f"tortuosity must be >= 1, got {self.tortuosity}")
        for name in ("mass_loading", "active_area", "conductivity", "thickness"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ParticleGroup:
    """One size class of active-material particles."""

    radius_um: float
    count: float
    volume_fraction: float

    def __post_init__(self):
        if self.radius_um <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius_um}")
        if self.count < 0.0:
            raise ValueError(f"count must be >= 0, got {self.count}")


@dataclass(frozen=True)
class PropertyModelConfig:
    """Constants of the property model, all positive, versioned with the
    pipeline config. Defaults give NMC-like magnitudes; they are placeholders
    chosen for plausible ranges, not calibrated values."""

    mass_loading_intercept: float = -24.0  # mg/cm^2
    mass_loading_slope: float = 0.8  # mg/cm^2 per SC%
    porosity_uncalendered: float = 0.48
    bruggeman_exponent: float = 1.5
    active_material_density: float = 4.8  # g/cm^3
    binder_domain_density: float = 1.8  # g/cm^3
    conductivity_ref: float = 5.0  # S/m
    conductivity_cbd_exponent: float = 1.0
    conductivity_pack_exponent: float = 1.5
    area_scale: float = 3.5e5  # 1/m
    area_intercept: float = -1.35
    area_slope: float = 0.025  # per AM%
    porosity_feasible_min: float = 0.05
    porosity_feasible_max: float = 0.95
    thickness_feasible_max: float = 125.0  # micrometers

    def __post_init__(self):
        if not 0.0 < self.porosity_uncalendered < 1.0:
            raise ValueError("porosity_uncalendered must be in (0, 1)")
        for name in (
            "mass_loading_slope",
            "active_material_density",
            "binder_domain_density",
            "conductivity_ref",
            "area_scale",
            "area_slope",
            "thickness_feasible_max",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.porosity_feasible_min < self.porosity_feasible_max:
            raise ValueError("porosity feasibility range must satisfy 0 < min < max")


def effective_solid_density(am_pct: float, cfg: PropertyModelConfig) -> float:
    """Density of the AM + carbon-binder composite, g/cm^3 (mass-weighted
    harmonic mean, so denser AM-rich coatings come out thinner)."""
    w = am_pct / 100.0
    return 1.0 / (w / cfg.active_material_density + (1.0 - w) / cfg.binder_domain_density)


def properties_from_manufacturing(
    params: ManufacturingParams, cfg: PropertyModelConfig
) -> ElectrodeProperties:
    """Derive the six electrode properties for one manufacturing condition.

    Raises InfeasiblePointError when the compressed porosity or the coating
    thickness leaves the configured physical ranges; the DOE generator uses
    this to filter candidate conditions.
    """
    mass_loading = cfg.mass_loading_intercept + cfg.mass_loading_slope * params.sc_pct
    if mass_loading <= 0.0:
        raise InfeasiblePointError(
            f"mass loading {mass_loading:.3f} mg/cm^2 is not positive at SC% = {params.sc_pct}"
        )

    compression = 1.0 - params.cd_pct / 100.0
    porosity = 1.0 - (1.0 - cfg.porosity_uncalendered) / compression
    if porosity <= cfg.porosity_feasible_min:
        raise InfeasiblePointError(
            f"porosity {porosity:.4f} at CD% = {params.cd_pct} is below the "
            f"feasible minimum {cfg.porosity_feasible_min}"
        )
    if porosity >= cfg.porosity_feasible_max:
        raise InfeasiblePointError(
            f"porosity {porosity:.4f} exceeds the feasible maximum {cfg.porosity_feasible_max}"
        )

    rho_eff = effective_solid_density(params.am_pct, cfg)
    # mg/cm^2 over g/cm^3 gives 1e-3 cm; factor 10 converts to micrometers.
    thickness = 10.0 * mass_loading / ((1.0 - porosity) * rho_eff)
    if thickness > cfg.thickness_feasible_max:
        raise InfeasiblePointError(
            f"thickness {thickness:.1f} um exceeds the feasible maximum "
            f"{cfg.thickness_feasible_max} um"
        )

    tortuosity = porosity ** (1.0 - cfg.bruggeman_exponent)
    conductivity = (
        cfg.conductivity_ref
        * (100.0 - params.am_pct) ** cfg.conductivity_cbd_exponent
        * (1.0 - porosity) ** cfg.conductivity_pack_exponent
    )
    area_factor = cfg.area_intercept + cfg.area_slope * params.am_pct
    if area_factor <= 0.0:
        raise InfeasiblePointError(
            f"active-area factor {area_factor:.4f} is not positive at AM% = {params.am_pct}"
        )
    active_area = cfg.area_scale * area_factor

    return ElectrodeProperties(
        porosity=porosity,
        tortuosity=tortuosity,
        mass_loading=mass_loading,
        active_area=active_area,
        conductivity=conductivity,
        thickness=thickness,
    )


def split_active_area(
    a_v: float, epsilon: float, groups: list[ParticleGroup]
) -> list[float]:
    """Split the total specific active area over particle size groups.

    Group n receives the share r_n^2 n_n / sum_m r_m^2 n_m of a_v * epsilon.
    The epsilon multiplier is applied verbatim, so the returned areas sum to
    a_v * epsilon, not a_v; callers choose whether epsilon is the active
    volume fraction or the porosity.
    """
    if not groups:
        raise ValueError("at least one particle group is required")
    weights = np.array([g.radius_um**2 * g.count for g in groups])
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("all particle counts are zero; cannot split active area")
    return list(weights / total * a_v * epsilon)


def default_particle_groups(total_volume_fraction: float = 0.55) -> list[ParticleGroup]:
    """Six-group particle size distribution used for every condition.

    The radii and counts are documented placeholders approximating a skewed
    NMC size distribution; the same profile is shared by all cases.
    """
    radii = np.array([1.5, 3.0, 4.5, 6.0, 7.5, 9.0])
    counts = np.array([840.0, 320.0, 160.0, 80.0, 30.0, 10.0])
    volumes = radii**3 * counts
    fractions = volumes / volumes.sum() * total_volume_fraction
    return [
        ParticleGroup(radius_um=float(r), count=float(n), volume_fraction=float(f))
        for r, n, f in zip(radii, counts, fractions)
    ]
