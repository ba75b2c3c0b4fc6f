"""Inverse design of electrode manufacturing parameters.

Pipeline: quasi-random design of experiments over the manufacturing space,
an empirical electrode property model, a reduced-order discharge simulator
producing energy and power density descriptors, Gaussian-process surrogates
for both, and weighted bi-objective Bayesian optimization that returns the
manufacturing condition best suited to an application scenario.
"""

from .bayesopt import AcquisitionSpec, BOResult, acquisition_score, minimize, optimize
from .cellsim import (
    Dataset,
    DatasetRow,
    DischargeResult,
    SimConfig,
    energy_density,
    power_density,
    run_doe,
    simulate_discharge,
)
from .doe import (
    DesignOfExperiments,
    ParameterBounds,
    SobolEngine,
    default_bounds,
    generate_dataset_doe,
    latin_hypercube,
    saltelli_expand,
    scale_to_bounds,
    sobol_sequence,
)
from .electrode import (
    ElectrodeProperties,
    InfeasiblePointError,
    ManufacturingParams,
    ParticleGroup,
    PropertyModelConfig,
    properties_from_manufacturing,
    split_active_area,
)
from .gp import GPModel, KernelSpec, Posterior, gp_fit, gp_predict, kernel_eval
from .objective import (
    FitnessScaler,
    ObjectiveSpec,
    WeightScheme,
    apply_scaler,
    cost_function,
    fit_scaler,
    rank_weights,
)
from .validation import ValidationReport, ci95_resampling, r2_score, rmse_pct, split_dataset

__version__ = "0.1.0"
