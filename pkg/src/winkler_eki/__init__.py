"""Clamped thin-plate bending on an elastic point-spring foundation:
finite-difference forward solver and ensemble Kalman inversion of the
spatially varying foundation coefficient.
"""

from ._kernels import BACKEND
from .eki import (
    EkiConfig,
    Ensemble,
    KalmanGain,
    Metrics,
    Observation,
    RunReport,
    eki_step,
    empirical_stats,
    kalman_gain,
    metrics,
    perturb_observations,
    run_inversion,
)
from .errors import SolverFailure
from .experiments import (
    ExperimentSpec,
    TruthSpec,
    make_observation,
    read_manifest,
    run_direct_experiment,
    run_experiment,
    run_from_manifest,
    run_inverse_experiment,
    truth_field,
    write_manifest,
)
from .grid import (
    Grid,
    ScalarField,
    read_snake_csv,
    snake_flatten,
    snake_unflatten,
    write_snake_csv,
)
from .plate import (
    BiharmonicMatrix,
    ForwardContext,
    PlateModel,
    assemble_biharmonic,
    flexural_rigidity,
    forward_map,
    forward_solve,
    gaussian_load,
    reactive_pressure,
)
from .priors import PriorSpec, dump_ensemble, sample_prior

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BiharmonicMatrix",
    "EkiConfig",
    "Ensemble",
    "ExperimentSpec",
    "ForwardContext",
    "Grid",
    "KalmanGain",
    "Metrics",
    "Observation",
    "PlateModel",
    "PriorSpec",
    "RunReport",
    "ScalarField",
    "SolverFailure",
    "TruthSpec",
    "assemble_biharmonic",
    "dump_ensemble",
    "eki_step",
    "empirical_stats",
    "flexural_rigidity",
    "forward_map",
    "forward_solve",
    "gaussian_load",
    "kalman_gain",
    "make_observation",
    "metrics",
    "perturb_observations",
    "read_manifest",
    "read_snake_csv",
    "reactive_pressure",
    "run_direct_experiment",
    "run_experiment",
    "run_from_manifest",
    "run_inverse_experiment",
    "run_inversion",
    "sample_prior",
    "snake_flatten",
    "snake_unflatten",
    "truth_field",
    "write_manifest",
    "write_snake_csv",
]
