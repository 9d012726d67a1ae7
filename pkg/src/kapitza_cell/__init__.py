"""Effective conductivity of a periodic two-phase composite with imperfect
(Kapitza-type) thermal contact, by boundary integral equations on the unit
cell, with the small-inclusion limit coefficient and its sweep harness."""

from .config import ConfigError, RunConfig, parse_config
from .effective import (
    EffectiveResult,
    SweepResult,
    effective_matrix,
    limit_lambda,
    limit_lambda_r0,
    richardson_extrapolate,
    sweep_and_extrapolate,
)
from .geometry import (
    BoundaryDiscretization,
    PlacedInclusion,
    ShapeSpec,
    discretize,
    place,
    shape_measure,
)
from .greens import (
    PeriodicGreenConfig,
    free_green,
    periodic_green,
    regularized_periodic_green,
)
from .oracles import (
    DiskLimitCoefficients,
    ball_limit_lambda,
    disk_limit_lambda_general,
    exterior_neumann_ball_field,
)
from .potentials import (
    NystromOperator,
    evaluate_potential,
    normal_derivative_matrix,
    single_layer_matrix,
)
from .transmission import (
    PhaseParameters,
    SolverError,
    TransmissionSolution,
    boundary_residuals,
    evaluate_solution,
    solve_cell_problem,
    solve_exterior_neumann,
    solve_limit_problem,
    trivial_cell_solution,
)

__version__ = "0.1.0"
