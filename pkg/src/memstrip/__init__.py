"""Electrostatically actuated elastic strip over a ground plate.

The package simulates the damping-dominated deflection of a clamped (or
pinned) strip pulled toward a rigid plate by an applied voltage, where the
electrostatic load comes from a potential problem on the moving gap
between strip and plate.  Three model variants are provided: the full
curvature-exact quasilinear model, a small-deformation linearization, and
the small-gap limit with closed-form forcing.

Layout: `core` owns grids, parameters, states and norms; `elliptic` solves
the gap potential and its membrane trace; `operators` discretizes the
elastic operators, energies and spectra; `evolution` integrates the
gradient flow; `steady` finds equilibria, branches, stability and the
pull-in threshold; `cli` is the batch front end.
"""

__version__ = "0.1.0"

from .core import (
    BCS,
    MODELS,
    ConfigError,
    DeviceParams,
    DomainError,
    Grid1D,
    Grid2D,
    MembraneState,
    SolverError,
    SolverThresholds,
    build_grid,
    build_grid2,
    discrete_norm,
    grid_for_size,
    initial_profile,
    is_even,
    mirror,
    read_profile,
    write_profile,
)
from .elliptic import (
    PotentialField,
    electrostatic_energy,
    solve_potential,
    trace_forcing,
    write_potential,
    write_trace,
)
from .operators import (
    OperatorMatrix,
    SpectralReport,
    apply_quasilinear,
    assemble_frozen_operator,
    bending_remainder,
    default_gap_grid,
    mechanical_energy,
    small_deflection_operator,
    spectral_report,
    total_energy,
    write_spectral_report,
)
from .evolution import (
    SimOutcome,
    Trajectory,
    decay_rate,
    run,
    step,
    write_trajectory,
)
from .steady import (
    BranchPoint,
    PullInEstimate,
    StabilityReport,
    SteadyBranch,
    continue_branch,
    estimate_pull_in,
    linear_stability,
    newton_solve,
    preconditioned_residual,
    steady_residual,
    write_branch,
)
from .cli import RunConfig, parse_config, render_config, sweep

__all__ = [
    "BCS",
    "MODELS",
    "BranchPoint",
    "ConfigError",
    "DeviceParams",
    "DomainError",
    "Grid1D",
    "Grid2D",
    "MembraneState",
    "OperatorMatrix",
    "PotentialField",
    "PullInEstimate",
    "RunConfig",
    "SimOutcome",
    "SolverError",
    "SolverThresholds",
    "SpectralReport",
    "StabilityReport",
    "SteadyBranch",
    "Trajectory",
    "__version__",
    "apply_quasilinear",
    "assemble_frozen_operator",
    "bending_remainder",
    "build_grid",
    "build_grid2",
    "continue_branch",
    "decay_rate",
    "default_gap_grid",
    "discrete_norm",
    "electrostatic_energy",
    "estimate_pull_in",
    "grid_for_size",
    "initial_profile",
    "is_even",
    "linear_stability",
    "mechanical_energy",
    "mirror",
    "newton_solve",
    "parse_config",
    "preconditioned_residual",
    "read_profile",
    "render_config",
    "run",
    "small_deflection_operator",
    "solve_potential",
    "spectral_report",
    "steady_residual",
    "step",
    "sweep",
    "total_energy",
    "trace_forcing",
    "write_branch",
    "write_potential",
    "write_profile",
    "write_spectral_report",
    "write_trace",
    "write_trajectory",
]
