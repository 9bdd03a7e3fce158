"""Steady-state hyperbolic moment-model solver for 1D rarefied microflows.

Arbitrary-order Hermite moment models of BGK-type kinetic equations on
interval meshes, solved to steady state by a Heun pseudo-time smoother and
accelerated by recursive lower-order model correction.
"""

from .basis import MomentBasis, MultiIndex, basis_size, get_basis, hermite_eval
from .benchmarks import (
    BenchmarkCase,
    initial_state,
    make_case,
    run_sweep,
    solution_distance,
    solve_case_nmlm,
    solve_case_single_level,
)
from .discretization import (
    Diagnostics,
    FrequencyLaw,
    GasModel,
    GridSolution,
    Mesh1D,
    WallBoundary,
    collision_frequency,
    max_wave_speed,
    numerical_flux,
    reconstruct,
    residual_field,
    wall_ghost_state,
)
from .errors import ConfigError, ModelBreakdownError, MomentflowError, RealizabilityError
from .moments import (
    CollisionKind,
    CollisionModel,
    MacroQuantities,
    MomentState,
    adapt,
    equilibrium_coeffs,
    extract_macros,
    maxwellian_state,
    project_to_params,
)
from .multilevel import (
    NmlmConfig,
    OrderSequence,
    Strategy,
    WorkLedger,
    correct,
    make_sequence,
    nmlm_cycle,
    restrict_residual,
    restrict_solution,
    solve_nmlm,
)
from .smoother import (
    ConvergenceRecord,
    RhsField,
    SmootherConfig,
    heun_step,
    residual_norm,
    solve_single_level,
    step_size,
)

__version__ = "0.1.0"
