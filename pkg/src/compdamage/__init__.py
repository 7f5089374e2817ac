"""Finite element simulation of quasi-static complete damage with material exclusion."""

from .admissible import (
    THETA_Z,
    AdmissibleRegion,
    JumpEvent,
    detect_jump,
    maximal_admissible,
    superlevel_region,
    truncate_field,
)
from .damage import IncrementalDamageProblem, incremental_energy, incremental_gradient, solve_damage_step, vi_residual
from .driver import (
    BoundaryProgram,
    SimulationConfig,
    checkpoint_restart,
    epsilon_continuation,
    fineness_report,
    load_config,
    run,
)
from .energy import (
    EnergyBreakdown,
    LedgerRow,
    audit_step,
    free_energy,
    gamma_probe,
    jump_energy,
    read_ledger,
    reduced_energy,
    verify_ledger,
    write_ledger,
)
from .equilibrium import EquilibriumProblem, solve_equilibrium, stress_power
from .errors import (
    AuditFailure,
    ConfigError,
    ConstraintViolation,
    ConvergenceError,
    MeshFormatError,
    MeshInvariantError,
    SingularSystemError,
    StepUnderflow,
)
from .mesh import Material, Mesh, ScalarField, VectorField, load_mesh, rectangle_mesh, write_mesh
from .state import TrajectoryState, read_snapshot, write_snapshot

__version__ = "0.1.0"
