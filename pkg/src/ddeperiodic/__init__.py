"""Periodic solutions of periodically forced delay differential systems.

The package certifies nonresonance of the linearisation, bounds the generic
number of T-periodic solutions, finds them with a spectral fixed-point
solver, and cross-checks every orbit with an independent time-domain
integrator and Floquet analysis.
"""

from .errors import (
    BlowUpError,
    ConfigError,
    DDEPeriodicError,
    DomainEscapeError,
    GridTooCoarseError,
    NoConvergenceError,
    NotOnBoundaryError,
    ResonantLinearisationError,
    SingularJacobianError,
    SingularMatrixError,
    StepMisfitError,
    WeakConditionError,
)
from .geometry import (
    InwardReport,
    PuncturedBall,
    SingularFieldParams,
    delay_budget,
    singular_example_system,
    sup_norm_estimate,
    verify_inward,
)
from .linear_analysis import (
    BlockPair,
    Certificate,
    LinearPair,
    block_pair,
    mean_block,
    multiplicity_bound,
    nonresonance_certificate,
    normalized_margin,
    resonance_scan,
    small_delay_test,
    truncation_limit,
)
from .solver import (
    AuditReport,
    SolutionRecord,
    SolutionSet,
    coefficient_residual,
    degree_audit,
    fixed_point_map,
    forcing_transform,
    multi_start_solve,
    nemitskii,
    newton_solve,
    residual,
    time_domain_defect,
)
from .system import DelaySystem, finite_difference_jacobians, linear_system
from .timedomain import (
    EquicontinuityReport,
    FloquetReport,
    HistorySegment,
    Trajectory,
    equicontinuity_check,
    floquet_report,
    integrate,
    monodromy,
    ode_poincare_degree,
    poincare_gap,
    poincare_map,
    positive_characteristic_root,
    write_trajectory_csv,
)
from .trigpoly import (
    DriftPoly,
    TrigPoly,
    antiderivative_and_mean,
    collocation_size,
    harmonic_frequency,
    project,
)

__version__ = "0.1.0"
