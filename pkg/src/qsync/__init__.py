"""Quantum phase synchronization of two mechanical oscillators in a cavity.

Moment-level simulator (mean field plus covariance Lyapunov equation),
locally-measurable synchronization bounds, randomized inequality checks, and
the rotated-frame analytics showing synchronization without entanglement.
"""

from .state import (
    CmReport,
    MeanState,
    PhaseFrame,
    SystemParams,
    mech_submatrix,
    symplectic_eigenvalues,
    symplectic_form,
    vacuum_cm,
    validate_cm,
)
from .dynamics import (
    SimulationError,
    StepRejected,
    Trajectory,
    diffusion_matrix,
    drift_matrix,
    lyapunov_rhs,
    mean_field_rhs,
    simulate,
    step,
)
from .criteria import (
    InsufficientDataError,
    LockResult,
    PhaseUndefinedError,
    SingularBoundError,
    SyncReport,
    classical_lock,
    necessary_bound,
    phase_coefficients,
    phase_diff_variance,
    phase_frame,
    report,
    sufficient_bound,
)
from .oracle import RandomCmSpec, check_a4, check_a5, check_mm_dagger, fuzz_suite, random_physical_cm
from .picture import (
    CoherentBranch,
    CoherentMixture,
    PictureParams,
    beam_splitter,
    decay_mode2,
    evolve_free,
    gaussian_log_negativity,
    mixture_means,
    mixture_second_moments,
    rotation_angle,
    separability_witness,
    sufficient_bound_on_mixture,
    transformed_params,
    two_branch_mixture,
    validity_margins,
)
from .scenarios import ScenarioConfig, preset, run_scenario, run_sweep

__version__ = "0.1.0"
