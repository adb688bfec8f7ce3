"""Maxwell-Bloch simulation of an ac-Stark conditional phase shifter in a V-type medium."""

from .bloch import (
    RelaxationMode,
    RelaxationModel,
    build_hamiltonian,
    check_density_matrix,
    density_matrix_rhs,
    ground_state,
    integrate_time_slice,
)
from .config import RunConfig, default_config, parse_config, serialize_config
from .errors import (
    ConfigError,
    DegenerateInputError,
    DomainError,
    NumericalInstabilityError,
    SingularityError,
    StarkPhaseError,
    UsageError,
    ValidityWarning,
)
from .physics import (
    CONST,
    AnalyticEstimate,
    DesignPoint,
    MediumSpec,
    PulseSpec,
    apply_design,
    chi3,
    derive_dipole_moment,
    design_for_bandwidth,
    estimate_cps_absorption,
    far_detuned_phase,
    linear_phase,
    linear_susceptibility,
    reference_defaults,
    photons_from_rabi,
    rabi_from_photons,
    stark_shift,
)
from .propagation import (
    PairedRun,
    PropagationResult,
    SimulationGrid,
    conditional_phase_shift,
    convergence_report,
    simulate,
    simulate_pair,
)

__version__ = "0.1.0"
