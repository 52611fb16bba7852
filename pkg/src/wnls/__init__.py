"""Pseudo-spectral laboratory for weighted gradient systems of coupled
semilinear Schrodinger equations on a periodic box."""

from .errors import (
    ConfigError,
    DivergedFieldError,
    FormatError,
    InvalidCouplingError,
    InvalidFrequencyError,
    InvalidParamsError,
    NotEnoughDataError,
    NotFocusingError,
    TruncationUnreliableWarning,
    UnsupportedDimensionError,
    UnsupportedVersionError,
    WnlsError,
)
from .grid import (
    Field,
    FieldPair,
    SpectralGrid,
    SpectrumField,
    apply_free_propagator,
    boundary_mass_fraction,
    gradient,
    lp_project,
    norm,
    transform_forward,
    transform_inverse,
)
from .model import (
    GradientCheck,
    MonomialPair,
    Regime,
    RegimeLabel,
    SystemParams,
    WeightPair,
    check_weighted_gradient,
    classify_regime,
    critical_regularity,
    derive_weights,
    nonlinearity,
    potential_density,
    weights_for,
)
from .stepper import (
    ConvergenceReport,
    DiagnosticsTrace,
    RunState,
    RunStatus,
    StepperConfig,
    convergence_order,
    evolve,
    rk4_oracle_step,
    strang_step,
)
from .functionals import (
    ConservedSet,
    MorawetzSample,
    PseudoconformalSample,
    VirialSample,
    conserved_set,
    energy_h1_bound,
    morawetz_direct_oracle,
    morawetz_sample,
    pseudoconformal_sample,
    spacetime_l4_accumulate,
    virial_sample,
    weighted_energy,
)
from .asymptotics import (
    BlowupCertificate,
    DecayReport,
    ScatteringReport,
    blowup_certify,
    decay_monitor,
    focusing_weights,
    pullback,
    sc_norm_monitor,
    scattering_extract,
)

__version__ = "0.1.0"
