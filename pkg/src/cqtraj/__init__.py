"""Complex quantum trajectories, Born reconstruction and extended
probability densities in the complex position plane."""

from .errors import (
    CQTError,
    DomainError,
    GridTooCoarse,
    NoCrossing,
    NonConvergence,
    NotClosed,
    NotFinite,
    NotNormalizable,
    NumericalError,
    PoleEncountered,
    PoleOnPath,
    QuadratureError,
    UnsupportedState,
)
from .wavefunction import (
    ComplexPoint,
    FreeParticle,
    GaussianPacket,
    OscillatorEigenstate,
    PhysicalScale,
    PotentialStep,
    eval_psi,
    list_nodes,
    log_derivative,
    parse_state,
    potential,
    stagnation_points,
    velocity,
    velocity_derivative,
)
from .trajectory import (
    Trajectory,
    cassinian_invariant,
    detect_closure,
    integrate,
    orbit_invariant,
    orbit_period,
    real_axis_crossings,
    winding_numbers,
)
from .probability import (
    BornProfile,
    DensityField,
    GridSpec,
    RegionLabel,
    born_density,
    classical_width,
    classify_region,
    density_field,
    expectation,
    lemniscate_width,
    normalize_and_fraction,
    rho_alt,
    rho_conserved,
)
from .continuity import ResidualReport, characteristics_match, continuity_residual, divergence

__version__ = "0.1.0"
