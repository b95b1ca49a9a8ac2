"""Floquet analysis of periodically driven SSH chains."""

__version__ = "0.1.0"

from .exceptions import (
    ClassificationError,
    ConfigError,
    DataError,
    DrivenSSHError,
    GaugeError,
    GeometryError,
    InsufficientDataError,
    NotInPhaseError,
    NumericalError,
    SymmetryBrokenError,
    UnsupportedConfigurationError,
    UnsupportedInteractionError,
)
from .floquet import (
    EvolutionRecord,
    FloquetSpectrum,
    Propagator,
    effective_hamiltonian,
    evolve,
    floquet_mode_decomposition,
    floquet_operator,
    micromotion_operator,
    quasienergy_spectrum,
)
from .models import (
    DriveProtocol,
    bloch_hamiltonian,
    coupling_at,
    hamiltonian_real_space,
    majorana_matrix,
)
from .spinmap import SpinDriveParams, spectrum_equivalence, spin_to_majorana_protocol
from .timecrystal import (
    SubharmonicReport,
    SuperpositionInput,
    build_superposition,
    interference_intensity,
    multi_excitation_run,
    stroboscopic_map,
    subharmonic_analyze,
)
from .topology import (
    InvariantPair,
    PhaseLabel,
    check_chiral_symmetry,
    classify_phase,
    compute_invariants,
    edge_mode_census,
    gap_invariant_pi,
    gap_invariant_zero,
)
from .waveguide import (
    CouplingCalibration,
    WaveguideGeometry,
    fit_calibration,
    protocol_from_geometry,
    spacing_profile,
)
