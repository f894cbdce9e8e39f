"""Simulator and fitting toolkit for few-photon multi-DOF photonic circuits."""

from .analysis import (
    FitError,
    FitResult,
    fit_fringe,
    fit_triangle,
    poisson_sigma,
    subtract_background,
    visibility_dip,
    visibility_peak,
)
from .circuit import Circuit, CircuitError, compile_circuit, validate_circuit
from .elements import (
    BeamSplitter,
    ElementSpec,
    GratingCoupler,
    ModeConverter,
    ModeDemux,
    ModeMux,
    PBS,
    PhaseShifter,
    Propagation,
    REAL,
    SYMMETRIC,
    TransferMatrix,
    bs_matrix,
    grating_coupler_matrix,
    mode_converter_matrix,
    mode_demux_matrix,
    mode_mux_matrix,
    pbs_matrix,
    phase_shifter_matrix,
    propagation_matrix,
)
from .expfile import (
    Experiment,
    ExperimentFileError,
    load_experiment,
    parse_experiment,
    save_experiment,
    serialize_experiment,
)
from .experiments import (
    ScanConfig,
    ScanError,
    ScanResult,
    SourceModel,
    fringe_scan,
    hom_scan,
    overlap_at_delay,
)
from .fock import (
    DetectionPattern,
    PhotonState,
    WavepacketBasis,
    evolve_probability,
    iter_patterns,
    noon_fringe_probability,
    output_state,
    permanent,
    single_photon_fringe_probability,
    state_overlap,
    states_equal_up_to_phase,
)
from .modes import (
    ModeLabel,
    ModeRegistry,
    Polarization,
    UnknownModeError,
    UnsupportedModeError,
)
from .presets import (
    REFERENCE_BANDS,
    SAMPLE_IDS,
    preset,
    preset_experiment,
    sample4_patterns,
)

__version__ = "0.1.0"
