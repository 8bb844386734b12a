"""Truncated Fock-space simulator of a post-selected optical teleporter
between a coherent-state qubit and a vacuum/single-photon qubit."""

from .errors import (
    ConfigError,
    DegenerateCatError,
    DimensionMismatchError,
    DuplicateModeLabelError,
    GridCoverageError,
    HybridTelError,
    NonUnitaryError,
    TruncationOverflowError,
    UnknownModeError,
    ZeroNormError,
    ZeroProbabilityError,
)
from .fock import (
    AmplitudeParams,
    DensityOperator,
    FockState,
    ModeOperator,
    annihilation_op,
    apply_mode_operator,
    cat_state,
    coherent_state,
    expectation,
    fidelity,
    identity_op,
    number_op,
    number_state,
    partial_trace,
    quadrature_op,
    squeezed_vacuum,
    tensor,
    two_mode_squeezed,
    vacuum_state,
)
from .optics import (
    BeamSplitterSpec,
    beam_splitter,
    loss_channel,
    phase_shift,
    photon_subtract,
)
from .measurement import (
    QuadratureRecord,
    WignerGrid,
    click_povm,
    condition_on,
    quadrature_distribution,
    sample_quadrature_pairs,
    sample_quadratures,
    wigner,
)
from .protocol import (
    CvQubit,
    ResourceSpec,
    analytic_fidelity,
    analytic_output,
    bell_click_probability,
    bell_state,
    build_resource,
    cv_qubit_state,
    fit_cat_amplitude,
    ideal_output_state,
    ideal_resource,
    physical_resource,
    rate_ratio_condition,
    solve_mix_ratio,
    teleport,
)
from .tomography import (
    MaxlikResult,
    PhaseEstimate,
    TomographyJob,
    estimate_input_phase,
    estimate_phase_difference,
    estimate_phase_from_variance,
    maxlik_reconstruct,
)

__version__ = "0.1.0"
