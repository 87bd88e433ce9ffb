"""Self-adjoint point interactions on n coupled channels over the line.

The package validates and interconverts boundary-condition parameterizations,
detects when a matrix condition decouples into scalar channels, evaluates
resolvents of the associated operators through their boundary data, and
computes band spectra of periodic arrangements.
"""

from .bc import (
    ABForm,
    BoundaryForm,
    BoundarySubspace,
    CouplingSpec,
    LMForm,
    TransferForm,
    UForm,
    ab_to_lm,
    ab_to_transfer,
    ab_to_u,
    coupling_domain_check,
    coupling_from_json,
    coupling_to_json,
    delta,
    delta_p,
    delta_prime,
    delta_prime_s,
    form_from_json,
    form_to_json,
    is_connecting,
    kirchhoff,
    lm_to_ab,
    make_coupling,
    matrix_delta,
    transfer_to_ab,
    u_to_ab,
    validate_ab,
    validate_transfer,
)
from .errors import (
    DegenerateSubspace,
    NotConnecting,
    NotReducible,
    NotRegular,
    NotSelfAdjoint,
    NotSimultaneouslyDiagonalizable,
    OnEssentialSpectrum,
    ParseError,
    PointChannelsError,
    RankDeficient,
    ShapeMismatch,
    ToleranceWarning,
    WindowTooCoarse,
)
from .kernels import BACKEND, get_backend
from .reduction import (
    ChannelSystem,
    ContinuityKind,
    InteractionPoint,
    ReducibilityReport,
    ReductionResult,
    VectorRelation,
    continuity_class,
    detect_vector_relation,
    is_reducible,
    permutation_invariant,
    reduce_system,
    simultaneous_diagonalizer,
    star_reduce,
    theta_invariant,
)
from .resolvent import (
    BoundState,
    KreinSystem,
    build_q,
    find_bound_states,
    green_kernel,
    resolve,
)
from .spectrum import (
    BandSpectrum,
    Eigenvalue,
    Gap,
    PeriodicSystem,
    ScalarPeriodicBC,
    floquet_determinant,
    floquet_min_absdet,
    gap_report,
    kp_discriminant,
    merge_spectra,
    periodic_spectrum,
    scalar_band_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "ABForm",
    "BACKEND",
    "BandSpectrum",
    "BoundState",
    "BoundaryForm",
    "BoundarySubspace",
    "ChannelSystem",
    "ContinuityKind",
    "CouplingSpec",
    "DegenerateSubspace",
    "Eigenvalue",
    "Gap",
    "InteractionPoint",
    "KreinSystem",
    "LMForm",
    "NotConnecting",
    "NotReducible",
    "NotRegular",
    "NotSelfAdjoint",
    "NotSimultaneouslyDiagonalizable",
    "OnEssentialSpectrum",
    "ParseError",
    "PeriodicSystem",
    "PointChannelsError",
    "RankDeficient",
    "ReducibilityReport",
    "ReductionResult",
    "ScalarPeriodicBC",
    "ShapeMismatch",
    "ToleranceWarning",
    "TransferForm",
    "UForm",
    "VectorRelation",
    "WindowTooCoarse",
    "ab_to_lm",
    "ab_to_transfer",
    "ab_to_u",
    "build_q",
    "continuity_class",
    "coupling_domain_check",
    "coupling_from_json",
    "coupling_to_json",
    "delta",
    "delta_p",
    "delta_prime",
    "delta_prime_s",
    "detect_vector_relation",
    "find_bound_states",
    "floquet_determinant",
    "floquet_min_absdet",
    "form_from_json",
    "form_to_json",
    "gap_report",
    "get_backend",
    "green_kernel",
    "is_connecting",
    "is_reducible",
    "kirchhoff",
    "kp_discriminant",
    "lm_to_ab",
    "make_coupling",
    "matrix_delta",
    "merge_spectra",
    "periodic_spectrum",
    "permutation_invariant",
    "reduce_system",
    "resolve",
    "scalar_band_spectrum",
    "simultaneous_diagonalizer",
    "star_reduce",
    "theta_invariant",
    "transfer_to_ab",
    "u_to_ab",
    "validate_ab",
    "validate_transfer",
]
