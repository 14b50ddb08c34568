"""Zames-Falb multiplier analysis and destabilizer construction for
discrete-time Lur'e systems with slope-restricted nonlinearities."""

from .errors import (
    CertificateError,
    ConstructionError,
    DegenerateLPError,
    DegenerateMultiplierError,
    OzfError,
    PlantError,
)
from .lti import (
    CirculantMatrix,
    RootsGrid,
    Signal,
    StateSpaceModel,
    build_circulant_T,
    eval_transfer,
    kron_lift,
    nyquist_value,
    periodic_initial_state,
    signal_power,
)
from .harmonics import (
    PwlCircleFunction,
    is_doubly_hyperdominant,
    is_pd_sequence,
    pwl_eval,
    pwl_fourier_coefficients,
)
from .margin import (
    MarginProblem,
    build_margin_problem,
    check_phase_constraint,
    check_shift_conditions,
    check_zhang_condition,
    solve_margin_lp,
    symmetrize_dual,
)
from .multiplier import (
    ZFMultiplier,
    certify_global_fdi,
    fir_truncate,
    kron_fdi_equivalence,
    synth_pwl_multiplier,
    verify_fdi_grid,
)
from .analysis import classify_kappa, find_multiplier, kappa_threshold, sweep_n
from .polyhedral import PolyhedralConvexFunction, SlopeNonlinearity, eval_nonlinearity
from .destabilizer import build_destabilizer
from .lure import (
    LoopCertificate,
    assemble_certificate,
    gain_lower_bound,
    simulate_certificate,
    simulate_lifted_loop,
    verify_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "CertificateError",
    "CirculantMatrix",
    "ConstructionError",
    "DegenerateLPError",
    "DegenerateMultiplierError",
    "LoopCertificate",
    "MarginProblem",
    "OzfError",
    "PlantError",
    "PolyhedralConvexFunction",
    "PwlCircleFunction",
    "RootsGrid",
    "Signal",
    "SlopeNonlinearity",
    "StateSpaceModel",
    "ZFMultiplier",
    "assemble_certificate",
    "build_circulant_T",
    "build_destabilizer",
    "build_margin_problem",
    "certify_global_fdi",
    "check_phase_constraint",
    "check_shift_conditions",
    "check_zhang_condition",
    "classify_kappa",
    "eval_nonlinearity",
    "eval_transfer",
    "find_multiplier",
    "fir_truncate",
    "gain_lower_bound",
    "is_doubly_hyperdominant",
    "is_pd_sequence",
    "kappa_threshold",
    "kron_fdi_equivalence",
    "kron_lift",
    "nyquist_value",
    "periodic_initial_state",
    "pwl_eval",
    "pwl_fourier_coefficients",
    "signal_power",
    "simulate_certificate",
    "simulate_lifted_loop",
    "solve_margin_lp",
    "sweep_n",
    "symmetrize_dual",
    "synth_pwl_multiplier",
    "verify_certificate",
    "verify_fdi_grid",
]
