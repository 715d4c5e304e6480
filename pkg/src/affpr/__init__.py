"""Affine phase retrieval: certification, constructions, recovery and stability."""

from .certify import (
    Certificate,
    Outcome,
    Verdict,
    WitnessPair,
    brute_force_collision_search,
    certify,
    certify_real_exact,
    certify_structured,
    falsify_complex,
    jacobian,
    verify_witness,
)
from .construct import (
    build_complex_minimal,
    build_real_minimal,
    perturb_complex,
    perturb_real,
    sample_generic,
    witness_subminimal_complex,
    witness_subminimal_real,
)
from .core import (
    Ensemble,
    Field,
    affine_values,
    check_ensemble,
    classical_magnitudes,
    lift,
    lift_signal,
    measure,
    measure_sq,
    validate_ensemble,
)
from .errors import (
    AffprError,
    BudgetError,
    ConditioningError,
    DomainError,
    EnumerationCapError,
    FormatError,
    WitnessError,
)
from .recover import (
    GaussNewtonConfig,
    RecoveryResult,
    recover,
    recover_coordinatewise_complex,
    recover_coordinatewise_real,
    recover_gauss_newton,
    spectral_init,
)
from .sparse import SparseVerdict, certify_sparse_real_exact, falsify_sparse_complex
from .stability import LipschitzEstimate, anisotropy_ratio, estimate_lipschitz

__version__ = "0.1.0"
