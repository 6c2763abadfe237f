"""Random coefficient autoregression X_t = M_t X_{t-1} + Z_t and its perpetuity.

Simulation in log scale, finite-sample verdicts on the convergence
conditions, exact analysis of constant coefficients, and a gallery of
worked counterexamples.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .constant import (
    C0Decision,
    MinimalPolynomial,
    SpectralDecomposition,
    c0_exact,
    minimal_polynomial,
    power_via_spectral,
    spectral_components,
)
from .diagnostics import (
    ConditionReport,
    LyapunovEstimate,
    Thresholds,
    Verdict,
    check_c0,
    check_condition_i,
    check_condition_ii_iii,
    check_condition_iv_v,
    check_condition_vi,
    check_moment_conditions,
    diagnose,
    estimate_lyapunov,
    test_distributional_identity,
)
from .errors import (
    BoundaryWarning,
    ConditioningError,
    ConfigError,
    DegeneracyError,
    DimensionError,
    FrameError,
    InvalidInput,
    PerpetuaError,
)
from .gallery import GalleryEntry, build, search_open_problem, verify
from .laws import (
    PairLaw,
    VectorLaw,
    law_composite,
    law_constant,
    law_frame_diagonal,
    law_from_json,
    law_gaussian_entries,
    law_mixture,
    sample,
    scalar_finite,
    vector_constant,
    vector_finite,
    vector_gaussian,
    vector_zero,
)
from .linalg import (
    ScaledProduct,
    ScaledVec,
    apply,
    product_extend,
    product_identity,
    product_of,
    spectral_norm,
    suffix_min_norm,
    suffix_min_norm_trace,
    suffix_min_term,
)
from .rng import RngStream
from .simulate import Ensemble, RunConfig, RunRecord, Trajectory, run_ensemble, run_trajectory
