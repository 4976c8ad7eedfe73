"""MLE of the diffusion coefficient for rough homogenization limits.

Exact fractional Gaussian simulation, Toeplitz covariance machinery with
spectral-norm bounds, the subsampled maximum-likelihood estimator, numeric
verification of the fractional-calculus inequalities behind it, and a
deterministic Monte Carlo experiment harness.
"""

from .errors import (
    AlignmentError,
    ConfigError,
    ConvergenceFailure,
    DomainError,
    FactorizationFailure,
    QuadratureError,
    RoughMleError,
    StabilityError,
)
from .estimator import (
    EstimateResult,
    SubsampleSpec,
    estimate_from_multiscale,
    increments,
    mle_sigma2,
    subsample,
)
from .fgn import (
    FgnCovariance,
    GridSpec,
    HurstParameter,
    bound_ratio,
    build_covariance,
    fbm_covariance,
    fgn_autocovariance,
    inverse_spectral_norm,
    quadratic_form_inverse,
    smallest_eigenvalue,
    spectral_bound_exponent,
)
from .fracops import (
    FracOrder,
    MarchaudDerivative,
    StepFunction,
    appendix_I_integral,
    c_H_constant,
    check_isometry,
    check_norm_bound,
    fractional_integral,
    h_inner_product,
    isometry_constant,
    marchaud_derivative,
    marchaud_l2_norm_sq,
    quadratic_lower_bound_check,
    sobolev_seminorm,
    verify_appendix_bounds,
    weighted_double_integral,
)
from .harness import ExperimentConfig, ExperimentRow, run_experiment, write_csv
from .paths import (
    MultiscaleParams,
    PathSample,
    homogenization_error,
    sample_fbm,
    sample_fgn,
    sample_multiscale,
)

__version__ = "0.1.0"
