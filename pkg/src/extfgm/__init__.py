"""Extended d-variate FGM copula: density, sampling, moment estimation and model checks."""
from .basis import cap_phi, phi
from .errors import (
    ConvergenceError,
    DomainError,
    ExtFGMError,
    InvalidParametersError,
    NonPositiveDensityError,
    SingularMatrixError,
    SingularPrefixError,
)
from .estimation import (
    CovMatrix,
    EstimationResult,
    confidence_interval,
    confidence_intervals,
    estimate_params,
    moment_E,
    plug_in_covariance,
    remark_variances,
    test_lambda2_zero,
)
from .marginals import BEARING_MARGINALS, GenTParams, gent_cdf, gent_pdf, gent_quantile, pit, pit_ranks
from .model import CopulaModel, cdf, density, subvector_model
from .params import (
    ParamVector,
    canonical_order,
    check_validity,
    mask_from_indices,
    project_to_valid,
    simulation_params,
)
from .sampling import (
    conditional_coeffs,
    conditional_cdf,
    empirical_copula,
    inverse_rosenblatt,
    invert_conditional,
    rosenblatt,
    sample,
)
from .selection import gof, loglik, reduce_model, score

__version__ = "0.1.0"

__all__ = [
    "cap_phi",
    "phi",
    "ConvergenceError",
    "DomainError",
    "ExtFGMError",
    "InvalidParametersError",
    "NonPositiveDensityError",
    "SingularMatrixError",
    "SingularPrefixError",
    "CovMatrix",
    "EstimationResult",
    "confidence_interval",
    "confidence_intervals",
    "estimate_params",
    "moment_E",
    "plug_in_covariance",
    "remark_variances",
    "test_lambda2_zero",
    "BEARING_MARGINALS",
    "GenTParams",
    "gent_cdf",
    "gent_pdf",
    "gent_quantile",
    "pit",
    "pit_ranks",
    "CopulaModel",
    "cdf",
    "density",
    "subvector_model",
    "ParamVector",
    "canonical_order",
    "check_validity",
    "mask_from_indices",
    "project_to_valid",
    "simulation_params",
    "conditional_coeffs",
    "conditional_cdf",
    "empirical_copula",
    "inverse_rosenblatt",
    "invert_conditional",
    "rosenblatt",
    "sample",
    "gof",
    "loglik",
    "reduce_model",
    "score",
]
