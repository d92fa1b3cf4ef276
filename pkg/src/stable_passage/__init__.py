"""Monte-Carlo and analytic toolkit for stable-process first-passage laws."""

from stable_passage.model import (
    DerivedConstants,
    ParameterError,
    StableParams,
    asymptote,
    characteristic_exponent,
    derived_constants,
    h_functions,
    overshoot_cdf_exact,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "DerivedConstants",
    "ParameterError",
    "StableParams",
    "asymptote",
    "characteristic_exponent",
    "derived_constants",
    "h_functions",
    "overshoot_cdf_exact",
    "validate_params",
    "__version__",
]
