"""Extreme-value statistics of high-temperature tridiagonal beta ensembles."""

from .errors import (
    AmbiguousRegimeError,
    ConfigError,
    DomainError,
    NumericalFault,
    RegimeMismatchError,
    SampleSizeError,
)
from .scaling import Regime, RegimeConfig, ScalingPair, classify_regime
from .special_functions import chi_survival, incomplete_gamma_bounds, log_gamma, reg_upper_gamma
from .theory import SurvivalSumResult, limit_intensity, survival_sum

__version__ = "0.1.0"

__all__ = [
    "AmbiguousRegimeError",
    "ConfigError",
    "DomainError",
    "NumericalFault",
    "Regime",
    "RegimeConfig",
    "RegimeMismatchError",
    "SampleSizeError",
    "ScalingPair",
    "SurvivalSumResult",
    "chi_survival",
    "classify_regime",
    "incomplete_gamma_bounds",
    "limit_intensity",
    "log_gamma",
    "reg_upper_gamma",
    "survival_sum",
]
