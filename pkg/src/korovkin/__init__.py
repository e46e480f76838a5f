"""Quantitative operator-version Korovkin bounds, positive operator examples
and circulant preconditioners for Toeplitz matrices."""

from .bounds import (
    BoundReport,
    korovkin_convergence_check,
    operator_bound,
    operator_mu,
    shisha_mond_bound,
)
from .expr import ExpressionError, parse_expression
from .grid import (
    CIRCLE,
    UNIT,
    GridFunction,
    Interval,
    RateFit,
    check_pointwise_inequality,
    fit_rate,
    modulus_of_continuity,
    sup_norm,
)
from .operators import WeightedCompositionOperator

__all__ = [
    "BoundReport",
    "CIRCLE",
    "ExpressionError",
    "GridFunction",
    "Interval",
    "RateFit",
    "UNIT",
    "WeightedCompositionOperator",
    "check_pointwise_inequality",
    "fit_rate",
    "korovkin_convergence_check",
    "modulus_of_continuity",
    "operator_bound",
    "operator_mu",
    "parse_expression",
    "shisha_mond_bound",
    "sup_norm",
]
