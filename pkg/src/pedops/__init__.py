"""Generalized Polya-Eggenberger positive linear operators L_n^(alpha).

The package evaluates the operators, their moments (closed forms checked
against direct summation) and the usual error bounds.
"""

from .operator import (
    ALPHA_ONE_OVER_N,
    AlphaRule,
    OperatorFamily,
    OperatorParams,
    TruncationPolicy,
    apply,
    special_case,
    special_case_family,
    weight,
    weight_ratio,
    weight_series,
)

__all__ = [
    "ALPHA_ONE_OVER_N", "AlphaRule", "OperatorFamily", "OperatorParams", "TruncationPolicy",
    "apply", "special_case", "special_case_family", "weight", "weight_ratio", "weight_series",
]
