from .bounds import (BoundReport, calibrate_C, korovkin_check, lipschitz_bound, local_bound,
                     rate_bound, rate_constant, weighted_bound)
from .convergence import RateTable, convergence_experiment, fit_slope
from .moduli import LipschitzClass, ModulusEstimate, estimate_lipschitz_M, modulus

__all__ = [
    "BoundReport", "LipschitzClass", "ModulusEstimate", "RateTable", "calibrate_C",
    "convergence_experiment", "estimate_lipschitz_M", "fit_slope", "korovkin_check",
    "lipschitz_bound", "local_bound", "modulus", "rate_bound", "rate_constant",
    "weighted_bound",
]
