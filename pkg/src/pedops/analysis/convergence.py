"""Empirical convergence rates: |L_n f(x) - f(x)| against n on a log-log scale."""

import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..operator import DEFAULT_POLICY, apply

NOISE_FLOOR = 1e-13


@dataclass
class RateRow:
    x: float
    errors: list
    tails: list
    slope: float            # NaN when fewer than two usable points
    used: int
    excluded: list = field(default_factory=list)


@dataclass
class RateTable:
    n_list: list
    rows: list

    @property
    def slopes(self):
        return [r.slope for r in self.rows if not math.isnan(r.slope)]

    def summary(self):
        s = self.slopes
        if not s:
            return {"min_slope": math.nan, "median_slope": math.nan, "fitted_points": 0}
        return {"min_slope": min(s), "median_slope": statistics.median(s), "fitted_points": len(s)}


def fit_slope(n_values, errors, floor=NOISE_FLOOR):
    """Least-squares slope of log(error) vs log(n), skipping errors below the floor."""
    keep = [(n, e) for n, e in zip(n_values, errors) if e >= floor]
    excluded = [n for n, e in zip(n_values, errors) if e < floor]
    if len(keep) < 2:
        return math.nan, len(keep), excluded
    ln = np.log([k[0] for k in keep])
    le = np.log([k[1] for k in keep])
    slope = float(np.polyfit(ln, le, 1)[0])
    return slope, len(keep), excluded


def _is_geometric(n_list):
    ratios = [b / a for a, b in zip(n_list, n_list[1:])]
    return all(abs(r - ratios[0]) <= 1e-9 * ratios[0] for r in ratios) and ratios[0] > 1


def convergence_experiment(family, f, x_grid, n_list, policy=DEFAULT_POLICY, floor=NOISE_FLOOR):
    n_list = list(n_list)
    if len(n_list) < 4:
        raise ParameterError("n_list needs at least 4 entries")
    if not _is_geometric(n_list):
        raise ParameterError(f"n_list must be geometric and increasing, got {n_list}")
    rows = []
    for x in x_grid:
        x = float(x)
        fx = float(np.asarray(f(np.array([x])), dtype=float)[0])
        errors, tails = [], []
        for n in n_list:
            res = apply(family.at(n), f, x, policy)
            errors.append(abs(res.value - fx))
            tails.append(res.tail_deficit)
        slope, used, excluded = fit_slope(n_list, errors, floor)
        rows.append(RateRow(x, errors, tails, slope, used, excluded))
    return RateTable(n_list, rows)
