"""Verification suites: closed forms and special cases checked against the oracle.

A suite returns a `Ledger`. Every comparison that fails is either matched to
a registered `Discrepancy` (a literal closed form known to disagree with
direct summation, whose corrected replacement must still agree) or left as
an unexplained failure.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ParameterError
from .moments import (
    agrees,
    central_from_raw,
    central_moment_derived,
    central_moment_literal,
    first_central_moment,
    moment_oracle,
    raw_moment_closed,
    raw_moment_factorial,
    raw_moment_stirling_value,
)
from .operator import (
    ALPHA_ONE_OVER_N,
    OperatorParams,
    special_case,
    weight_series,
)

SUITES = ("moments", "central", "special-cases", "stirling", "lemma1", "all")
SUITE_ALIASES = {"lemma1": "stirling"}   # the command-line interface fixes this token
LAMBDA_X_GRID = {
    -1: (0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9, 1.0),
    0: (0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0),
}
FIRST_CENTRAL_TOL = 1e-10
WEIGHT_TOL = 1e-12
EVIDENCE_LIMIT = 3


def standard_grid():
    """(params, x) over lambda, n in {5,10,25}, p in {0,2}, alpha in {0, 0.01, 1/n}."""
    for lam in (-1, 0):
        for n in (5, 10, 25):
            for p in (0, 2):
                for alpha in (0.0, 0.01, ALPHA_ONE_OVER_N):
                    params = OperatorParams(n=n, p=p, alpha=alpha, lam=lam)
                    for x in LAMBDA_X_GRID[lam]:
                        yield params, x


@dataclass(frozen=True)
class Discrepancy:
    id: str
    description: str
    checks: tuple           # check names the entry may explain
    replacement: str

    def applies(self, check, params):
        return check in self.checks and params.lam == 0 and params.a > 0


REGISTRY = (
    Discrepancy(
        "first-central-moment-shift",
        "the literal first central moment has (p x + (lambda+1) alpha) in the numerator; "
        "summation gives (p x + n x (lambda+1) alpha). The same term enters the literal "
        "third and fourth central moments, so they disagree too when lambda = 0 and alpha > 0",
        ("central_literal_1", "central_literal_3", "central_literal_4"),
        "central_moment_derived"),
    Discrepancy(
        "stirling-sum-denominator",
        "the Stirling-number sum for L(t^j) divides by 1^[j-i+lambda+1,-alpha]; for lambda = 0 "
        "and alpha > 0 summation requires prod_{l=1..m}(1 - l alpha) with m = j-i instead",
        ("stirling_1", "stirling_2", "stirling_3", "stirling_4"),
        "raw_moment_factorial"),
)


@dataclass
class Ledger:
    suite: str
    checks: int = 0
    failures: list = field(default_factory=list)      # unexplained
    explained: dict = field(default_factory=dict)     # id -> list of evidence rows

    def record(self, name, params, x, value, reference, ok, replacement=None, replacement_ok=None):
        self.checks += 1
        if ok:
            return
        row = {"check": name, "params": params.as_dict(), "x": x, "value": value, "oracle": reference}
        entry = next((d for d in REGISTRY if d.applies(name, params)), None)
        if entry is not None and replacement is not None:
            row["replacement"] = replacement
            row["replacement_ok"] = bool(replacement_ok)
            if replacement_ok:
                self.explained.setdefault(entry.id, []).append(row)
                return
        self.failures.append(row)

    def merge(self, other):
        self.checks += other.checks
        self.failures.extend(other.failures)
        for key, rows in other.explained.items():
            self.explained.setdefault(key, []).extend(rows)

    @property
    def strict_ok(self):
        """No flag raised at all."""
        return not self.failures and not self.explained

    @property
    def ok(self):
        """Every mismatch is registered and its replacement agrees with the oracle."""
        return not self.failures

    def exit_code(self):
        good = self.ok if self.suite == "all" else self.strict_ok
        return 0 if good else 2

    def as_dict(self):
        discrepancies = []
        for d in REGISTRY:
            rows = self.explained.get(d.id)
            if not rows:
                continue
            worst = sorted(rows, key=lambda r: -abs(r["value"] - r["oracle"]))[:EVIDENCE_LIMIT]
            discrepancies.append({
                "id": d.id, "status": "expected", "description": d.description,
                "replacement": d.replacement, "count": len(rows), "evidence": worst})
        return {
            "suite": self.suite,
            "status": "pass" if self.exit_code() == 0 else "fail",
            "checks": self.checks,
            "unexplained_failures": self.failures,
            "discrepancies": discrepancies,
        }


# -- suites ----------------------------------------------------------------


def suite_moments(grid=None):
    """Raw closed forms, corrected central forms and the central transform against summation."""
    led = Ledger("moments")
    for params, x in grid or standard_grid():
        raw_o = moment_oracle(params, x, order=4)
        cen_o = moment_oracle(params, x, order=4, center=x)
        for j in range(0, 5):
            v = raw_moment_closed(params, j, x)
            led.record(f"raw_{j}", params, x, v, raw_o[j], agrees(v, raw_o[j], j))
        transformed = central_from_raw(raw_o.values, x)
        for j in range(1, 5):
            v = central_moment_derived(params, j, x)
            led.record(f"central_{j}", params, x, v, cen_o[j], agrees(v, cen_o[j], j))
            t = transformed[j - 1]
            led.record(f"transform_{j}", params, x, t, cen_o[j],
                       abs(t - cen_o[j]) <= 1e-8 * (1 + abs(cen_o[j])))
        s = first_central_moment(params, x)
        led.record("first_central", params, x, s, cen_o[1],
                   abs(s - cen_o[1]) <= FIRST_CENTRAL_TOL * (1 + abs(cen_o[1])))
    return led


def suite_central(grid=None):
    """Printed central-moment formulas against the transform of oracle raw moments."""
    led = Ledger("central")
    for params, x in grid or standard_grid():
        oracle = central_from_raw(moment_oracle(params, x, order=4).values, x)
        for j in range(1, 5):
            ref = oracle[j - 1]
            lit = central_moment_literal(params, j, x)
            der = central_moment_derived(params, j, x)
            led.record(f"central_literal_{j}", params, x, lit, ref, agrees(lit, ref, j),
                       der, agrees(der, ref, j))
    return led


def suite_stirling(grid=None):
    """Stirling-number sum for L(t^j), j = 1..4, against summation."""
    led = Ledger("stirling")
    for params, x in grid or standard_grid():
        raw_o = moment_oracle(params, x, order=4)
        for j in range(1, 5):
            v = raw_moment_stirling_value(params, j, x)
            fixed = raw_moment_factorial(params, j, x)
            led.record(f"stirling_{j}", params, x, v, raw_o[j], agrees(v, raw_o[j], j),
                       fixed, agrees(fixed, raw_o[j], j))
    return led


def _rising(t, m, step=1.0):
    return math.prod(t + i * step for i in range(m))


def displayed_weight(kind, n, k, x, p=0, alpha=0.0):
    """Weight of a named classical operator from its textbook product form."""
    if kind == "lupas":
        return (2 * math.factorial(n) / math.factorial(2 * n) * math.comb(n, k)
                * _rising(n * x, k) * _rising((1 - x) * n, n - k))
    if kind in ("bernstein", "bernstein_schurer"):
        N = n + p
        return math.comb(N, k) * x**k * (1 - x) ** (N - k)
    if kind in ("stancu", "schurer_stancu"):
        N = n + p
        return (math.comb(N, k) * _rising(x, k, alpha) * _rising(1 - x, N - k, alpha)
                / _rising(1.0, N, alpha))
    if kind in ("baskakov", "baskakov_schurer"):
        N = n + p
        return math.comb(N + k - 1, k) * x**k / (1 + x) ** (N + k)
    if kind in ("baskakov_stancu", "stancu_schurer"):
        N = n + p
        return (math.comb(N + k - 1, k) * _rising(x, k, alpha) * _rising(1.0, N, alpha)
                / _rising(1 + x, N + k, alpha))
    raise ParameterError(f"unknown special case {kind!r}")


def _compare_weights(led, name, params, x, reference, count=None):
    w = weight_series(params, x).weights
    m = len(reference) if count is None else min(count, len(reference), len(w))
    ref = np.asarray(reference[:m], dtype=float)
    got = np.zeros(m)
    got[: min(m, len(w))] = w[:m]
    err = float(np.max(np.abs(got - ref))) if m else 0.0
    led.record(name, params, x, err, 0.0, err <= WEIGHT_TOL)


def suite_special_cases():
    """Binomial and negative-binomial collapse, Lupas at n = 1 and the product forms."""
    led = Ledger("special-cases")
    for n in (5, 25):
        for x in LAMBDA_X_GRID[-1]:
            _compare_weights(led, "bernstein_binomial", special_case("bernstein", n), x,
                             stats.binom.pmf(np.arange(n + 1), n, x))
        for x in LAMBDA_X_GRID[0]:
            k = np.arange(400)
            _compare_weights(led, "baskakov_negative_binomial", special_case("baskakov", n), x,
                             stats.nbinom.pmf(k, n, 1 / (1 + x)), count=400)
    for x in LAMBDA_X_GRID[-1]:
        _compare_weights(led, "lupas_n1", special_case("lupas", 1), x, [1 - x, x])

    cases = [("bernstein", {}), ("bernstein_schurer", {"p": 2}), ("stancu", {"alpha": 0.05}),
             ("schurer_stancu", {"p": 2, "alpha": 0.05}), ("lupas", {}),
             ("baskakov", {}), ("baskakov_schurer", {"p": 2}),
             ("baskakov_stancu", {"alpha": 0.05}), ("stancu_schurer", {"p": 2, "alpha": 0.05})]
    for kind, kw in cases:
        for n in (5, 12):
            params = special_case(kind, n, **kw)
            alpha = params.a
            xs = LAMBDA_X_GRID[params.lam][1:-1] if params.lam == -1 else LAMBDA_X_GRID[0][1:]
            for x in xs:
                top = params.N + 1 if params.lam == -1 else 60
                ref = [displayed_weight(kind, n, k, x, p=kw.get("p", 0), alpha=alpha)
                       for k in range(top)]
                _compare_weights(led, f"{kind}_product_form", params, x, ref, count=top)
    return led


def run_suite(name):
    if name not in SUITES:
        raise ParameterError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    name = SUITE_ALIASES.get(name, name)
    if name == "moments":
        return suite_moments()
    if name == "central":
        return suite_central()
    if name == "stirling":
        return suite_stirling()
    if name == "special-cases":
        return suite_special_cases()
    led = Ledger("all")
    for part in (suite_moments(), suite_central(), suite_stirling(), suite_special_cases()):
        led.merge(part)
    return led
