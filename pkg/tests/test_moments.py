from fractions import Fraction
import math

import numpy as np
import pytest
from scipy import stats

from pedops.errors import MomentUndefinedError, ParameterError
from pedops.moments import (
    RemarkConstants,
    ceil_sig,
    central_from_raw,
    central_from_raw_reproducing,
    central_moment_closed,
    central_moment_derived,
    central_moment_literal,
    check_remark_constants,
    first_central_moment,
    fit_remark_constants,
    moment_oracle,
    moment_report,
    phi,
    psi,
    raw_moment_closed,
    raw_moment_factorial,
    raw_moment_oracle,
    raw_moment_stirling,
)
from pedops.operator import ALPHA_ONE_OVER_N, AlphaRule, OperatorFamily, OperatorParams, special_case


def scipy_raw_moment(params, j, x):
    """E[(K/n)^j] from scipy's (beta-)binomial and (beta-)negative-binomial laws."""
    N, a = params.N, params.a
    if x == 0:
        return 0.0 if j else 1.0
    if params.lam == -1:
        if x == 1:
            return (N / params.n) ** j
        law = stats.binom(N, x) if a == 0 else stats.betabinom(N, x / a, (1 - x) / a)
    else:
        law = stats.nbinom(N, 1 / (1 + x)) if a == 0 else stats.betanbinom(N, 1 / a, x / a)
    return float(law.moment(j)) / params.n**j if j else 1.0


def exact_raw_moment(n, p, alpha, x, j):
    """Exact rational sum for lambda = -1."""
    N = n + p

    def fp(t, m):
        return math.prod((t + i * alpha for i in range(m)), start=Fraction(1))

    return sum(math.comb(N, k) * fp(x, k) * fp(1 - x, N - k) / fp(Fraction(1), N)
               * Fraction(k, n) ** j for k in range(N + 1))


GRID = [
    (OperatorParams(5, 0, 0.0, -1), 0.3),
    (OperatorParams(10, 2, 0.01, -1), 0.8),
    (OperatorParams(25, 2, ALPHA_ONE_OVER_N, -1), 0.5),
    (OperatorParams(5, 0, 0.0, 0), 2.0),
    (OperatorParams(10, 2, 0.01, 0), 0.5),
    (OperatorParams(5, 2, 0.2, 0), 1.5),
    (OperatorParams(25, 0, ALPHA_ONE_OVER_N, 0), 4.0),
    (OperatorParams(10, 2, ALPHA_ONE_OVER_N, 0), 5.0),
]


@pytest.mark.parametrize("params,x", GRID)
def test_closed_raw_moments_match_scipy_laws(params, x):
    for j in range(0, 5):
        ref = scipy_raw_moment(params, j, x)
        tol = 1e-8 if j <= 2 else 1e-6
        assert abs(raw_moment_closed(params, j, x) - ref) <= tol * (1 + abs(ref))
        assert abs(raw_moment_factorial(params, j, x) - ref) <= tol * (1 + abs(ref))
        assert abs(raw_moment_oracle(params, j, x) - ref) <= tol * (1 + abs(ref))


def test_oracle_matches_exact_rational_sums():
    alpha, x = Fraction(1, 20), Fraction(3, 10)
    params = OperatorParams(6, 2, float(alpha), -1)
    for j in range(0, 5):
        ref = float(exact_raw_moment(6, 2, alpha, x, j))
        assert raw_moment_oracle(params, j, float(x)) == pytest.approx(ref, rel=1e-14)


def test_raw_moment_examples():
    for x in (0.0, 0.3, 1.0):
        assert raw_moment_closed(special_case("bernstein", 7), 1, x) == pytest.approx(x)
    assert raw_moment_closed(OperatorParams(10, 2, 0.05, 0), 1, 1.0) == pytest.approx(1.2 / 0.95, rel=1e-15)
    assert raw_moment_closed(special_case("bernstein", 10), 2, 0.5) == pytest.approx(0.275, rel=1e-15)
    assert raw_moment_oracle(special_case("bernstein", 5), 1, 0.2) == pytest.approx(0.2, rel=1e-15)
    assert raw_moment_oracle(OperatorParams(5, 2, 0.1, 0), 0, 2.0) == pytest.approx(1.0, abs=1e-12)
    bask = special_case("baskakov", 10)
    assert raw_moment_oracle(bask, 4, 1.0) == pytest.approx(raw_moment_closed(bask, 4, 1.0), rel=1e-10)


def test_denominator_guard():
    with pytest.raises(MomentUndefinedError):
        raw_moment_closed(OperatorParams(5, alpha=0.25, lam=0), 4, 1.0)
    with pytest.raises(MomentUndefinedError):
        central_moment_derived(OperatorParams(5, alpha=0.5, lam=0), 2, 1.0)
    with pytest.raises(ParameterError):
        raw_moment_closed(OperatorParams(5), 5, 0.5)


def test_stirling_sum_flags():
    a = raw_moment_stirling(special_case("bernstein", 8), 1, 0.4)
    assert a.value == pytest.approx(0.4) and a.consistent
    b = raw_moment_stirling(OperatorParams(5, alpha=0.1), 1, 0.5)
    assert b.consistent and b.value == pytest.approx(b.oracle, rel=1e-12)
    c = raw_moment_stirling(OperatorParams(5, alpha=0.05, lam=0), 1, 1.0)
    assert not c.consistent
    assert c.derived == pytest.approx(c.oracle, rel=1e-10)
    for j in (2, 3, 4):
        assert raw_moment_stirling(OperatorParams(5, 2, 0.05, -1), j, 0.3).consistent
        assert raw_moment_stirling(OperatorParams(5, 2, 0.0, 0), j, 2.0).consistent


def test_central_from_raw_examples():
    x = 0.37
    assert central_from_raw([1, x, x**2, x**3, x**4], x) == pytest.approx([0, 0, 0, 0], abs=1e-15)
    bern = special_case("bernstein", 10)
    raw = [raw_moment_closed(bern, j, 0.5) for j in range(5)]
    assert central_from_raw(raw, 0.5)[1] == pytest.approx(0.025, rel=1e-12)
    for params, x in GRID:
        raw = [raw_moment_closed(params, j, x) for j in range(5)]
        assert central_from_raw(raw, x)[0] == pytest.approx(first_central_moment(params, x), rel=1e-10, abs=1e-14)


def test_specialized_identities_agree_when_first_moment_is_reproduced():
    for params, x in [(special_case("bernstein", 9), 0.35), (special_case("baskakov", 6), 2.5)]:
        raw = [raw_moment_closed(params, j, x) for j in range(5)]
        assert central_from_raw_reproducing(raw, x) == pytest.approx(central_from_raw(raw, x), rel=1e-10)


@pytest.mark.parametrize("params,x", GRID)
def test_transform_equals_direct_central_sums(params, x):
    raw = moment_oracle(params, x, order=4)
    cen = moment_oracle(params, x, order=4, center=x)
    for j, value in enumerate(central_from_raw(raw.values, x), start=1):
        assert abs(value - cen[j]) <= 1e-8 * (1 + abs(cen[j]))
        assert abs(central_moment_derived(params, j, x) - cen[j]) <= (1e-8 if j <= 2 else 1e-6) * (1 + abs(cen[j]))


def test_central_closed_examples():
    c = central_moment_closed(special_case("bernstein", 10), 2, 0.5)
    assert c.literal == pytest.approx(0.025) and c.consistent
    c = central_moment_closed(OperatorParams(10, 1, 0.0, -1), 1, 0.5)
    assert c.derived == pytest.approx(0.05) and c.literal == pytest.approx(0.05) and c.consistent
    c = central_moment_closed(OperatorParams(10, 0, 0.05, 0), 1, 1.0)
    assert c.derived == pytest.approx(0.05 / 0.95, rel=1e-14)
    assert c.literal == pytest.approx(0.005 / 0.95, rel=1e-14)
    assert not c.consistent and c.derived_consistent


def test_literal_forms_agree_for_finite_support():
    for params, x in GRID:
        if params.lam == -1:
            for j in range(1, 5):
                assert central_moment_literal(params, j, x) == pytest.approx(
                    central_moment_derived(params, j, x), rel=1e-10, abs=1e-15)


def test_psi_and_phi():
    for params, x in GRID:
        ph, ps = phi(params, x), psi(params, x)
        assert ph >= 0 and ps >= ph
        assert ps - ph == pytest.approx(first_central_moment(params, x) ** 2, rel=1e-9, abs=1e-15)


def test_moment_report_invariants():
    rep = moment_report(OperatorParams(10, 2, 0.01, 0), 1.5)
    assert rep.raw[0] == 1 and rep.raw_oracle[0] == pytest.approx(1, abs=1e-12)
    assert rep.phi == rep.central[1] >= 0 and rep.psi >= rep.phi
    assert rep.flags["central_literal_1"] == "inconsistent"
    assert all(rep.flags[f"raw_{j}"] == "consistent" for j in range(1, 5))
    assert all(rep.flags[f"central_{j}"] == "consistent" for j in range(1, 5))
    d = rep.as_dict()
    assert d["raw"][2] == rep.raw[2] and d["tail_mass_deficit"] <= 1e-12


def test_ceil_sig():
    assert ceil_sig(1.8734) == 1.9
    assert ceil_sig(0.2401) == 0.25
    assert ceil_sig(2.0) == 2.0
    assert ceil_sig(0.0) == 0.0


def test_remark_constants_for_bernstein_family():
    family = OperatorFamily(lam=-1)
    rc = fit_remark_constants(family, (0.0, 1.0), [10, 20, 40, 80])
    assert 0 < rc.A1 <= 0.26
    xs = (np.arange(100) + 0.5) / 100
    assert check_remark_constants(rc, family, xs, [10, 20, 40, 80, 160]) <= 1.0


def test_remark_constants_for_baskakov_stancu_family():
    family = OperatorFamily(lam=0, alpha=AlphaRule(Fraction(1, 2)))
    n_list = [50, 100, 200, 400]
    rc = fit_remark_constants(family, (0.0, 5.0), n_list)
    assert isinstance(rc, RemarkConstants) and rc.n_min == 50
    assert math.isfinite(rc.A1) and math.isfinite(rc.A2)
    fit_grid = np.linspace(0, 5, 257)
    validation = (fit_grid[1:] + fit_grid[:-1]) / 2
    assert check_remark_constants(rc, family, validation, n_list + [800]) <= 1.0


def test_remark_scaling_under_doubling():
    family = OperatorFamily(lam=0, alpha=AlphaRule(Fraction(1, 2)))
    rc = fit_remark_constants(family, (0.0, 5.0), [50, 100, 200, 400])
    for x in (0.5, 2.0, 4.5):
        for n in (50, 100, 200):
            rhs, rhs2 = rc.A1 * (1 + x * x) / n, rc.A1 * (1 + x * x) / (2 * n)
            assert rhs2 <= rhs / 2 + 1e-15
            assert central_moment_derived(family.at(2 * n), 2, x) <= rhs2


def test_fit_needs_four_n():
    with pytest.raises(ParameterError):
        fit_remark_constants(OperatorFamily(), (0, 1), [10, 20, 40])
