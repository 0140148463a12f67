import math
from fractions import Fraction

import numpy as np
import pytest

from pedops.analysis import (
    LipschitzClass,
    calibrate_C,
    convergence_experiment,
    estimate_lipschitz_M,
    fit_slope,
    korovkin_check,
    lipschitz_bound,
    local_bound,
    modulus,
    rate_bound,
    rate_constant,
    weighted_bound,
)
from pedops.analysis.bounds import check_growth, check_star_space
from pedops.analysis.moduli import KINDS
from pedops.errors import ClassMembershipError, EvaluationError, ParameterError
from pedops.functions import builtin, from_expression
from pedops.moments import RemarkConstants, fit_remark_constants, phi
from pedops.operator import ALPHA_ONE_OVER_N, AlphaRule, OperatorFamily, OperatorParams, special_case

CONST = builtin("constant")
SQRT = builtin("sqrt")
SQUARE = builtin("square")


@pytest.mark.parametrize("kind", KINDS)
def test_modulus_of_constant_is_zero(kind):
    assert modulus(CONST, kind, 0.3, (0.0, 1.0), domain_cap=1.0).value == 0.0


def test_modulus_examples():
    assert modulus(builtin("identity"), "first_order", 0.1, (0.0, 1.0)).value == pytest.approx(0.1, rel=1e-12)
    assert modulus(SQUARE, "second_order", 0.1, (0.0, 1.0)).value == pytest.approx(0.02, rel=1e-12)
    # restricted to [0, 2]: |(x+h)^2 - x^2| is largest at x + h = 2
    assert modulus(SQUARE, "restricted_b", 0.5, (0.0, 2.0)).value == pytest.approx(1.75, rel=1e-12)
    w = modulus(SQUARE, "weighted", 0.5, (0.0, math.inf), domain_cap=50.0)
    assert 0 < w.value < 1 and w.domain_cap == 50.0


@pytest.mark.parametrize("src", ["sin(3*x)", "abs(x-0.5)", "sqrt(x)", "sin(20*x)", "x^2/(1+x)"])
@pytest.mark.parametrize("kind", KINDS)
def test_modulus_nondecreasing_in_delta(src, kind):
    f = from_expression(src)
    dom = (0.0, 50.0) if kind == "weighted" else (0.0, 1.0)
    values = [modulus(f, kind, d, dom, domain_cap=dom[1]).value for d in np.linspace(1e-5, 0.45, 25)]
    assert all(a <= b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("src", ["sin(x)", "x^2/(1+x)", "sqrt(1+x)"])
def test_weighted_modulus_subadditivity_surrogate(src):
    f = from_expression(src)
    dom, cap, grid_n = (0.0, math.inf), 20.0, 1024
    spacing = cap / (grid_n - 1)
    xs = np.linspace(0, cap + 4, 4097)
    slope_cap = float(np.max(np.abs(np.gradient(f(xs), xs))))
    tol = 2 * spacing * slope_cap
    for delta in (0.05, 0.2, 0.5):
        base = modulus(f, "weighted", delta, dom, grid_n, domain_cap=cap).value
        for m in (1, 2, 3):
            big = modulus(f, "weighted", m * delta, dom, grid_n, domain_cap=cap).value
            assert big <= (1 + m) * base + tol


def test_modulus_errors():
    with pytest.raises(ParameterError):
        modulus(SQUARE, "first_order", 0.1, (0, 1), grid_n=10)
    with pytest.raises(ParameterError):
        modulus(SQUARE, "weighted", 0.1, (0, math.inf))
    with pytest.raises(ParameterError):
        modulus(SQUARE, "fancy", 0.1, (0, 1))
    with pytest.raises(EvaluationError) as exc:
        modulus(from_expression("log(x)"), "first_order", 0.1, (0, 1))
    assert exc.value.point == 0.0


def test_lipschitz_estimates():
    assert estimate_lipschitz_M(CONST, 0.5, (0, 1)).M == 0.0
    m_sqrt = estimate_lipschitz_M(SQRT, 1.0, (0, 1)).M
    assert 0.9 < m_sqrt <= 1.0 + 1e-12
    m_id = estimate_lipschitz_M(builtin("identity"), 1.0, (0, 1)).M
    assert m_id == pytest.approx(math.sqrt(2), rel=1e-2) and m_id <= math.sqrt(2) + 1e-12
    with pytest.raises(ClassMembershipError):
        estimate_lipschitz_M(from_expression("exp(x)"), 1.0, (0, 40))
    with pytest.raises(ParameterError):
        estimate_lipschitz_M(SQRT, 1.5, (0, 1))


def test_local_bound_examples():
    bern = special_case("bernstein", 10)
    rep = local_bound(bern, SQUARE, 0.5, calibrated_C=3.0)
    assert rep.constants["psi"] == pytest.approx(0.025) and rep.constants["phi"] == pytest.approx(0.025)
    assert rep.constants["omega"] == 0.0
    # second difference of x^2 is 2h^2, h on the 1e-4 lattice just below sqrt(0.025)/2
    assert rep.constants["omega2"] == pytest.approx(2 * 0.079**2, rel=1e-12)
    assert rep.bound_value == 3.0 * rep.constants["omega2"]
    assert rep.measured_error == pytest.approx(0.025, rel=1e-12)
    assert rep.holds
    const = local_bound(OperatorParams(10, 2, 0.05, 0), CONST, 1.0, calibrated_C=1.0)
    assert const.bound_value == 0.0 and const.measured_error <= 1e-12
    at0 = local_bound(special_case("baskakov", 10), SQUARE, 0.0, calibrated_C=1.0)
    assert at0.measured_error == 0.0 and at0.bound_value >= 0


def test_calibrate_C_is_clamped():
    bern = special_case("bernstein", 10)
    assert calibrate_C([(bern, CONST, 0.5)]) == 1.0
    c = calibrate_C([(bern, from_expression("sin(3*x)"), x) for x in (0.3, 0.5, 0.7)])
    assert 1.0 <= c <= 10.0


def test_lipschitz_bound_examples():
    rep = lipschitz_bound(special_case("bernstein", 64), SQRT, _lip(1.0), 0.25)
    assert rep.bound_value == pytest.approx(math.sqrt(0.75 / 64), rel=1e-12)
    assert rep.bound_value == pytest.approx(0.108, abs=5e-4)
    assert rep.holds
    bask = special_case("baskakov", 50)
    lip = estimate_lipschitz_M(SQRT, 1.0, (0, 50))
    rep = lipschitz_bound(bask, SQRT, lip, 1.0)
    assert math.isfinite(rep.bound_value) and rep.holds
    assert lipschitz_bound(bask, CONST, estimate_lipschitz_M(CONST, 0.5, (0, 5)), 1.0).bound_value == 0.0
    with pytest.raises(ParameterError, match="x=0"):
        lipschitz_bound(bask, SQRT, lip, 0.0)


def _lip(M, beta=1.0):
    return LipschitzClass(beta, M)


def test_weighted_bound_examples():
    bask = special_case("baskakov", 100)
    rep = weighted_bound(bask, SQUARE, 2.0, 1.0)
    assert rep.holds and rep.constants["Phi"] == pytest.approx(phi(bask, 2.0), rel=1e-12)
    rep4 = weighted_bound(special_case("baskakov", 400), SQUARE, 2.0, 1.0)
    assert rep.constants["Phi"] / rep4.constants["Phi"] == pytest.approx(4.0, rel=1e-12)
    const = weighted_bound(bask, CONST, 2.0, 1.0)
    assert const.constants["omega_b"] == 0.0 and const.measured_error <= 1e-12
    with pytest.raises(ClassMembershipError):
        weighted_bound(bask, from_expression("x^3"), 2.0, 1.0)
    with pytest.raises(ParameterError):
        weighted_bound(special_case("bernstein", 10), SQUARE, 2.0, 1.0)
    with pytest.raises(ClassMembershipError):
        check_growth(SQUARE, 0.5, (0, 3))


def test_korovkin_table():
    rows = korovkin_check(OperatorFamily(lam=-1), [10, 40])
    for r in rows:
        if r["i"] == 0:
            assert r["norm"] <= 1e-15
        if r["i"] == 2:
            assert r["norm"] <= 1 / (4 * r["n"]) + 1e-15
    for lam in (-1, 0):
        rows = korovkin_check(OperatorFamily(lam=lam, alpha=ALPHA_ONE_OVER_N, p=1), [10, 40])
        by = {(r["n"], r["i"]): r for r in rows}
        for r in rows:
            if r["i"] == 1:
                assert r["norm"] <= r["envelope"] * (1 + 1e-12)
        for i in (1, 2):
            assert by[(10, i)]["norm"] / by[(40, i)]["norm"] >= 1.8


def test_rate_constant():
    assert rate_constant(1.0, 1.0) == 8.0


def test_rate_bound():
    family = OperatorFamily(lam=0, alpha=AlphaRule(Fraction(1, 2)))
    remark = fit_remark_constants(family, (0.0, 5.0), [25, 50, 100, 200])
    f = from_expression("x^2/(1+x)")
    rep = rate_bound(family.at(25), f, remark, grid_n=65)
    assert rep.holds and rep.constants["K"] == rate_constant(remark.A1, remark.A2)
    const = rate_bound(family.at(25), CONST, remark, grid_n=33)
    assert const.measured_error <= 1e-12 and const.bound_value >= 0
    with pytest.raises(ParameterError, match="fit the remark constants A1, A2 first"):
        rate_bound(family.at(25), f, None)
    with pytest.raises(ParameterError):
        rate_bound(family.at(10), f, remark)
    with pytest.raises(ClassMembershipError):
        check_star_space(from_expression("x^3"), 50.0)


def test_rate_left_side_stable_in_domain_cap():
    family = OperatorFamily(lam=0, alpha=AlphaRule(Fraction(1, 2)))
    remark = RemarkConstants(2.0, 0.61, 25, (0.0, 5.0))
    f = from_expression("x^2/(1+x)")
    # the grid step is 0.5 for both caps, so the smaller grid is a prefix of the larger one
    a = rate_bound(family.at(25), f, remark, domain_cap=40, grid_n=81)
    b = rate_bound(family.at(25), f, remark, domain_cap=60, grid_n=121)
    assert a.measured_error == b.measured_error


def test_fit_slope_excludes_noise():
    slope, used, excluded = fit_slope([10, 20, 40, 80], [1e-3, 5e-4, 1e-14, 1.25e-4])
    assert used == 3 and excluded == [40]
    assert slope == pytest.approx(-1.0, abs=0.05)
    assert math.isnan(fit_slope([10, 20], [1e-20, 1e-20])[0])


def test_convergence_examples():
    bern = OperatorFamily(lam=-1)
    table = convergence_experiment(bern, SQUARE, [0.5], [5, 10, 20, 40, 80])
    row = table.rows[0]
    for n, e in zip(table.n_list, row.errors):
        assert e == pytest.approx(0.25 / n, abs=1e-12)
    assert row.slope == pytest.approx(-1.0, abs=0.01)
    linear = convergence_experiment(bern, builtin("identity"), [0.3, 0.7], [5, 10, 20, 40])
    assert all(math.isnan(r.slope) for r in linear.rows)
    assert math.isnan(linear.summary()["median_slope"])
    bs = OperatorFamily(lam=0, alpha=ALPHA_ONE_OVER_N)
    table = convergence_experiment(bs, builtin("exp_neg"), [0.5, 1.0, 2.0], [5, 10, 20, 40, 80])
    assert table.summary()["median_slope"] <= -0.9
    with pytest.raises(ParameterError):
        convergence_experiment(bern, SQUARE, [0.5], [5, 10, 20])
    with pytest.raises(ParameterError):
        convergence_experiment(bern, SQUARE, [0.5], [5, 10, 30, 40])
