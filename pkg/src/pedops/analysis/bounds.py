"""Error bounds for L_n^(alpha) and the weighted Korovkin check.

Each bound is returned as a BoundReport holding the bound, the measured
error |L_n f - f| and every constant that went into the bound.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ClassMembershipError, ParameterError
from ..moments import first_central_moment, phi, psi, raw_moment_closed
from ..operator import DEFAULT_POLICY, apply
from .moduli import DEFAULT_GRID, estimate_lipschitz_M, modulus

DEFAULT_CAP = 50.0
DEFAULT_X_POINTS = 257
C_RANGE = (1.0, 10.0)


@dataclass
class BoundReport:
    theorem_id: str
    x: object                # point or (lo, hi) interval
    bound_value: float
    measured_error: float
    constants: dict
    tail_deficit: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def holds(self):
        return self.measured_error <= self.bound_value

    def as_dict(self):
        x = list(self.x) if isinstance(self.x, tuple) else self.x
        return {"theorem_id": self.theorem_id, "x": x, "bound_value": self.bound_value,
                "measured_error": self.measured_error, "holds": self.holds,
                "constants": dict(self.constants), "tail_deficit": self.tail_deficit,
                "notes": list(self.notes)}


def operator_domain(params, domain_cap=DEFAULT_CAP):
    return (0.0, 1.0) if params.lam == -1 else (0.0, float(domain_cap))


def measured_error(params, f, x, policy=DEFAULT_POLICY):
    res = apply(params, f, x, policy)
    fx = float(np.asarray(f(np.array([x])), dtype=float)[0])
    return abs(res.value - fx), res.tail_deficit


# -- local bound with first and second order moduli -------------------------


def local_terms(params, f, x, domain_cap=DEFAULT_CAP, grid_n=DEFAULT_GRID):
    """(omega(f, shift), omega_2(f, sqrt(psi)/2), psi, shift) at x.

    The first modulus is taken at the first central moment
    x (p + n (lambda+1) alpha) / (n (1 - (lambda+1) alpha)); a variant with
    x in place of n in that denominator is not used since it blows up as x -> 0.
    """
    dom = operator_domain(params, domain_cap)
    shift = first_central_moment(params, x)
    ps = psi(params, x)
    w1 = modulus(f, "first_order", shift, dom, grid_n).value if shift > 0 else 0.0
    delta2 = math.sqrt(max(ps, 0.0)) / 2
    w2 = modulus(f, "second_order", delta2, dom, grid_n).value if delta2 > 0 else 0.0
    return w1, w2, ps, shift


def calibrate_C(cases, domain_cap=DEFAULT_CAP, grid_n=DEFAULT_GRID, policy=DEFAULT_POLICY):
    """Smallest C making every calibration case hold, clamped to [1, 10].

    `cases` is an iterable of (params, f, x).
    """
    worst = -math.inf
    for params, f, x in cases:
        w1, w2, _, _ = local_terms(params, f, x, domain_cap, grid_n)
        err, _ = measured_error(params, f, x, policy)
        if w2 > 0:
            worst = max(worst, (err - w1) / w2)
    return min(max(worst, C_RANGE[0]), C_RANGE[1])


def local_bound(params, f, x, calibrated_C, domain_cap=DEFAULT_CAP, grid_n=DEFAULT_GRID,
                policy=DEFAULT_POLICY):
    """omega(f, shift) + C omega_2(f, sqrt(psi)/2) against |L_n f(x) - f(x)|."""
    params.check_x(x)
    w1, w2, ps, shift = local_terms(params, f, x, domain_cap, grid_n)
    err, tail = measured_error(params, f, x, policy)
    return BoundReport(
        "local", float(x), w1 + calibrated_C * w2, err,
        {"psi": ps, "phi": phi(params, x), "shift": shift, "omega": w1, "omega2": w2,
         "C": calibrated_C, "domain_cap": operator_domain(params, domain_cap)[1]},
        tail, ["first modulus taken at the first central moment (denominator n, not x)"])


# -- Lipschitz-type class ---------------------------------------------------


def lipschitz_bound(params, f, lip, x, policy=DEFAULT_POLICY):
    """M (phi(x)/x)^(beta/2) for f in Lip*_M(beta)."""
    params.check_x(x)
    if x <= 0:
        raise ParameterError("bound undefined at x=0")
    ph = phi(params, x)
    bound = lip.M * (ph / x) ** (lip.beta / 2)
    err, tail = measured_error(params, f, x, policy)
    return BoundReport("lipschitz", float(x), bound, err,
                       {"phi": ph, "M": lip.M, "beta": lip.beta}, tail)


def fit_lipschitz(f, beta, params, grid_n=257, domain_cap=DEFAULT_CAP):
    return estimate_lipschitz_M(f, beta, operator_domain(params, domain_cap), grid_n)


# -- weighted space bound on [0, b] ------------------------------------------


def check_growth(f, M_f, domain, points=1025):
    """Raise unless |f(x)| <= M_f (1 + x^2) at every sampled x of domain."""
    xs = np.linspace(domain[0], domain[1], points)
    ratio = np.abs(np.asarray(f(xs), dtype=float)) / (1 + xs**2)
    i = int(np.argmax(ratio))
    if ratio[i] > M_f * (1 + 1e-12):
        raise ClassMembershipError(
            f"f not in C_phi with given M_f: |f(x)|/(1+x^2) = {ratio[i]:.6g} > {M_f} at x = {xs[i]:.6g}")
    return float(ratio[i])


def weighted_bound(params, f, b, M_f, domain_cap=DEFAULT_CAP, x_points=DEFAULT_X_POINTS,
                   grid_n=DEFAULT_GRID, policy=DEFAULT_POLICY):
    """4 M_f (1+b^2) Phi + 2 omega_{b+1}(f, sqrt(Phi)), Phi = max over [0, b] of phi(x).

    The measured error is the grid sup of |L_n f - f| over [0, b].
    """
    if b <= 0:
        raise ParameterError("b must be > 0")
    lo, hi = params.domain
    if b > hi:
        raise ParameterError(f"b = {b} exceeds the operator domain [0, {hi}]")
    check_growth(f, M_f, operator_domain(params, max(domain_cap, b + 1)))
    xs = np.linspace(0.0, b, x_points)
    Phi = max(phi(params, float(x)) for x in xs)
    top = min(b + 1, hi)
    w_b = modulus(f, "restricted_b", math.sqrt(Phi), (0.0, top), grid_n).value if Phi > 0 else 0.0
    bound = 4 * M_f * (1 + b * b) * Phi + 2 * w_b
    errs, tails = zip(*(measured_error(params, f, float(x), policy) for x in xs))
    i = int(np.argmax(errs))
    return BoundReport("weighted", (0.0, float(b)), bound, float(errs[i]),
                       {"Phi": Phi, "M_f": M_f, "b": b, "omega_b": w_b, "argmax_x": float(xs[i])},
                       float(max(tails)), ["Phi read as the sup of phi over [0, b]"])


# -- weighted Korovkin conditions --------------------------------------------


def korovkin_check(family, n_list, domain_cap=DEFAULT_CAP, x_points=DEFAULT_X_POINTS):
    """Rows (n, i, sup |L(t^i) - x^i|/(1+x^2), envelope) from the closed forms.

    The envelope is (p + (lambda+1) alpha n)/(n (1 - (lambda+1) alpha)) for i = 1
    and |coefficient bound| for i = 2 (NaN when none is stated, i.e. i = 0).
    """
    rows = []
    for n in n_list:
        params = family.at(n)
        xs = np.linspace(0.0, operator_domain(params, domain_cap)[1], x_points)
        weight = 1 + xs**2
        a, mu, p, N = params.a, params.mu, params.p, params.N
        for i in (0, 1, 2):
            vals = np.array([raw_moment_closed(params, i, float(x)) for x in xs])
            norm = float(np.max(np.abs(vals - xs**i) / weight))
            if i == 1:
                env = (p + mu * a * n) / (n * (1 - mu * a))
            elif i == 2:
                lam = params.lam
                env = abs(N / n**2 / ((1 - lam * a) * (1 - mu * a))
                          * ((N + lam + 1) * (1 + a) / (1 - 2 * mu * a) + lam + 1) - 1)
            else:
                env = math.nan
            rows.append({"n": n, "i": i, "norm": norm, "envelope": env})
    return rows


# -- rate in the weighted space ----------------------------------------------


def rate_constant(A1, A2):
    return 2 * (1 + A1 + math.sqrt(A1) + math.sqrt(A1 * A2))


def check_star_space(f, domain_cap):
    """Numerical proxy for a finite limit of f/(1+x^2): no growth between cap/2 and cap."""
    pts = np.array([domain_cap / 2, domain_cap])
    r = np.abs(np.asarray(f(pts), dtype=float)) / (1 + pts**2)
    if not np.all(np.isfinite(r)) or r[1] > 1.5 * r[0] + 1e-12:
        raise ClassMembershipError("f/(1+x^2) does not settle to a finite limit at the domain cap")


def rate_bound(params, f, remark, domain_cap=DEFAULT_CAP, grid_n=DEFAULT_X_POINTS,
               modulus_grid=DEFAULT_GRID, policy=DEFAULT_POLICY):
    """sup |L_n f - f|/(1+x^2)^(5/2) against K Omega(f, 1/sqrt(n)).

    K = 2 (1 + A1 + sqrt(A1) + sqrt(A1 A2)) from fitted remark constants.
    """
    if remark is None:
        raise ParameterError("fit the remark constants A1, A2 first")
    if params.n < remark.n_min:
        raise ParameterError(f"n = {params.n} is below the fitted n_min = {remark.n_min}")
    dom = operator_domain(params, domain_cap)
    if params.lam == 0:
        check_star_space(f, domain_cap)
    xs = np.linspace(dom[0], dom[1], grid_n)
    left, tails, arg = 0.0, 0.0, 0.0
    for x in xs:
        err, tail = measured_error(params, f, float(x), policy)
        val = err / (1 + x * x) ** 2.5
        tails = max(tails, tail)
        if val > left:
            left, arg = val, float(x)
    K = rate_constant(remark.A1, remark.A2)
    Om = modulus(f, "weighted", 1 / math.sqrt(params.n), dom, modulus_grid, domain_cap=dom[1]).value
    return BoundReport("rate", dom, K * Om, left,
                       {"K": K, "A1": remark.A1, "A2": remark.A2, "Omega": Om,
                        "delta": 1 / math.sqrt(params.n), "domain_cap": dom[1], "argmax_x": arg},
                       tails)
