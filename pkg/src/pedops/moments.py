"""Raw and central moments of L_n^(alpha): closed forms and a summation oracle.

Closed forms are never trusted on their own. Each one can be compared with
`moment_oracle`, which sums w_k(x) (k/n - c)^j directly and, for the
heavy-tailed lambda = 0, alpha > 0 case, adds an Euler-Maclaurin estimate
of the unsummed tail built from the log-gamma continuation of the summand.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .combinatorics import factorial_power, falling_factorial, rising_factorial, stirling2
from .errors import MomentUndefinedError, ParameterError
from .operator import DEFAULT_POLICY, _log_ratios, exact_sum, weight_ratio, weight_series

DENOMINATOR_GUARD = 1e-12
MAX_CLOSED_ORDER = 4


def tolerance(j):
    """Relative tolerance for comparing an order-j closed form with the oracle."""
    return 1e-8 if j <= 2 else 1e-6


def agrees(value, reference, j):
    return abs(value - reference) <= tolerance(j) * (1 + abs(reference))


def _den(value, label):
    if value <= DENOMINATOR_GUARD:
        raise MomentUndefinedError(f"moment undefined for this alpha: {label} = {value!r}")
    return value


class _Symbols:
    """Shorthand for the recurring factors of the closed forms."""

    def __init__(self, params):
        lam, a = params.lam, params.a
        self.n, self.p, self.N, self.lam, self.a = params.n, params.p, params.N, lam, a
        self.D1 = 1 - (lam + 1) * a
        self.Dl = 1 - lam * a
        self.D2 = 1 - 2 * (lam + 1) * a
        self.D3 = 1 - (3 * lam + 2) * a
        self.D5 = 1 - (5 * lam + 3) * a
        self.D7 = 1 - (7 * lam + 4) * a
        self.P1 = self.N + 2 * lam + 1
        self.P2 = self.N + 2 * (2 * lam + 1)
        self.P3 = self.N + 3 * (2 * lam + 1)

    def guard(self, j):
        names = {1: ("D1",), 2: ("D1", "Dl", "D2"), 3: ("D1", "Dl", "D2", "D3", "D5"),
                 4: ("D1", "Dl", "D2", "D3", "D5", "D7")}
        for name in names.get(j, ()):
            _den(getattr(self, name), name)


def _check_order(j, top=MAX_CLOSED_ORDER, low=0):
    if not isinstance(j, (int, np.integer)) or not low <= j <= top:
        raise ParameterError(f"moment order must be an integer in [{low}, {top}], got {j!r}")


# -- closed forms ----------------------------------------------------------


def raw_moment_closed(params, j, x):
    """L(t^j; x) for j = 0..4 from the displayed moment formulas."""
    _check_order(j)
    if j == 0:
        return 1.0
    s = _Symbols(params)
    s.guard(j)
    n, N, lam, a = s.n, s.N, s.lam, s.a
    if j == 1:
        return (N / n) * x / s.D1
    if j == 2:
        return N / (n**2 * s.Dl * s.D1) * ((N + lam + 1) * x * (x + a) / s.D2 + x * (1 + lam * x))
    if j == 3:
        return N * x / (n**3 * s.D1) * (
            s.P1 * s.P2 * (x + a) * (x + 2 * a) / (s.D3 * s.D5)
            + 3 * s.P1 * (x + a) / s.D3
            + 1)
    return N * x / (n**4 * s.D1) * (
        s.P1 * s.P2 * s.P3 * (x + a) * (x + 2 * a) * (x + 3 * a) / (s.D3 * s.D5 * s.D7)
        + 6 * s.P1 * s.P2 * (x + a) * (x + 2 * a) / (s.D3 * s.D5)
        + 7 * s.P1 * (x + a) / s.D3
        + 1)


def _index_factorial(params, m):
    """(n+p)_m for lambda = -1, (n+p)^(m) for lambda = 0."""
    if params.lam == -1:
        return falling_factorial(params.N, m)
    return rising_factorial(params.N, m)


def raw_moment_stirling_value(params, j, x):
    """Monomial moment as the Stirling sum with denominators 1^[m + lambda + 1, -alpha].

    Kept exactly as stated; for lambda = 0 and alpha > 0 it disagrees with
    the oracle (see `raw_moment_factorial`).
    """
    _check_order(j, top=20, low=1)
    a = params.a
    total = []
    for i in range(j):
        m = j - i
        den = factorial_power(1.0, m + params.lam + 1, -a)
        total.append(stirling2(j, m) * _index_factorial(params, m) * factorial_power(x, m, -a) / den)
    return math.fsum(total) / params.n**j


def factorial_moment_denominator(params, m):
    """Denominator of E[(K)_m]: prod_{l<m}(1 + l a) for lambda = -1, prod_{l=1..m}(1 - l a) for lambda = 0."""
    a = params.a
    if params.lam == -1:
        return factorial_power(1.0, m, -a)
    return _den(factorial_power(1.0 - a, m, a), f"prod(1 - l alpha), l <= {m}")


def raw_moment_factorial(params, j, x):
    """L(t^j; x) for any order via Stirling numbers and factorial moments.

    E[(K)_m] = phi_m x^[m,-a] / d_m with the denominator of
    `factorial_moment_denominator`; this is the form the oracle confirms.
    """
    _check_order(j, top=20, low=0)
    if j == 0:
        return 1.0
    terms = [stirling2(j, m) * _index_factorial(params, m) * factorial_power(x, m, -params.a)
             / factorial_moment_denominator(params, m) for m in range(1, j + 1)]
    return math.fsum(terms) / params.n**j


def first_central_moment(params, x):
    """L(t - x; x) = x (p + n (lambda+1) alpha) / (n (1 - (lambda+1) alpha))."""
    s = _Symbols(params)
    s.guard(1)
    return x * (s.p + s.n * (s.lam + 1) * s.a) / (s.n * s.D1)


def first_central_literal(params, x):
    """(p x + (lambda+1) alpha) / (n (1 - (lambda+1) alpha)), as stated."""
    s = _Symbols(params)
    s.guard(1)
    return (s.p * x + (s.lam + 1) * s.a) / (s.n * s.D1)


def _central_closed(params, j, x, literal):
    s = _Symbols(params)
    s.guard(j)
    n, p, N, lam, a = s.n, s.p, s.N, s.lam, s.a
    mu = lam + 1
    # (p x + n x mu a) in the derived form; the literal formulas carry p x + mu a
    shift = p * x + mu * a if literal else p * x + n * x * mu * a
    if j == 1:
        return shift / (n * s.D1)
    if j == 2:
        return N / (n * s.Dl * s.D1) * (
            s.Dl * s.D1 * n * x**2 / N
            + (N + lam + 1) * x * (x + a) / (n * s.D2)
            + x * (1 + lam * x) / n
            - 2 * s.Dl * x**2)
    if j == 3:
        return (
            N * x * (x + a) / (n**2 * s.D1) * (
                s.P1 * s.P2 * (x + 2 * a) / (n * s.D3 * s.D5)
                + 3 * s.P1 / (n * s.D3)
                - 3 * (N + lam + 1) * x / (s.Dl * s.D2))
            + N * x / (n * s.D1) * (
                1 / n**2
                - 3 * x * shift / N
                - 3 / s.Dl * x * (1 + lam * x) / n)
            - 2 * x**3 * (2 - 3 * N / (n * s.D1)))
    return (
        N * x * (x + a) / (n**2 * s.D1) * (
            s.P1 * s.P2 * s.P3 * (x + 2 * a) * (x + 3 * a) / (n**2 * s.D3 * s.D5 * s.D7)
            + 2 * (3 - 2 * n * x) * s.P1 * s.P2 * (x + 2 * a) / (n**2 * s.D3 * s.D5)
            + (7 - 12 * n * x) * s.P1 / (n**2 * s.D3)
            + 6 * (N + lam + 1) * x**2 / (s.Dl * s.D2))
        + N * x / (n * s.D1) * (
            (1 - 4 * n * x) / n**3
            + 8 * x**2 * shift / N
            # the literal formula has no operator between these two products
            + 6 * x**2 * (1 + lam * x) / (n * s.Dl))
        + 3 * x**4 * (3 - 4 * N / (n * s.D1)))


def central_moment_literal(params, j, x):
    """L((t-x)^j; x), j = 1..4, transcribed from the literal central-moment formulas."""
    _check_order(j, low=1)
    return _central_closed(params, j, x, literal=True)


def central_moment_derived(params, j, x):
    """Same formulas with the first-moment shift written as p x + n x (lambda+1) alpha."""
    _check_order(j, low=1)
    return _central_closed(params, j, x, literal=False)


def central_from_raw(raw, x):
    """Central moments of orders 1..len(raw)-1 from raw moments raw[0..].

    Uses V((t-x)^j) = V(t^j) - sum_{i<j} C(j, i) x^(j-i) V((t-x)^i).
    """
    raw = list(raw)
    central = [raw[0]]
    for j in range(1, len(raw)):
        acc = math.fsum(math.comb(j, i) * x ** (j - i) * central[i] for i in range(j))
        central.append(raw[j] - acc)
    return central[1:]


def central_from_raw_reproducing(raw, x):
    """Orders 2..4 when V(1) = 1 and V(t) = x hold exactly.

    c3 = V(t^3) - x^3 - 3 x c2 and c4 = V(t^4) - x^4 - 4 x c3 - 6 x^2 c2.
    """
    c2 = raw[2] - x**2
    c3 = raw[3] - x**3 - 3 * x * c2
    c4 = raw[4] - x**4 - 4 * x * c3 - 6 * x**2 * c2
    return [0.0, c2, c3, c4]


def phi(params, x):
    """Second central moment L((t-x)^2; x)."""
    return central_moment_derived(params, 2, x)


def psi(params, x):
    """phi(x) + (first central moment)^2; the local-bound smoothing scale."""
    return phi(params, x) + first_central_moment(params, x) ** 2


# -- summation oracle ------------------------------------------------------


@dataclass(frozen=True)
class OracleMoments:
    center: float
    values: tuple          # sum_k w_k (k/n - center)^j, j = 0..order
    direct: tuple          # same without the tail estimate
    tail: tuple            # tail estimates that were added
    K: int
    mass_deficit: float
    captured: bool

    def __getitem__(self, j):
        return self.values[j]


def _extend(params, x, w, stop):
    """Continue the weight chain w_0..w_K out to index stop - 1."""
    K = len(w) - 1
    if stop <= K + 1:
        return w
    steps = _log_ratios(params, x, np.arange(K, stop - 1))
    return np.concatenate([w, w[-1] * np.exp(np.cumsum(steps))])


def _em_tail(params, x, j, c, M, tM):
    """Euler-Maclaurin estimate of sum_{k >= M} t_k, t_k = w_k (k/n - c)^j, given t_M.

    Uses the log-gamma continuation of w_k (lambda = 0, alpha > 0) anchored
    at t_M, plus the t/2 and t'/12 end corrections.
    """
    if tM == 0.0:
        return 0.0
    N, n = params.N, params.n
    A, B = 1 / params.a, x / params.a
    lg = math.lgamma

    def log_offset(u):
        out = (lg(N + u) - lg(N + M)) - (lg(u + 1) - lg(M + 1)) \
            + (lg(B + u) - lg(B + M)) - (lg(A + B + N + u) - lg(A + B + N + M))
        if j:
            out += j * (math.log(u - c * n) - math.log(M - c * n))
        return out

    def f(u):
        return math.exp(log_offset(u))

    dlog = (special.digamma(N + M) - special.digamma(M + 1) + special.digamma(B + M)
            - special.digamma(A + B + N + M))
    if j:
        dlog += j / (M - c * n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        integral, _ = integrate.quad(f, M, math.inf, epsabs=0.0, epsrel=1e-11, limit=200)
    return tM * (integral + 0.5 - dlog / 12.0)


def moment_oracle(params, x, order=4, center=0.0, policy=DEFAULT_POLICY):
    """sum_k w_k(x) (k/n - center)^j for j = 0..order by direct summation.

    lambda = -1 sums the finite support. lambda = 0 sums to twice the mass
    truncation index and then adds an estimate of the rest: a geometric
    bound for alpha = 0, an Euler-Maclaurin estimate for alpha > 0.
    """
    series = weight_series(params, x, policy)
    w = series.weights
    need_tail = params.lam == 0 and x > 0
    if need_tail:
        w = _extend(params, x, w, min(2 * len(w) + 64, policy.k_max))
    K = len(w) - 1
    d = np.arange(K + 1) / params.n - center
    if need_tail:
        M = K + 1
        wM = w[-1] * weight_ratio(params, K, x)
    direct, tails, values = [], [], []
    for j in range(order + 1):
        s = exact_sum(w * d**j) if j else exact_sum(w)
        tail = 0.0
        if need_tail and M > center * params.n:
            tM = wM * (M / params.n - center) ** j
            if params.a > 0:
                tail = _em_tail(params, x, j, center, M, tM)
            else:
                r = weight_ratio(params, M, x) * ((M + 1 - center * params.n) / (M - center * params.n)) ** j
                tail = tM / (1 - r) if r < 1 else math.inf
        direct.append(s)
        tails.append(tail)
        values.append(s + tail)
    return OracleMoments(center, tuple(values), tuple(direct), tuple(tails), K,
                         series.tail_deficit, series.captured)


def raw_moment_oracle(params, j, x, policy=DEFAULT_POLICY):
    return moment_oracle(params, x, order=j, policy=policy)[j]


def central_moment_oracle(params, j, x, policy=DEFAULT_POLICY):
    return moment_oracle(params, x, order=j, center=x, policy=policy)[j]


# -- reports ---------------------------------------------------------------


@dataclass
class StirlingCheck:
    value: float
    oracle: float
    derived: float
    consistent: bool


def raw_moment_stirling(params, j, x, policy=DEFAULT_POLICY):
    value = raw_moment_stirling_value(params, j, x)
    oracle = raw_moment_oracle(params, j, x, policy)
    return StirlingCheck(value, oracle, raw_moment_factorial(params, j, x), agrees(value, oracle, j))


@dataclass
class CentralCheck:
    literal: float
    derived: float
    oracle: float
    consistent: bool
    derived_consistent: bool


def central_moment_closed(params, j, x, policy=DEFAULT_POLICY):
    """Printed central-moment formula with a consistency flag against the oracle.

    The oracle side is `central_from_raw` applied to oracle raw moments.
    """
    literal = central_moment_literal(params, j, x)
    derived = central_moment_derived(params, j, x)
    raw = moment_oracle(params, x, order=j, policy=policy).values
    oracle = central_from_raw(raw, x)[j - 1]
    return CentralCheck(literal, derived, oracle, agrees(literal, oracle, j), agrees(derived, oracle, j))


@dataclass
class MomentReport:
    params: object
    x: float
    raw: list
    raw_oracle: list
    central: list
    central_oracle: list
    central_literal: list
    psi: float
    phi: float
    tail_mass_deficit: float
    flags: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "params": self.params.as_dict(),
            "x": self.x,
            "raw": self.raw,
            "raw_oracle": self.raw_oracle,
            "central": self.central,
            "central_oracle": self.central_oracle,
            "central_literal": self.central_literal,
            "psi": self.psi,
            "phi": self.phi,
            "tail_mass_deficit": self.tail_mass_deficit,
            "flags": self.flags,
        }


def moment_report(params, x, order=4, policy=DEFAULT_POLICY):
    params.check_x(x)
    _check_order(order, low=2)
    raw = [raw_moment_closed(params, j, x) for j in range(order + 1)]
    raw_o = moment_oracle(params, x, order=order, policy=policy)
    cen_o = moment_oracle(params, x, order=order, center=x, policy=policy)
    central = [central_moment_derived(params, j, x) for j in range(1, order + 1)]
    literal = [central_moment_literal(params, j, x) for j in range(1, order + 1)]
    flags = {}
    for j in range(1, order + 1):
        flags[f"raw_{j}"] = "consistent" if agrees(raw[j], raw_o[j], j) else "inconsistent"
    for j in range(1, order + 1):
        flags[f"central_{j}"] = "consistent" if agrees(central[j - 1], cen_o[j], j) else "inconsistent"
        flags[f"central_literal_{j}"] = ("consistent" if agrees(literal[j - 1], cen_o[j], j)
                                         else "inconsistent")
    return MomentReport(
        params=params, x=x, raw=raw, raw_oracle=list(raw_o.values),
        central=central, central_oracle=list(cen_o.values[1:]), central_literal=literal,
        psi=psi(params, x), phi=central[1],
        tail_mass_deficit=max(raw_o.mass_deficit, cen_o.mass_deficit), flags=flags)


# -- remark constants ------------------------------------------------------


@dataclass(frozen=True)
class RemarkConstants:
    """A1, A2 with phi <= A1 (1+x^2)/n and L((t-x)^4) <= A2 (1+x^2)^2/n for n >= n_min."""

    A1: float
    A2: float
    n_min: int
    fit_domain: tuple

    def as_dict(self):
        return {"A1": self.A1, "A2": self.A2, "n_min": self.n_min,
                "fit_domain": list(self.fit_domain)}


def ceil_sig(value, digits=2):
    """Round up to `digits` significant figures."""
    if value <= 0:
        return 0.0
    exponent = math.floor(math.log10(value)) - (digits - 1)
    scale = 10.0**exponent
    out = math.ceil(value / scale - 1e-9) * scale
    return float(f"{out:.{digits}g}")


def remark_ratios(params, xs):
    """Per-x arrays of n phi/(1+x^2) and n L((t-x)^4)/(1+x^2)^2 from the corrected closed forms."""
    r2 = np.array([params.n * central_moment_derived(params, 2, x) / (1 + x * x) for x in xs])
    r4 = np.array([params.n * central_moment_derived(params, 4, x) / (1 + x * x) ** 2 for x in xs])
    return r2, r4


def fit_remark_constants(family, x_domain, n_list, grid=257):
    """Smallest A1, A2 (rounded up to two significant figures) over a grid.

    The maximum of n*central_j/(1+x^2)^(j/2) is taken over `grid` uniform
    points of x_domain and every n in n_list.
    """
    n_list = sorted(set(n_list))
    if len(n_list) < 4:
        raise ParameterError("fit_remark_constants needs at least 4 values of n")
    xs = np.linspace(x_domain[0], x_domain[1], grid)
    m2 = m4 = 0.0
    for n in n_list:
        r2, r4 = remark_ratios(family.at(n), xs)
        if np.any(r2 < -1e-12) or np.any(r4 < -1e-12) or not (np.all(np.isfinite(r2)) and np.all(np.isfinite(r4))):
            raise ArithmeticError(f"negative or non-finite central moment at n = {n}")
        m2, m4 = max(m2, float(r2.max())), max(m4, float(r4.max()))
    A1, A2 = ceil_sig(m2), ceil_sig(m4)
    if not (0 < A1 <= 1e6 and 0 < A2 <= 1e6):
        raise ArithmeticError("bound of the form A (1+x^2)^(j/2)/n not observed for any A <= 1e6")
    return RemarkConstants(A1, A2, n_list[0], (float(x_domain[0]), float(x_domain[1])))


def check_remark_constants(constants, family, xs, n_values):
    """Largest observed ratio central_j / (A_j (1+x^2)^(j/2) / n); <= 1 means the bounds hold."""
    worst = 0.0
    for n in n_values:
        r2, r4 = remark_ratios(family.at(n), np.asarray(xs, dtype=float))
        worst = max(worst, float(r2.max()) / constants.A1, float(r4.max()) / constants.A2)
    return worst
