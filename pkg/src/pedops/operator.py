"""The operators L_n^(alpha): parameters, weights, truncation and application.

For N = n + p and mu = lambda + 1 the weight of node k/n is

    w_k(x) = N / (N + mu k) * C(N + mu k, k)
             * x^[k,-a] (1 + lambda x)^[N + lambda k,-a] / (1 + mu x)^[N + mu k,-a]

with lambda = -1 on [0, 1] (Polya-Eggenberger, finite support k <= N) and
lambda = 0 on [0, inf) (inverse Polya-Eggenberger, infinite support).
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .combinatorics import log_factorial_power
from .errors import EvaluationError, ParameterError, RangeError, RatioUndefinedError

LAMBDAS = (-1, 0)


@dataclass(frozen=True)
class AlphaRule:
    """alpha = coefficient / n, resolved per n with a single division."""

    coefficient: Fraction = Fraction(1)

    def resolve(self, n):
        c = Fraction(self.coefficient)
        return c.numerator / (c.denominator * n)

    def __str__(self):
        c = Fraction(self.coefficient)
        if c == 1:
            return "1/n"
        if c.numerator == 1:
            return f"1/({c.denominator}n)"
        return f"{c.numerator}/({c.denominator}n)"


ALPHA_ONE_OVER_N = AlphaRule(Fraction(1))


def parse_alpha(text):
    """Accept a decimal literal or the token '1/n'."""
    text = text.strip()
    if text.replace(" ", "") == "1/n":
        return ALPHA_ONE_OVER_N
    try:
        value = float(text)
    except ValueError:
        raise ParameterError(f"alpha must be a decimal number or '1/n', got {text!r}") from None
    return value


@dataclass(frozen=True)
class OperatorParams:
    n: int
    p: int = 0
    alpha: object = 0.0  # float or AlphaRule
    lam: int = -1

    def __post_init__(self):
        problems = []
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            problems.append(f"n must be an integer >= 1 (got {self.n!r})")
        if not isinstance(self.p, (int, np.integer)) or self.p < 0:
            problems.append(f"p must be an integer >= 0 (got {self.p!r})")
        if self.lam not in LAMBDAS:
            problems.append(f"lambda must be -1 or 0 (got {self.lam!r})")
        if not isinstance(self.alpha, AlphaRule):
            try:
                a = float(self.alpha)
            except (TypeError, ValueError):
                problems.append(f"alpha must be a real number or an AlphaRule (got {self.alpha!r})")
            else:
                if not math.isfinite(a) or a < 0:
                    problems.append(f"alpha must be finite and >= 0 (got {self.alpha!r})")
                elif a >= 1:
                    problems.append(f"alpha must be < 1 (got {self.alpha!r})")
        elif not problems and self.lam == 0 and self.alpha.resolve(self.n) >= 1:
            # lambda = -1 has no alpha-dependent denominators, so a rule such as
            # 1/n may resolve to 1 at n = 1 (the Lupas operator of order one)
            problems.append(f"alpha = {self.alpha} resolves to >= 1 at n = {self.n}")
        if problems:
            raise ParameterError("; ".join(problems))

    @property
    def a(self):
        """Numeric value of alpha."""
        if isinstance(self.alpha, AlphaRule):
            return self.alpha.resolve(self.n)
        return float(self.alpha)

    @property
    def N(self):
        return self.n + self.p

    @property
    def mu(self):
        return self.lam + 1

    @property
    def domain(self):
        return (0.0, 1.0) if self.lam == -1 else (0.0, math.inf)

    def contains(self, x):
        lo, hi = self.domain
        return lo <= x <= hi

    def check_x(self, x):
        if not (isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)) or not self.contains(x):
            lo, hi = self.domain
            raise ParameterError(f"x = {x!r} outside the domain [{lo}, {hi}] for lambda = {self.lam}")

    def alpha_label(self):
        return str(self.alpha) if isinstance(self.alpha, AlphaRule) else repr(float(self.alpha))

    def as_dict(self):
        return {"n": int(self.n), "p": int(self.p), "alpha": self.a,
                "alpha_rule": self.alpha_label(), "lambda": self.lam}


@dataclass(frozen=True)
class TruncationPolicy:
    tail_mass_epsilon: float = 1e-12
    weight_floor: float = 1e-16
    k_max: int = 1_000_000

    def __post_init__(self):
        if not 0 < self.tail_mass_epsilon < 1:
            raise ParameterError(f"tail_mass_epsilon must lie in (0, 1), got {self.tail_mass_epsilon}")
        if self.weight_floor < 0:
            raise ParameterError("weight_floor must be >= 0")
        if self.k_max < 1:
            raise ParameterError("k_max must be >= 1")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class OperatorFamily:
    """A sequence n -> OperatorParams with fixed lambda, p and alpha (or alpha rule)."""

    lam: int = -1
    p: int = 0
    alpha: object = 0.0
    label: str = ""

    def at(self, n):
        return OperatorParams(n=n, p=self.p, alpha=self.alpha, lam=self.lam)


def exact_sum(values):
    """Correctly rounded sum of a float array."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


# -- weights ---------------------------------------------------------------


def _degenerate(params, x):
    """Support index of a point mass, or None when all weights are positive."""
    if x == 0:
        return 0
    if params.lam == -1 and x == 1:
        return params.N
    return None


def log_weight(params, k, x):
    """log w_k(x) straight from the product formula; x must be interior."""
    N, mu, lam, a = params.N, params.mu, params.lam, params.a
    top = N + mu * k
    return math.fsum([
        math.log(N / top),
        math.log(math.comb(top, k)),
        log_factorial_power(x, k, -a),
        log_factorial_power(1 + lam * x, N + lam * k, -a),
        -log_factorial_power(1 + mu * x, top, -a),
    ])


def weight(params, k, x):
    """w_{n,k}^(alpha)(x) evaluated directly from the defining products."""
    params.check_x(x)
    if k < 0 or (params.lam == -1 and k > params.N):
        raise RangeError(f"k = {k} outside the support of the operator (N = {params.N})")
    m = _degenerate(params, x)
    if m is not None:
        return 1.0 if k == m else 0.0
    return math.exp(log_weight(params, k, x))


def weight_ratio(params, k, x):
    """w_{k+1}(x) / w_k(x) from the simplified consecutive-term ratio.

    Cancelling the common factors of the product formula leaves
      lambda = -1:  (N - k)/(k + 1) * (x + k a) / (1 - x + (N - k - 1) a)
      lambda =  0:  (N + k)/(k + 1) * (x + k a) / (1 + x + (N + k) a)
    """
    params.check_x(x)
    N, a = params.N, params.a
    if k < 0 or (params.lam == -1 and k + 1 > N):
        raise RangeError(f"ratio index k = {k} outside the support (N = {N})")
    m = _degenerate(params, x)
    if m is not None and k != m:
        raise RatioUndefinedError(f"ratio undefined at k = {k}: w_k(x) = 0 at x = {x}")
    if params.lam == -1:
        return (N - k) / (k + 1) * (x + k * a) / (1 - x + (N - k - 1) * a)
    return (N + k) / (k + 1) * (x + k * a) / (1 + x + (N + k) * a)


def _log_ratios(params, x, k):
    """Vectorized log(w_{k+1}/w_k) for an integer array k (x interior)."""
    N, a = params.N, params.a
    k = k.astype(float)
    if params.lam == -1:
        num = (N - k) * (x + k * a)
        den = (k + 1) * (1 - x + (N - k - 1) * a)
    else:
        num = (N + k) * (x + k * a)
        den = (k + 1) * (1 + x + (N + k) * a)
    return np.log(num) - np.log(den)


def _log_w0(params, x):
    N, a = params.N, params.a
    if params.lam == -1:
        return math.fsum([math.log1p(-x + i * a) if i == 0 else math.log(1 - x + i * a) for i in range(N)]
                         + [-math.log1p(i * a) for i in range(N)])
    return math.fsum([math.log1p(i * a) for i in range(N)]
                     + [-math.log(1 + x + i * a) for i in range(N)])


@dataclass
class WeightSeries:
    """Weights w_0..w_K at one point together with truncation bookkeeping."""

    weights: np.ndarray
    mass: float
    tail_deficit: float
    captured: bool

    @property
    def K(self):
        return len(self.weights) - 1

    @property
    def nodes_k(self):
        return np.arange(len(self.weights))


def _point_mass(m, length):
    w = np.zeros(length)
    w[m] = 1.0
    return WeightSeries(w, 1.0, 0.0, True)


def _log_weights_range(params, x, start, stop, log_start):
    """log w_k for k in [start, stop) given log w_start."""
    if stop - start == 1:
        return np.array([log_start])
    steps = _log_ratios(params, x, np.arange(start, stop - 1))
    out = np.empty(stop - start)
    out[0] = log_start
    out[1:] = log_start + np.cumsum(steps)
    return out


def weight_series(params, x, policy=DEFAULT_POLICY):
    """All weights needed to apply the operator at x.

    lambda = -1 returns the full finite support. lambda = 0 returns w_0..w_K
    where K is the smallest index with cumulative mass >= 1 - epsilon, or
    K = k_max - 1 flagged as not captured.
    """
    params.check_x(x)
    m = _degenerate(params, x)
    if m is not None:
        return _point_mass(m, params.N + 1 if params.lam == -1 else m + 1)
    lw0 = _log_w0(params, x)
    if params.lam == -1:
        w = np.exp(_log_weights_range(params, x, 0, params.N + 1, lw0))
        mass = exact_sum(w)
        return WeightSeries(w, mass, 0.0, True)

    eps = policy.tail_mass_epsilon
    chunks = []
    base = []  # running fsum inputs
    start, log_start = 0, lw0
    size = 256
    while start < policy.k_max:
        stop = min(start + size, policy.k_max)
        lw = _log_weights_range(params, x, start, stop, log_start)
        w = np.exp(lw)
        prior = math.fsum(base)
        cum = prior + np.cumsum(w)
        hit = np.flatnonzero(cum >= 1 - eps)
        if hit.size:
            cut = int(hit[0])
            chunks.append(w[: cut + 1])
            all_w = np.concatenate(chunks)
            mass = exact_sum(all_w)
            # the running cumsum is approximate; settle K against the exact sum
            while mass < 1 - eps and len(all_w) < policy.k_max:
                nxt = len(all_w)
                extra = math.exp(log_start + float(np.sum(_log_ratios(params, x, np.arange(start, nxt))))) \
                    if nxt > start else math.exp(log_start)
                all_w = np.append(all_w, extra)
                mass = exact_sum(all_w)
            return WeightSeries(all_w, mass, max(0.0, 1.0 - mass), mass >= 1 - eps)
        chunks.append(w)
        base.append(exact_sum(w))
        log_start = lw[-1] + float(_log_ratios(params, x, np.array([stop - 1]))[0])
        start = stop
        size = min(size * 2, 1 << 16)
    all_w = np.concatenate(chunks)
    mass = exact_sum(all_w)
    return WeightSeries(all_w, mass, max(0.0, 1.0 - mass), False)


def truncation_index(params, x, policy=DEFAULT_POLICY):
    """(K, cumulative mass, captured) for the series at x."""
    series = weight_series(params, x, policy)
    return series.K, series.mass, series.captured


@dataclass(frozen=True)
class ApplyResult:
    value: float
    tail_deficit: float
    K: int
    captured: bool


def evaluate_at_nodes(f, nodes):
    try:
        values = np.asarray(f(nodes), dtype=float)
    except EvaluationError:
        raise
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"evaluation of f failed at the operator nodes: {exc}") from exc
    if values.shape != nodes.shape:
        values = np.broadcast_to(values, nodes.shape)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        t = float(nodes[bad[0]])
        raise EvaluationError(f"f is not finite at node k/n = {t!r}", point=t)
    return values


def apply(params, f, x, policy=DEFAULT_POLICY):
    """L_n^(alpha)(f; x) summed with exact rounding (math.fsum)."""
    series = weight_series(params, x, policy)
    nodes = series.nodes_k / params.n
    values = evaluate_at_nodes(f, nodes)
    value = exact_sum(series.weights * values)
    return ApplyResult(value, series.tail_deficit, series.K, series.captured)


# -- special cases ---------------------------------------------------------

_SCHURER_KINDS = {"schurer_stancu", "bernstein_schurer", "stancu_schurer", "baskakov_schurer"}
_STANCU_KINDS = {"schurer_stancu", "stancu", "stancu_schurer", "baskakov_stancu"}
_KIND_LAMBDA = {
    "schurer_stancu": -1, "stancu": -1, "lupas": -1, "bernstein_schurer": -1, "bernstein": -1,
    "stancu_schurer": 0, "baskakov_stancu": 0, "baskakov_schurer": 0, "baskakov": 0,
}
SPECIAL_KINDS = tuple(_KIND_LAMBDA)


def _special_alpha(kind, alpha):
    if kind == "lupas":
        if alpha is not None:
            raise ParameterError("lupas fixes alpha = 1/n; do not supply alpha")
        return ALPHA_ONE_OVER_N
    if kind in _STANCU_KINDS:
        if alpha is None:
            raise ParameterError(f"{kind} needs a positive alpha")
        if not isinstance(alpha, AlphaRule) and float(alpha) <= 0:
            raise ParameterError(f"{kind} needs alpha > 0, got {alpha!r}")
        return alpha
    if alpha is not None:
        raise ParameterError(f"{kind} fixes alpha = 0; do not supply alpha")
    return 0.0


def special_case_family(kind, p=None, alpha=None):
    if kind not in _KIND_LAMBDA:
        raise ParameterError(f"unknown special case {kind!r}; choose from {', '.join(SPECIAL_KINDS)}")
    if kind in _SCHURER_KINDS:
        if p is None or p < 1:
            raise ParameterError(f"{kind} requires a Schurer shift p >= 1")
    elif p is not None:
        raise ParameterError(f"{kind} takes no Schurer shift p")
    return OperatorFamily(lam=_KIND_LAMBDA[kind], p=p or 0,
                          alpha=_special_alpha(kind, alpha), label=kind)


def special_case(kind, n, p=None, alpha=None):
    """OperatorParams of a named classical operator.

    Schurer kinds need p; Stancu kinds need alpha (a float or AlphaRule).
    """
    return special_case_family(kind, p=p, alpha=alpha).at(n)
