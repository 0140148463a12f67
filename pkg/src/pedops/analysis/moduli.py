"""Grid estimates of moduli of continuity and of the Lip*_M(beta) seminorm.

Every quantity here is a maximum over a finite grid, i.e. a lower estimate
of the corresponding supremum.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ClassMembershipError, EvaluationError, ParameterError

KINDS = ("first_order", "second_order", "restricted_b", "weighted")
DEFAULT_GRID = 1024
H_CHUNK = 256
GROWTH_LIMIT = 1e12


@dataclass(frozen=True)
class ModulusEstimate:
    kind: str
    delta: float
    value: float
    grid_points: int
    domain_cap: float
    argmax: tuple = (math.nan, math.nan)  # (x, h) of the largest sampled difference


def _evaluate(f, pts):
    try:
        vals = np.asarray(f(pts), dtype=float)
    except EvaluationError:
        raise
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"f could not be evaluated on the modulus grid: {exc}") from exc
    vals = np.broadcast_to(vals, np.shape(pts))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        point = float(np.asarray(pts)[bad][0])
        raise EvaluationError(f"f is not finite at x = {point!r}", point=point)
    return vals


def _resolve_domain(domain, domain_cap):
    lo, hi = float(domain[0]), float(domain[1])
    if math.isinf(hi):
        if domain_cap is None:
            raise ParameterError("an unbounded domain needs a domain_cap")
        hi = float(domain_cap)
    if not hi > lo:
        raise ParameterError(f"empty domain [{lo}, {hi}]")
    return lo, hi


def lattice_spacing(span, grid_n):
    """Power of ten just below span/grid_n; every step h is a multiple of it."""
    return 10.0 ** math.floor(math.log10(span / grid_n))


def step_count(delta, spacing):
    """Number of lattice steps k*spacing with k*spacing <= delta."""
    return math.floor(delta / spacing + 1e-9)


def modulus(f, kind, delta, domain, grid_n=DEFAULT_GRID, domain_cap=None, h_chunk=H_CHUNK):
    """Grid estimate of a modulus of continuity of f.

    first_order   sup |f(x+h) - f(x)|
    second_order  sup |f(x+2h) - 2 f(x+h) + f(x)|
    restricted_b  first order with x, x+h confined to `domain` (pass (0, b))
    weighted      sup |f(x+h) - f(x)| / (1 + (x+h)^2), x in [lo, cap], x+h may pass cap

    Steps h are the multiples of a decimal spacing fixed by the domain, and
    x runs over at least grid_n points of the same lattice, so f is sampled
    once on the lattice. Neither set depends on delta, which makes the
    estimate nondecreasing in delta. A delta below the spacing gets the
    single step h = delta.
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown modulus kind {kind!r}")
    if grid_n < 64:
        raise ParameterError("grid_n must be >= 64")
    if delta < 0:
        raise ParameterError("delta must be > 0")
    lo, hi = _resolve_domain(domain, domain_cap)
    cap = hi if domain_cap is None else float(domain_cap)
    if delta == 0:
        return ModulusEstimate(kind, 0.0, 0.0, grid_n, cap)

    span = hi - lo
    reach = 2 if kind == "second_order" else 1
    bounded = kind != "weighted"
    spacing = lattice_spacing(span, grid_n)
    stride = max(1, math.floor(span / (grid_n - 1) / spacing))
    top = math.floor(span / spacing + 1e-9)           # last lattice index inside the domain
    x_idx = np.arange(0, top + 1, stride)
    k = step_count(delta, spacing)
    if bounded:
        k = min(k, top // reach)
    if k < 1:
        xs = lo + x_idx * spacing
        if bounded:
            xs = xs[xs + reach * delta <= hi + 1e-12 * span]
        return _single_step(f, kind, float(delta), xs, grid_n, cap)

    pts = lo + np.arange(top + reach * k + 1) * spacing
    if bounded:
        pts = pts[: top + 1]
    fv = _evaluate(f, pts)
    weight = 1 + pts**2
    best, arg = 0.0, (math.nan, math.nan)
    for first in range(1, k + 1, h_chunk):
        steps = np.arange(first, min(first + h_chunk, k + 1))[:, None]
        j = x_idx[None, :] + steps
        ok = x_idx[None, :] + reach * steps <= len(pts) - 1
        j = np.minimum(j, len(pts) - 1)
        if kind == "second_order":
            j2 = np.minimum(x_idx[None, :] + 2 * steps, len(pts) - 1)
            diff = np.abs(fv[j2] - 2 * fv[j] + fv[x_idx][None, :])
        else:
            diff = np.abs(fv[j] - fv[x_idx][None, :])
            if kind == "weighted":
                diff = diff / weight[j]
        diff = np.where(ok, diff, 0.0)
        i = np.unravel_index(int(np.argmax(diff)), diff.shape)
        if diff[i] > best:
            best = float(diff[i])
            arg = (float(pts[x_idx[i[1]]]), float(steps[i[0], 0] * spacing))
    return ModulusEstimate(kind, float(delta), best, len(x_idx), cap, arg)


def _single_step(f, kind, h, xs, grid_n, cap):
    if xs.size == 0:
        return ModulusEstimate(kind, h, 0.0, grid_n, cap)
    fx = _evaluate(f, xs)
    if kind == "second_order":
        diff = np.abs(_evaluate(f, xs + 2 * h) - 2 * _evaluate(f, xs + h) + fx)
    else:
        diff = np.abs(_evaluate(f, xs + h) - fx)
        if kind == "weighted":
            diff = diff / (1 + (xs + h) ** 2)
    i = int(np.argmax(diff))
    return ModulusEstimate(kind, h, float(diff[i]), len(xs), cap, (float(xs[i]), h))


@dataclass(frozen=True)
class LipschitzClass:
    beta: float
    M: float
    argmax: tuple = (math.nan, math.nan)


def estimate_lipschitz_M(f, beta, domain, grid_n=257, domain_cap=None):
    """max |f(y) - f(x)| (x+y)^(beta/2) / |y-x|^beta over grid pairs with x != y."""
    if not 0 < beta <= 1:
        raise ParameterError(f"beta must lie in (0, 1], got {beta}")
    lo, hi = _resolve_domain(domain, domain_cap)
    xs = np.linspace(lo, hi, grid_n)
    fx = _evaluate(f, xs)
    if np.max(np.abs(fx)) > GROWTH_LIMIT:
        raise ClassMembershipError("f is not in the Lipschitz class at the sampled scale (|f| > 1e12)")
    X, Y = xs[:, None], xs[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(fx[None, :] - fx[:, None]) * (X + Y) ** (beta / 2) / np.abs(Y - X) ** beta
    ratio[~((X != Y) & (X + Y > 0))] = 0.0
    i = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    M = float(ratio[i])
    if M > GROWTH_LIMIT:
        raise ClassMembershipError("f is not in the Lipschitz class at the sampled scale")
    return LipschitzClass(float(beta), M, (float(xs[i[0]]), float(xs[i[1]])))
