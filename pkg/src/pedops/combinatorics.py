"""Stirling numbers of the second kind and factorial-type products."""

import math

MAX_STIRLING_ORDER = 20
_LOG_SPACE_THRESHOLD = 64


class StirlingTable:
    """Triangular table of S(j, i) for 0 <= i <= j <= max_order.

    Built eagerly from the recurrence S(j, i) = i*S(j-1, i) + S(j-1, i-1)
    and never mutated afterwards, so shared instances are safe to read
    from several threads.
    """

    def __init__(self, max_order=MAX_STIRLING_ORDER):
        if not isinstance(max_order, int) or max_order < 0:
            raise ValueError(f"max_order must be a nonnegative integer, got {max_order!r}")
        if max_order > MAX_STIRLING_ORDER:
            raise ValueError(
                f"max_order {max_order} exceeds the supported limit {MAX_STIRLING_ORDER}"
            )
        self.max_order = max_order
        rows = [(1,)]
        for j in range(1, max_order + 1):
            prev = rows[-1]
            row = [0] * (j + 1)
            row[j] = 1
            for i in range(1, j):
                row[i] = i * prev[i] + prev[i - 1]
            rows.append(tuple(row))
        self._rows = tuple(rows)

    def __call__(self, j, i):
        if j < 0 or i < 0:
            raise ValueError(f"Stirling indices must be nonnegative, got ({j}, {i})")
        if i > j:
            return 0
        if j > self.max_order:
            raise ValueError(f"order {j} exceeds table max_order {self.max_order}")
        return self._rows[j][i]

    def row(self, j):
        return self._rows[j]

    def __eq__(self, other):
        return isinstance(other, StirlingTable) and self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)


_DEFAULT_TABLE = StirlingTable()


def stirling2(j, i):
    """S(j, i): number of partitions of a j-set into i nonempty blocks."""
    return _DEFAULT_TABLE(j, i)


def factorial_power(t, n, h):
    """t^[n,h] = t (t - h) (t - 2h) ... (t - (n-1)h); the empty product is 1.

    With h = -alpha the factors ascend by alpha. Long products of positive
    factors are accumulated in log space.
    """
    if n < 0:
        raise ValueError(f"factorial power order must be >= 0, got {n}")
    if n > _LOG_SPACE_THRESHOLD:
        factors = [t - i * h for i in range(n)]
        if all(f > 0 for f in factors):
            return math.exp(math.fsum(math.log(f) for f in factors))
        out = 1.0
        for f in factors:
            out *= f
        return out
    out = 1.0
    for i in range(n):
        out *= t - i * h
    return out


def log_factorial_power(t, n, h):
    """log of t^[n,h]; every factor must be positive."""
    if n < 0:
        raise ValueError(f"factorial power order must be >= 0, got {n}")
    terms = []
    for i in range(n):
        f = t - i * h
        if f <= 0:
            raise ValueError(f"factor {f!r} of t^[{n},{h}] is not positive")
        terms.append(math.log(f))
    return math.fsum(terms)


def falling_factorial(y, n):
    """(y)_n = y (y-1) ... (y-n+1)."""
    return factorial_power(y, n, 1)


def rising_factorial(y, n):
    """(y)^(n) = y (y+1) ... (y+n-1)."""
    return factorial_power(y, n, -1)
