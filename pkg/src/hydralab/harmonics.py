"""Exact and float harmonic numbers H(n) = sum_{i=1..n} 1/i.

Exact values are built by divide-and-conquer over raw integer pairs so that
gcd normalisation happens once per query instead of once per term; H(40320)
(about 17,000 digits of denominator) evaluates in well under a second and is
cached. The float version carries a rigorous forward error bound so callers
can decide inequalities with outward rounding and only fall back to exact
arithmetic when the margin is genuinely tight.
"""

from __future__ import annotations

import math
from fractions import Fraction

_exact_cache: dict[int, Fraction] = {0: Fraction(0)}

# Unit roundoff of IEEE double, used for the summation error envelope.
_EPS = 2.0 ** -53


def _inv_range_sum(a: int, b: int) -> tuple[int, int]:
    """Raw (num, den) of sum_{i=a..b} 1/i, unnormalised."""
    if a == b:
        return 1, a
    mid = (a + b) // 2
    n1, d1 = _inv_range_sum(a, mid)
    n2, d2 = _inv_range_sum(mid + 1, b)
    return n1 * d2 + n2 * d1, d1 * d2


def harmonic(n: int) -> Fraction:
    """Exact H(n) as a Fraction; cached."""
    if n < 0:
        raise ValueError("harmonic numbers need n >= 0")
    got = _exact_cache.get(n)
    if got is not None:
        return got
    num, den = _inv_range_sum(1, n)
    value = Fraction(num, den)
    _exact_cache[n] = value
    return value


def harmonic_float(n: int) -> float:
    """H(n) in float, summed small-to-large for accuracy."""
    return math.fsum(1.0 / i for i in range(n, 0, -1))


def harmonic_float_error(n: int) -> float:
    """Upper bound on |harmonic_float(n) - H(n)|.

    fsum is correctly rounded over its float inputs; each input 1/i carries
    at most one rounding of relative size eps, and the final result one more.
    """
    if n <= 0:
        return 0.0
    h = harmonic_float(n)
    return _EPS * (h + n * _EPS + h)  # term roundings plus final rounding
