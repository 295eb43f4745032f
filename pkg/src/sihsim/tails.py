"""Binomial tail and moment computations at the precisions the pipeline needs.

Three tiers:
  * fast float paths for planning (scipy for moderate m, a log-gamma series
    for astronomically large m where scipy's betainc path is not trusted);
  * exact rational arithmetic (Fraction) for small m, used as a test oracle;
  * mpmath high-precision series, used to certify tails independently of the
    float path.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
from scipy import stats

_SCIPY_M_LIMIT = 10**6


def binomial_pmf_vector(m: int, p: float) -> np.ndarray:
    """All m+1 probabilities of Binomial(m, p); only for desk-scale m."""
    if m > _SCIPY_M_LIMIT:
        raise ValueError(f"refusing to materialize {m + 1} pmf values")
    return stats.binom.pmf(np.arange(m + 1), m, p)


def _log_pmf(m: int, p: float, w: int) -> float:
    # log C(m,w) p^w as sum_i log(p*(m-i)) - log w!; stays accurate for m
    # far beyond where differences of lgamma(m) lose the answer entirely
    if p <= 0.0:
        return 0.0 if w == 0 else -math.inf
    out = -math.lgamma(w + 1) + (m - w) * math.log1p(-p)
    for i in range(w):
        out += math.log(p * (m - i))
    return out


def binomial_sf(m: int, p: float, k: int) -> float:
    """P(Binomial(m, p) > k)."""
    if k >= m:
        return 0.0
    if k < 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if m <= _SCIPY_M_LIMIT:
        return float(stats.binom.sf(k, m, p))
    # series from the left tail edge; terms decay geometrically past the mean
    total = 0.0
    w = k + 1
    while w <= m:
        term = math.exp(_log_pmf(m, p, w))
        total += term
        if term < total * 1e-18 and w > m * p + 10:
            break
        w += 1
    return total


def binomial_sf_exact(m: int, p: Fraction, k: int) -> Fraction:
    """Exact rational P(Binomial(m, p) > k) for a rational p."""
    if k >= m:
        return Fraction(0)
    if k < 0:
        return Fraction(1)
    q = 1 - p
    total = Fraction(0)
    for w in range(k + 1, m + 1):
        total += Fraction(math.comb(m, w)) * p**w * q**(m - w)
    return total


def binomial_sf_highprec(m: int, p: float, k: int, dps: int = 50) -> mpmath.mpf:
    """High-precision P(Binomial(m, p) > k) by direct series summation."""
    if k >= m:
        return mpmath.mpf(0)
    if k < 0:
        return mpmath.mpf(1)
    with mpmath.workdps(dps):
        if p == 0:
            return mpmath.mpf(0)
        pp = mpmath.mpf(p)
        log_q = mpmath.log1p(-pp)
        total = mpmath.mpf(0)
        w = k + 1
        log_head = -mpmath.loggamma(w + 1)
        for i in range(w):
            log_head += mpmath.log(pp * (m - i))
        while w <= m:
            term = mpmath.e ** (log_head + (m - w) * log_q)
            total += term
            if term < total * mpmath.mpf(10) ** (-dps) and w > m * p + 10:
                break
            w += 1
            log_head += mpmath.log(pp * (m - w + 1)) - mpmath.log(w)
        return +total


def expected_capped_weight(m: int, p: float, k: int) -> float:
    """E[min(W, k)] for W ~ Binomial(m, p)."""
    if k <= 0:
        return 0.0
    total = 0.0
    for w in range(1, min(k, m) + 1):
        # E[min(W,k)] = sum_{w>=1} P(W >= w) truncated at k
        total += binomial_sf(m, p, w - 1)
    return total
