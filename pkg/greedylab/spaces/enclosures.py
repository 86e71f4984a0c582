"""Certified sums of positive decreasing series over index ranges.

Short ranges are summed directly.  Long ranges use the integral sandwich
``int_a^{b+1} f <= sum_{n=a}^b f(n) <= f(a) + int_a^b f`` with the integrals
evaluated in mpmath at 50 digits and rounded outward to binary64.
"""
import logging
import math

import numpy as np
from django.conf import settings
from django.core.cache import cache
from mpmath import mp

from .exceptions import CapacityError, ContractError, DomainError
from .models import MAX_INDEX, Enclosure, SeriesRule

logger = logging.getLogger(__name__)

# w1 decreases from x ~ 3.92 onward
W1_DECREASING_FROM = 4


def term(rule, n):
    """Single term ``f(n)`` in binary64."""
    if rule == SeriesRule.INV_N_LOG:
        return 1.0 / (n * math.log(n + 1))
    if rule == SeriesRule.W1:
        return math.log(n + 1) / math.sqrt(n)
    if rule == SeriesRule.POW_3_4:
        return float(n) ** -0.75
    raise ContractError(f"Unsupported series rule {rule!r}")


def terms(rule, a, b):
    """Vector of ``f(n)`` for ``a <= n <= b``; the range must fit in binary64 exactly."""
    n = np.arange(a, b + 1, dtype=float)
    if rule == SeriesRule.INV_N_LOG:
        return 1.0 / (n * np.log1p(n))
    if rule == SeriesRule.W1:
        return np.log1p(n) / np.sqrt(n)
    if rule == SeriesRule.POW_3_4:
        return n**-0.75
    raise ContractError(f"Unsupported series rule {rule!r}")


def direct_sum(rule, a, b):
    if b < a:
        return 0.0
    if b > 2**53:
        return math.fsum(term(rule, n) for n in range(a, b + 1))
    return math.fsum(terms(rule, a, b).tolist())


def _mp_term(rule, x):
    if rule == SeriesRule.INV_N_LOG:
        return 1 / (x * mp.log(x + 1))
    if rule == SeriesRule.W1:
        return mp.log(x + 1) / mp.sqrt(x)
    return x ** mp.mpf(-0.75)


def _w1_antiderivative(x):
    root = mp.sqrt(x)
    return 2 * root * mp.log(x + 1) - 4 * root + 4 * mp.atan(root)


def _outward(lo, hi):
    return math.nextafter(float(lo), -math.inf), math.nextafter(float(hi), math.inf)


def integral_sandwich(rule, a, b):
    """Two-sided enclosure from the integral test; needs ``f`` decreasing on ``[a, b]``.

    For ``inv_n_log`` the integrals are bracketed by ``1/((x+1)log(x+1))`` below
    and ``1/(x log x)`` above, so ``a >= 2`` is required.
    """
    if rule == SeriesRule.INV_N_LOG and a < 2:
        raise ContractError("inv_n_log sandwich needs a >= 2")
    if rule == SeriesRule.W1 and a < W1_DECREASING_FROM:
        raise ContractError(f"w1 is decreasing only from n = {W1_DECREASING_FROM}")
    with mp.workdps(50):
        A, B = mp.mpf(a), mp.mpf(b)
        first = _mp_term(rule, A)
        if rule == SeriesRule.INV_N_LOG:
            lo = mp.log(mp.log(B + 2)) - mp.log(mp.log(A + 1))
            hi = first + mp.log(mp.log(B)) - mp.log(mp.log(A))
        elif rule == SeriesRule.W1:
            lo = _w1_antiderivative(B + 1) - _w1_antiderivative(A)
            hi = first + _w1_antiderivative(B) - _w1_antiderivative(A)
        elif rule == SeriesRule.POW_3_4:
            lo = 4 * (mp.root(B + 1, 4) - mp.root(A, 4))
            hi = first + 4 * (mp.root(B, 4) - mp.root(A, 4))
        else:
            raise ContractError(f"Unsupported series rule {rule!r}")
        lo, hi = _outward(lo, hi)
    return Enclosure(max(lo, 0.0), hi)


def _cache_key(rule, a, b):
    return f"greedylab:enclosure:{SeriesRule(rule).value}:{a}:{b}"


def interval_sum_certified(rule, a, b):
    """Enclosure of ``sum_{n=a}^b f(n)`` for a registered decreasing rule."""
    if rule not in SeriesRule.values:
        raise ContractError(f"Unsupported series rule {rule!r}")
    if a < 1:
        raise DomainError(f"series are indexed from 1, got a={a}")
    if b < a:
        raise DomainError(f"empty range [{a}, {b}]")
    if b > MAX_INDEX:
        raise CapacityError(f"range end {b} exceeds 2^127 - 1")
    if rule == SeriesRule.W1 and a < W1_DECREASING_FROM:
        raise ContractError(f"w1 is not monotone on [{a}, {b}]")

    if b - a + 1 <= settings.GREEDYLAB_DIRECT_SUM_LIMIT:
        total = direct_sum(rule, a, b)
        return Enclosure(total, total, exact=True)

    key = _cache_key(rule, a, b)
    cached = cache.get(key)
    if cached is not None:
        return Enclosure(float(cached[0]), float(cached[1]))

    if rule == SeriesRule.INV_N_LOG and a == 1:
        enclosure = Enclosure(term(rule, 1), term(rule, 1), exact=True) + integral_sandwich(rule, 2, b)
    else:
        enclosure = integral_sandwich(rule, a, b)
    cache.set(key, (repr(enclosure.lo), repr(enclosure.hi)), timeout=None)
    logger.debug(f"Enclosure {rule} [{a}, {b}] = [{enclosure.lo!r}, {enclosure.hi!r}]")
    return enclosure
