import math

import numpy as np

from .exceptions import DomainError
from .models import TailRule, WeightKind


def w1_value(n):
    """``n^{-1/2} log(n+1)``; safe for indices up to 2^127."""
    return math.log(n + 1) / math.sqrt(n)


def weight_at(w, n):
    """Return ``w_n`` for ``n >= 1``."""
    if n < 1:
        raise DomainError(f"weights are indexed from 1, got {n}")
    if w.kind == WeightKind.CONSTANT:
        return w.value
    if w.kind == WeightKind.FORMULA_W1:
        return w1_value(n)
    if w.kind == WeightKind.EXPLICIT:
        length = len(w.values)
        if n <= length:
            return w.values[n - 1]
        if w.tail == TailRule.HARMONIC:
            return w.values[-1] * length / n
        return w.values[-1]
    # combined: odd indices read the first weight, even ones the second
    if n % 2 == 1:
        return weight_at(w.left, (n + 1) // 2)
    return weight_at(w.right, n // 2)


def weight_values(w, indices):
    """Vector of ``w_n`` over ``indices`` (any iterable of positive ints)."""
    indices = list(indices)
    if not indices:
        return np.zeros(0)
    if min(indices) < 1:
        raise DomainError("weights are indexed from 1")
    if w.kind == WeightKind.CONSTANT:
        return np.full(len(indices), w.value)
    if w.kind == WeightKind.FORMULA_W1:
        n = np.array([float(i) for i in indices])
        return np.log1p(n) / np.sqrt(n)
    return np.array([weight_at(w, i) for i in indices], dtype=float)


def weight_measure(w, index_set):
    """``w(A) = sum of w_i over A``; 0 for the empty set."""
    values = weight_values(w, sorted(set(index_set)))
    return math.fsum(values.tolist())
