"""Immutable domain types shared by every app.

Nothing here is persisted; ``TextChoices`` are used for the tagged kinds so
that serializers and commands can offer them as choices.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from django.db import models

from .exceptions import CapacityError, DomainError

MAX_INDEX = 2**127 - 1


class WeightKind(models.TextChoices):
    CONSTANT = "constant", "Constant"
    FORMULA_W1 = "formula_w1", "n^(-1/2) log(n+1)"
    EXPLICIT = "explicit", "Explicit list with tail rule"
    COMBINED = "combined", "Interleaved combination"


class TailRule(models.TextChoices):
    REPEAT = "repeat", "Repeat the last value"
    HARMONIC = "harmonic", "Last value times L/n"


class CoefficientKind(models.TextChoices):
    POWER = "power", "n^(-alpha)"
    TABULATED = "tabulated", "Table with power fallback"


class SeriesRule(models.TextChoices):
    INV_N_LOG = "inv_n_log", "n^(-1) log(n+1)^(-1)"
    W1 = "w1", "n^(-1/2) log(n+1)"
    POW_3_4 = "pow_3_4", "n^(-3/4)"


@dataclass(frozen=True)
class Weight:
    """A positive sequence ``(w_n)`` indexed from 1."""

    kind: str
    value: float = 1.0
    values: tuple = ()
    tail: str = TailRule.REPEAT
    left: "Weight | None" = None
    right: "Weight | None" = None

    def __post_init__(self):
        if self.kind not in WeightKind.values:
            raise DomainError(f"Unknown weight kind {self.kind!r}")
        if self.kind == WeightKind.CONSTANT and not (self.value > 0 and math.isfinite(self.value)):
            raise DomainError(f"Constant weight must be positive, got {self.value}")
        if self.kind == WeightKind.EXPLICIT:
            if not self.values:
                raise DomainError("Explicit weight needs at least one value")
            if any(not (v > 0 and math.isfinite(v)) for v in self.values):
                raise DomainError("Explicit weight values must be positive and finite")
            if self.tail not in TailRule.values:
                raise DomainError(f"Unknown tail rule {self.tail!r}")
        if self.kind == WeightKind.COMBINED and (self.left is None or self.right is None):
            raise DomainError("Combined weight needs both components")

    @classmethod
    def constant(cls, c=1.0):
        return cls(kind=WeightKind.CONSTANT, value=float(c))

    @classmethod
    def formula_w1(cls):
        return cls(kind=WeightKind.FORMULA_W1)

    @classmethod
    def explicit(cls, values, tail=TailRule.REPEAT):
        return cls(kind=WeightKind.EXPLICIT, values=tuple(float(v) for v in values), tail=tail)

    @classmethod
    def combined(cls, w, w_prime):
        return cls(kind=WeightKind.COMBINED, left=w, right=w_prime)

    @property
    def tends_to_zero(self):
        """Whether the weight is declared to converge to 0."""
        if self.kind == WeightKind.FORMULA_W1:
            return True
        if self.kind == WeightKind.EXPLICIT:
            return self.tail == TailRule.HARMONIC
        if self.kind == WeightKind.COMBINED:
            return self.left.tends_to_zero and self.right.tends_to_zero
        return False

    @property
    def label(self):
        if self.kind == WeightKind.CONSTANT:
            return f"constant({self.value!r})"
        if self.kind == WeightKind.COMBINED:
            return f"W({self.left.label},{self.right.label})"
        if self.kind == WeightKind.EXPLICIT:
            return f"explicit[{len(self.values)}|{self.tail}]"
        return "w1"


@dataclass(frozen=True)
class CoefficientRule:
    """Coefficients ``c_n`` used by prefix and interval functionals."""

    kind: str = CoefficientKind.POWER
    alpha: float = 0.75
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in CoefficientKind.values:
            raise DomainError(f"Unknown coefficient rule {self.kind!r}")
        if not math.isfinite(self.alpha):
            raise DomainError("Coefficient exponent must be finite")

    @classmethod
    def power(cls, alpha=0.75):
        return cls(kind=CoefficientKind.POWER, alpha=float(alpha))

    @classmethod
    def tabulated(cls, table, alpha=0.75):
        items = tuple(sorted((int(n), float(c)) for n, c in dict(table).items()))
        return cls(kind=CoefficientKind.TABULATED, alpha=float(alpha), table=items)

    @cached_property
    def lookup(self):
        return dict(self.table)

    def values_at(self, indices):
        out = np.array([float(n) for n in indices], dtype=float) ** (-self.alpha)
        if self.kind == CoefficientKind.TABULATED and self.table:
            lookup = self.lookup
            for pos, n in enumerate(indices):
                if n in lookup:
                    out[pos] = lookup[n]
        return out


@dataclass(frozen=True)
class SparseVector:
    """A finitely supported real vector over the canonical basis.

    ``indices`` is strictly increasing and no stored value is zero.
    """

    indices: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise DomainError("indices and values differ in length")
        previous = 0
        for n, v in zip(self.indices, self.values):
            if n <= previous:
                raise DomainError("indices must be strictly increasing and >= 1")
            if v == 0 or not math.isfinite(v):
                raise DomainError(f"coefficient at {n} must be finite and nonzero")
            previous = n
        if self.indices and self.indices[-1] > MAX_INDEX:
            raise CapacityError(f"index {self.indices[-1]} exceeds 2^127 - 1")

    @classmethod
    def from_mapping(cls, mapping):
        items = sorted((int(n), float(v)) for n, v in dict(mapping).items() if v != 0)
        return cls(tuple(n for n, _ in items), tuple(v for _, v in items))

    @classmethod
    def from_pairs(cls, indices, values):
        return cls.from_mapping(zip(indices, values))

    @classmethod
    def from_dense(cls, values, start=1):
        return cls.from_mapping({start + k: v for k, v in enumerate(values)})

    @classmethod
    def indicator(cls, index_set, signs=None):
        """``1_{eps,A}``; ``signs`` maps index to +-1 (all +1 when omitted)."""
        signs = signs or {}
        return cls.from_mapping({n: float(signs.get(n, 1.0)) for n in index_set})

    @classmethod
    def zero(cls):
        return cls()

    @cached_property
    def array(self):
        return np.asarray(self.values, dtype=float)

    @cached_property
    def support(self):
        return frozenset(self.indices)

    @cached_property
    def as_dict(self):
        return dict(zip(self.indices, self.values))

    def __len__(self):
        return len(self.indices)

    def __bool__(self):
        return bool(self.indices)

    def coefficient(self, n):
        return self.as_dict.get(n, 0.0)

    def restrict(self, index_set):
        """Projection ``P_A``: keep coordinates in ``index_set``."""
        keep = set(index_set)
        return SparseVector.from_pairs(
            [n for n in self.indices if n in keep],
            [v for n, v in zip(self.indices, self.values) if n in keep],
        )

    def without(self, index_set):
        drop = set(index_set)
        return self.restrict(n for n in self.indices if n not in drop)

    def scaled(self, t):
        if t == 0:
            return SparseVector()
        return SparseVector(self.indices, tuple(float(t) * v for v in self.values))

    def __add__(self, other):
        merged = dict(self.as_dict)
        for n, v in zip(other.indices, other.values):
            merged[n] = merged.get(n, 0.0) + v
        return SparseVector.from_mapping(merged)

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def signs(self):
        return {n: (1.0 if v > 0 else -1.0) for n, v in zip(self.indices, self.values)}

    def sup(self):
        return float(np.max(np.abs(self.array))) if self.indices else 0.0

    def sort_key(self):
        return tuple(zip(self.indices, self.values))


@dataclass(frozen=True)
class Enclosure:
    """A certified interval ``[lo, hi]``."""

    lo: float
    hi: float
    exact: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError("enclosure endpoints must be finite")
        if self.lo > self.hi:
            raise DomainError(f"empty enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, value):
        return self.lo <= value <= self.hi

    def __add__(self, other):
        lo = math.nextafter(self.lo + other.lo, -math.inf)
        hi = math.nextafter(self.hi + other.hi, math.inf)
        if self.exact and other.exact:
            lo = hi = self.lo + other.lo
        return Enclosure(lo, hi, exact=self.exact and other.exact)


@dataclass(frozen=True)
class BasisConstants:
    """lambda = sup ||x_i||, lambda' = sup ||x_i^*||, lambda'' = sup ||x_i|| ||x_i^*||."""

    lam: float
    lam_prime: float
    lam_double_prime: float
    kappa: float = 1.0
    dimension: int = 0
    converged: bool = True
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("lam", "lam_prime", "lam_double_prime", "kappa"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.lam_double_prime > self.lam * self.lam_prime * (1 + 1e-12):
            raise DomainError("lambda'' must not exceed lambda * lambda'")
