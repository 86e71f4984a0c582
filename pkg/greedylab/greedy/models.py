import math
from dataclasses import dataclass, field

from django.db import models

from spaces.exceptions import DomainError
from spaces.models import SparseVector


class ChebMethod(models.TextChoices):
    EXACT = "exact", "Closed form"
    GRID = "grid", "Adaptive grid (certified gap)"
    SUBGRADIENT = "subgradient", "Subgradient multi-start (estimated gap)"


def check_threshold(value, name="t"):
    """Weakness and separation parameters live in (0, 1]."""
    if not (0 < value <= 1) or not math.isfinite(value):
        raise DomainError(f"{name} must lie in (0, 1], got {value}")
    return float(value)


@dataclass(frozen=True)
class GreedyQuery:
    x: SparseVector
    m: int
    t: float = 1.0

    def __post_init__(self):
        if self.m < 0:
            raise DomainError(f"m must be nonnegative, got {self.m}")
        check_threshold(self.t)


@dataclass(frozen=True)
class SolverOptions:
    iterations: int = 1500
    random_starts: int = 2
    seed: int = 0
    tolerance: float = 1e-4
    # "auto" uses the grid for |A| <= 3 and subgradient descent otherwise
    method: str = "auto"


@dataclass(frozen=True)
class ChebResult:
    """Best approximation of ``x`` from vectors supported in ``support``."""

    y: SparseVector
    error: float
    gap: float
    method: str
    support: frozenset = frozenset()
    converged: bool = True

    @property
    def lower_error(self):
        """Certified-or-estimated lower value of the infimum."""
        return max(0.0, self.error - self.gap)


@dataclass(frozen=True)
class SupportSearchResult:
    """Outcome of a pool-limited infimum over supports.

    ``value`` is an upper bound of the true infimum over all of N; ``pool``
    records the indices that were allowed.
    """

    value: float
    support: frozenset
    pool: tuple
    status: str = "optimal"
    nodes: int = 0
    cheb: ChebResult | None = None
    notes: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class OracleCheck:
    """Worst disagreement between an algorithm and its reference over seeded cases."""

    name: str
    checked: int
    worst_ratio: float
    worst_case: object = None
    violations: tuple = ()

    @property
    def holds(self):
        return not self.violations
