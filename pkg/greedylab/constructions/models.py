from dataclasses import dataclass, field

from django.conf import settings
from django.db import models

from spaces.exceptions import DomainError
from spaces.models import Enclosure, SparseVector


class PresetName(models.TextChoices):
    XP = "xp", "max of sup and weighted l_p"
    EX72 = "ex72", "conditional w1-almost greedy basis"
    EX74 = "ex74", "w1-almost semi-greedy basis that is not quasi-greedy"
    EX76 = "ex76", "Schauder majorant of the rearranged interval space"
    SUM = "sum", "interleaved direct sum"
    COR78 = "cor78", "interleaved sum with a c0 weighted l_p"


class Corollary78Variant(models.TextChoices):
    ALMOST_GREEDY = "almost_greedy", "conditional W-almost greedy Schauder basis"
    SEMI_NOT_QG_SCHAUDER = "semi_not_qg_schauder", "W-almost semi-greedy Schauder basis, not quasi-greedy"
    SEMI_NOT_SCHAUDER = "semi_not_schauder", "W-almost semi-greedy basis, not Schauder"


class Relation(models.TextChoices):
    LE = "<=", "at most"
    GE = ">=", "at least"
    EQ = "==", "equal up to rounding"


@dataclass(frozen=True)
class SpacePreset:
    """A named norm with the weight it is studied against.

    ``metadata`` records how the preset was built (parameters, component
    names, rearrangement bounds) and is written into reports verbatim.
    """

    name: str
    spec: object
    weight: object
    metadata: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class IntervalFamily:
    """Ordered disjoint integer intervals with certified sums of ``1/(n log(n+1))``."""

    intervals: tuple
    sums: tuple
    targets: tuple = ()

    def __post_init__(self):
        if len(self.intervals) != len(self.sums):
            raise DomainError("every interval needs its sum enclosure")
        previous = 0
        for lo, hi in self.intervals:
            if lo > hi or lo <= previous:
                raise DomainError("intervals must be nonempty, ordered and disjoint")
            previous = hi

    @property
    def count(self):
        return len(self.intervals)

    def interval(self, m):
        if not 1 <= m <= self.count:
            raise DomainError(f"the family has intervals 1..{self.count}, got m={m}")
        return self.intervals[m - 1]

    def length(self, m):
        lo, hi = self.interval(m)
        return hi - lo + 1

    def explicit(self, m):
        """Whether ``A_m`` is short enough to list its terms."""
        return self.length(m) <= settings.GREEDYLAB_DIRECT_SUM_LIMIT

    @property
    def touches_first_index(self):
        return bool(self.intervals) and self.intervals[0][0] == 1


@dataclass(frozen=True)
class Inequality:
    """One checked inequality ``lhs <relation> rhs``."""

    name: str
    lhs: float
    relation: str
    rhs: float
    holds: bool
    note: str = ""


@dataclass(frozen=True)
class IntervalWitness:
    """The split vector ``z_m`` of one interval together with its certificates.

    For intervals too long to list, ``vector`` is ``None`` and only the
    aggregate enclosures are kept; ``selected`` is always the index range
    ``(lo, hi)`` of the positive block ``E_m``.
    """

    m: int
    interval: tuple
    split: int
    selected: tuple
    total: Enclosure
    head: Enclosure
    tail: Enclosure
    certificates: tuple
    vector: SparseVector | None = None
    # ||P_E z_m|| / ||z_m||, known only for listed intervals
    projection_ratio: float | None = None

    @property
    def explicit(self):
        return self.vector is not None

    @property
    def holds(self):
        return all(item.holds for item in self.certificates)


@dataclass(frozen=True)
class RearrangedWitness:
    """``y_m`` in the rearranged basis with its Schauder-majorant certificates."""

    m: int
    permutation: tuple
    achieved_bound: float
    certificates: tuple
    vector: SparseVector | None = None

    @property
    def holds(self):
        return all(item.holds for item in self.certificates)


@dataclass(frozen=True)
class SuiteResult:
    """Worst case of an inequality over a family of sets or vectors."""

    name: str
    checked: int
    worst_ratio: float
    worst_case: object = None
    violations: tuple = ()
    details: tuple = ()

    @property
    def holds(self):
        return not self.violations


@dataclass(frozen=True)
class ConditionalityPoint:
    m: int
    y_norm: float
    z_norm: float

    @property
    def ratio(self):
        return self.y_norm / self.z_norm
