from dataclasses import dataclass, field, replace

from django.conf import settings
from django.db import models

from greedy.models import SolverOptions
from spaces.exceptions import ConfigError
from spaces.models import SparseVector


class EstimateKind(models.TextChoices):
    G_BAR = "g_bar", "t-quasi-greedy parameter"
    G_HAT = "g_hat", "Suppression t-quasi-greedy parameter"
    L_CH_U = "L_ch_u", "Upper Chebyshevian Lebesgue parameter"
    L_CH_L = "L_ch_l", "Lower Chebyshevian Lebesgue parameter"
    L = "L", "Lebesgue parameter"
    L_D = "L_d", "Disjoint Lebesgue parameter"
    L_A = "L_a", "Almost greedy parameter"
    L_AD = "L_ad", "Disjoint almost greedy parameter"
    SQUEEZE = "squeeze", "Squeeze symmetry parameter"
    K_M = "k_m", "Norm of projections of size at most m"
    TRUNC_QG = "trunc_qg", "Truncation quasi-greedy constant"
    PROP_C = "prop_C", "Property (C) constant"
    SUCC = "succ", "Suppression unconditionality for constant coefficients"
    # set-function constants produced by the democracy helpers
    SUPERDEMOCRACY = "superdemocracy", "w-superdemocracy constant"
    DEMOCRACY = "democracy", "w-democracy constant"
    PROPERTY_A = "property_A", "w-Property (A) constant"
    BIDEMOCRACY = "bidemocracy", "Bidemocracy constant"


@dataclass(frozen=True)
class Budget:
    """Search effort of one estimate; ``candidates`` extends the seeded family."""

    candidates: int = 200
    pool_size: int = 10
    max_sets: int = 20000
    solver_iterations: int = 1500
    random_starts: int = 2
    seed: int = 0

    @classmethod
    def profile(cls, name="default", **overrides):
        try:
            values = dict(settings.GREEDYLAB_BUDGET_PROFILES[name])
        except KeyError:
            raise ConfigError(f"unknown budget profile '{name}'", pointer="budget")
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def pool(self):
        return tuple(range(1, self.pool_size + 1))

    @property
    def solver_options(self):
        return SolverOptions(
            iterations=self.solver_iterations,
            random_starts=self.random_starts,
            seed=self.seed,
        )

    def with_candidates(self, candidates):
        return replace(self, candidates=candidates)

    def as_dict(self):
        return {
            "candidates": self.candidates,
            "pool_size": self.pool_size,
            "max_sets": self.max_sets,
            "solver_iterations": self.solver_iterations,
            "random_starts": self.random_starts,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Witness:
    """Explicit objects realizing one ratio.

    ``x`` is the vector (or first indicator), ``a_set``/``b_set`` the index
    sets of the defining ratio, ``y``/``z`` auxiliary vectors such as a
    competitor approximant or signed indicators.
    """

    x: SparseVector
    a_set: frozenset = frozenset()
    b_set: frozenset = frozenset()
    y: SparseVector | None = None
    z: SparseVector | None = None
    ratio: float = 0.0


@dataclass(frozen=True)
class ParameterEstimate:
    """A certified lower bound realized by ``witnesses[0]``."""

    kind: str
    m: int
    t: float
    lower_bound: float
    witnesses: tuple
    budget: Budget
    pool: tuple
    spec_hash: str = ""
    evaluated: int = 0
    skipped: int = 0
    converged: bool = True
    notes: tuple = field(default_factory=tuple)

    @property
    def witness(self):
        return self.witnesses[0] if self.witnesses else None


@dataclass(frozen=True)
class DemocracyPoint:
    """Extremes of ``||1_{eps,A}||`` below and above one w-budget."""

    measure: float
    upper: float | None
    lower: float | None
    upper_witness: SparseVector | None = None
    lower_witness: SparseVector | None = None

    @property
    def ratio(self):
        """``upper / lower``; ``None`` when either side is missing."""
        if self.upper is None or not self.lower:
            return None
        return self.upper / self.lower


@dataclass(frozen=True)
class ChainCheck:
    """Property (C) against ``2 kappa C^2`` on one closed candidate family."""

    prop_c: ParameterEstimate
    trunc_qg: ParameterEstimate
    kappa: float
    bound: float
    holds: bool
    family_size: int
