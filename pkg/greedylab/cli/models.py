from dataclasses import dataclass, field

from django.db import models


class TableName(models.TextChoices):
    SPACE_EVAL = "space_eval", "Norms of given vectors"
    GREEDY_SETS = "greedy_sets", "Greedy sets of a vector"
    CHEB = "cheb", "Chebyshev approximation on a set"
    SIGMA = "sigma", "Best m-term approximation errors"
    PARAM = "param", "Lebesgue-type parameter estimates"
    DEMOCRACY_PROFILE = "democracy_profile", "Fundamental function profile"
    LEMMA71 = "lemma71", "Sum inequality suite"
    EX72_SANDWICH = "ex72_sandwich", "Sign-indicator sandwich in the prefix space"
    EX72_CONDITIONALITY = "ex72_conditionality", "Conditionality ratio of the prefix space"
    EX72_QG = "ex72_qg", "Greedy projections in the prefix space"
    EX74_CERTIFICATES = "ex74_certificates", "Split-vector certificates of the interval space"
    EX76_CERTIFICATES = "ex76_certificates", "Rearranged-basis certificates"
    LEMMA75 = "lemma75", "Schauder majorant structure"
    LEMMA77 = "lemma77", "Interleaved-sum fundamental function"
    BOUNDS = "bounds", "Closed-form constant bounds"
    XP_EXACTNESS = "xp_exactness", "Exact fundamental function of X_p"
    GREEDY_ORACLE = "greedy_oracle", "Greedy-set enumeration against brute force"
    CHEB_ORACLE = "cheb_oracle", "Chebyshev solver against the grid search"


class RowStatus(models.TextChoices):
    OK = "ok", "Computed"
    FAILED = "failed", "Check failed"
    ERROR = "error", "Raised an error"


@dataclass(frozen=True)
class TableRequest:
    table: str
    params: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment.

    ``document`` is the config JSON the object was validated from; workers
    receive it instead of the object and validate it again.
    """

    space: str
    preset: object
    seed: int
    budget: object
    outputs: tuple
    p: float = 2.0
    intervals: int = 3
    document: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass
class TableResult:
    """Formatted rows of one table plus the records behind them."""

    table: str
    columns: list
    rows: list = field(default_factory=list)
    estimates: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def as_dict(self):
        return {
            "table": self.table,
            "columns": list(self.columns),
            "rows": self.rows,
            "estimates": self.estimates,
            "certificates": self.certificates,
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class ReportBundle:
    """Files written by one run, in request order."""

    out: object
    tables: tuple
    manifest: dict
    summary: dict

    @property
    def passed(self):
        return all(result.passed for result in self.tables)

    @property
    def failures(self):
        return [failure for result in self.tables for failure in result.failures]
