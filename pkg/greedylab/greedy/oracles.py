"""Seeded agreement checks of the Chebyshev solver.

Small supports compare subgradient descent with the certified grid search;
larger supports check that no answer is worse than the plain projection.
"""
import logging

import numpy as np

from spaces.models import CoefficientRule, SparseVector, Weight
from spaces.norms import (
    DirectSumInterleave,
    IntervalFunctional,
    MaxOf,
    PrefixFunctional,
    Reindexed,
    SchauderMajorant,
    SupNorm,
    WeightedLp,
    norm_eval,
)

from .chebyshev import chebyshev_best
from .models import ChebMethod, OracleCheck, SolverOptions

logger = logging.getLogger(__name__)

GRID_AGREEMENT = 1e-4
LARGE_SIZES = (4, 8)
MAX_VIOLATIONS = 20

# one instance of every node kind
ORACLE_SPECS = (
    SupNorm(),
    WeightedLp(2, Weight.constant(1)),
    WeightedLp(1.5, Weight.formula_w1()),
    PrefixFunctional(),
    IntervalFunctional(((1, 2), (3, 6))),
    MaxOf((WeightedLp(2, Weight.formula_w1()), PrefixFunctional(), SupNorm())),
    DirectSumInterleave(SupNorm(), PrefixFunctional()),
    SchauderMajorant(PrefixFunctional(CoefficientRule.power(0.5))),
    Reindexed(PrefixFunctional(), ((1, 4), (4, 1))),
)


def _case(rng, dimension, sizes, extra=0):
    x = SparseVector.from_dense(rng.normal(size=dimension).round(3).tolist())
    size = int(rng.integers(sizes[0], sizes[1] + 1))
    chosen = rng.choice(np.arange(1, dimension + extra + 1), size=size, replace=False)
    return x, frozenset(int(n) for n in chosen)


def chebyshev_oracle_suite(count=500, dimension=6, large_count=10_000, large_iterations=50, seed=0, specs=ORACLE_SPECS):
    """Subgradient against grid on ``|A| <= 3``, then ``error <= ||x - P_A x||`` on ``4 <= |A| <= 8``.

    Cases cycle through ``specs``; each uses ``x`` dense on ``1..dimension``
    (``1..2 dimension`` for the larger supports, with ``A`` allowed two
    indices past the support).
    """
    rng = np.random.default_rng([seed, dimension])
    checked, worst_ratio, worst_case, violations = 0, 0.0, None, []

    def flag(*case):
        if len(violations) < MAX_VIOLATIONS:
            violations.append(case)

    grid = SolverOptions(method=ChebMethod.GRID)
    for case in range(count):
        spec = specs[case % len(specs)]
        x, chosen = _case(rng, dimension, (1, min(3, dimension)))
        oracle = chebyshev_best(spec, x, chosen, grid)
        estimate = chebyshev_best(spec, x, chosen, SolverOptions(method=ChebMethod.SUBGRADIENT, iterations=3000, seed=case))
        ratio = (estimate.error - oracle.error) / max(oracle.error, 1e-12)
        checked += 1
        if ratio > worst_ratio:
            worst_ratio, worst_case = ratio, ("grid", case, str(spec.kind), sorted(chosen))
        if estimate.error > oracle.error * (1 + GRID_AGREEMENT) + 1e-9:
            flag("grid", case, str(spec.kind), sorted(chosen))
        elif estimate.error < oracle.error - oracle.gap - 1e-9:
            flag("grid_gap", case, str(spec.kind), sorted(chosen))

    large = 2 * dimension
    sizes = (min(LARGE_SIZES[0], large), min(LARGE_SIZES[1], large))
    for case in range(large_count):
        spec = specs[case % len(specs)]
        x, chosen = _case(rng, large, sizes, extra=2)
        options = SolverOptions(iterations=large_iterations, random_starts=0, seed=case)
        result = chebyshev_best(spec, x, chosen, options)
        bound = norm_eval(spec, x.without(chosen))
        checked += 1
        if result.error > bound * (1 + 1e-12) or result.error < 0:
            flag("projection", case, str(spec.kind), sorted(chosen))

    if violations:
        logger.warning(f"Chebyshev solver disagrees with its references in {len(violations)} cases")
    logger.info(f"Chebyshev oracle: {checked} cases, worst relative excess over grid {worst_ratio:.3e}")
    return OracleCheck("cheb_oracle", checked, worst_ratio, worst_case, tuple(violations))
