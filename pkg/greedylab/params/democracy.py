"""Set-function constants: w-(super)democracy, w-Property (A) and bidemocracy."""
import itertools
import logging
import math
from dataclasses import replace

import numpy as np
from django.conf import settings

from spaces.duality import dual_norm_eval
from spaces.exceptions import DomainError
from spaces.models import SparseVector
from spaces.serializers import spec_hash
from spaces.weights import weight_measure, weight_values

from .candidates import sign_patterns
from .estimators import SearchContext, better, witness_ratio
from .models import Budget, DemocracyPoint, EstimateKind, ParameterEstimate, Witness

logger = logging.getLogger(__name__)

BATCH = 4096
DUAL_SAMPLES = 12


def signed_sets(pool, budget, democratic=False):
    """``(A, signs)`` pairs over ``pool``: all of them when they fit ``max_sets``, else a seeded sample."""
    pool = tuple(pool)
    n = len(pool)
    total = 2**n - 1 if democratic else (3**n - 1) // 2
    if total <= budget.max_sets:
        for size in range(1, n + 1):
            for subset in itertools.combinations(pool, size):
                if democratic:
                    yield subset, {}
                    continue
                for signs in sign_patterns(subset, 2**size, None):
                    yield subset, signs
        return
    rng = np.random.default_rng([budget.seed, n, int(democratic)])
    for _ in range(budget.max_sets):
        size = int(rng.integers(1, n + 1))
        subset = tuple(sorted(rng.choice(np.asarray(pool), size=size, replace=False).tolist()))
        signs = {} if democratic else {k: float(rng.choice([-1.0, 1.0])) for k in subset}
        yield subset, signs


def _tabulate(spec, weight, pool, budget, democratic):
    """Measures and norms of every visited signed indicator."""
    pool = tuple(pool)
    position = {n: k for k, n in enumerate(pool)}
    w = weight_values(weight, pool).tolist()
    measures, norms, members = [], [], []
    batch = []

    def flush():
        rows = np.zeros((len(batch), len(pool)))
        for row, (subset, signs) in enumerate(batch):
            for n in subset:
                rows[row, position[n]] = signs.get(n, 1.0)
        norms.extend(spec.evaluate(pool, rows).tolist())
        batch.clear()

    for subset, signs in signed_sets(pool, budget, democratic):
        measures.append(math.fsum(w[position[n]] for n in subset))
        members.append((subset, signs))
        batch.append((subset, signs))
        if len(batch) == BATCH:
            flush()
    if batch:
        flush()
    return np.array(measures), np.array(norms), members


def democracy_profile(spec, weight, measures=None, budget=None, pool=None, democratic=False):
    """Largest ``||1_{eps,A}||`` with ``w(A) <= W`` and smallest with ``w(A) >= W``, per budget ``W``.

    ``measures`` defaults to every distinct measure met.  The democracy
    variant fixes all signs to +1.
    """
    budget = budget or Budget.profile()
    pool = tuple(sorted(set(pool))) if pool is not None else budget.pool
    if not pool:
        raise DomainError("the pool must be nonempty")
    values, norms, members = _tabulate(spec, weight, pool, budget, democratic)
    order = np.argsort(values, kind="stable")
    values, norms = values[order], norms[order]
    members = [members[k] for k in order]

    prefix = np.maximum.accumulate(norms)
    prefix_at = np.maximum.accumulate(np.where(norms == prefix, np.arange(len(norms)), 0))
    suffix = np.minimum.accumulate(norms[::-1])[::-1]
    suffix_at = np.arange(len(norms))
    for k in range(len(norms) - 2, -1, -1):
        if norms[k] > suffix[k + 1]:
            suffix_at[k] = suffix_at[k + 1]

    def indicator(k):
        subset, signs = members[k]
        return SparseVector.indicator(subset, signs)

    targets = sorted(set(values.tolist())) if measures is None else list(measures)
    points = []
    for W in targets:
        below = int(np.searchsorted(values, W, side="right")) - 1
        above = int(np.searchsorted(values, W, side="left"))
        upper = float(prefix[below]) if below >= 0 else None
        lower = float(suffix[above]) if above < len(values) else None
        points.append(
            DemocracyPoint(
                measure=float(W),
                upper=upper,
                lower=lower,
                upper_witness=indicator(int(prefix_at[below])) if below >= 0 else None,
                lower_witness=indicator(int(suffix_at[above])) if above < len(values) else None,
            )
        )
    logger.info(f"Democracy profile over {len(values)} signed sets, {len(points)} budgets")
    return points


def _profile_estimate(spec, weight, budget, pool, kind, democratic):
    budget = budget or Budget.profile()
    pool = tuple(sorted(set(pool))) if pool is not None else budget.pool
    ctx = SearchContext(kind, 0, 1.0, budget, pool)
    best = None
    points = democracy_profile(spec, weight, None, budget, pool, democratic)
    for point in points:
        if point.upper_witness is None or point.lower_witness is None:
            continue
        witness = Witness(point.upper_witness, y=point.lower_witness)
        best = better(best, replace(witness, ratio=witness_ratio(spec, kind, witness, ctx)))
    return ParameterEstimate(
        kind=kind,
        m=0,
        t=1.0,
        lower_bound=best.ratio if best else 0.0,
        witnesses=(best,) if best else (),
        budget=budget,
        pool=pool,
        spec_hash=spec_hash(spec),
        evaluated=len(points),
        notes=(f"weight {weight.label}",),
    )


def superdemocracy_lb(spec, weight, budget=None, pool=None):
    """``max ||1_{eps,A}|| / ||1_{eps',B}||`` over visited pairs with ``w(A) <= w(B)``."""
    return _profile_estimate(spec, weight, budget, pool, EstimateKind.SUPERDEMOCRACY, democratic=False)


def democracy_lb(spec, weight, budget=None, pool=None):
    return _profile_estimate(spec, weight, budget, pool, EstimateKind.DEMOCRACY, democratic=True)


def _property_a_sample(rng, pool, weight):
    order = rng.permutation(np.asarray(pool)).tolist()
    cut_x = int(rng.integers(1, len(order) - 1))
    cut_a = int(rng.integers(cut_x, len(order)))
    support, first, second = order[:cut_x], order[cut_x:cut_a], order[cut_a:]
    magnitudes = rng.uniform(0.05, 1.0, size=len(support)) * rng.choice([-1.0, 1.0], size=len(support))
    x = SparseVector.from_pairs(support, magnitudes.tolist())
    if weight_measure(weight, first) > weight_measure(weight, second):
        first, second = second, first
    y = SparseVector.indicator(first, {n: float(rng.choice([-1.0, 1.0])) for n in first})
    z = SparseVector.indicator(second, {n: float(rng.choice([-1.0, 1.0])) for n in second})
    return Witness(x, frozenset(first), frozenset(second), y=y, z=z)


def check_property_A(spec, weight, budget=None, pool=None):
    """Lower bound of the w-Property (A) constant over sampled ``(x, A, B, eps, eps')``.

    ``A``, ``B`` and ``supp(x)`` are pairwise disjoint, ``||x||_inf <= 1`` and
    ``w(A) <= w(B)``.
    """
    budget = budget or Budget.profile()
    pool = tuple(sorted(set(pool))) if pool is not None else budget.pool
    if len(pool) < 3:
        raise DomainError("Property (A) sampling needs a pool of at least 3 indices")
    ctx = SearchContext(EstimateKind.PROPERTY_A, 0, 1.0, budget, pool)
    trivial = Witness(SparseVector.indicator([pool[0]]), y=SparseVector(), z=SparseVector())
    best = replace(trivial, ratio=witness_ratio(spec, ctx.kind, trivial, ctx))
    rng = np.random.default_rng([budget.seed, len(pool)])
    for _ in range(budget.candidates):
        witness = _property_a_sample(rng, pool, weight)
        best = better(best, replace(witness, ratio=witness_ratio(spec, ctx.kind, witness, ctx)))
    logger.info(f"Property (A) >= {best.ratio:.6g} over {budget.candidates + 1} samples")
    return ParameterEstimate(
        kind=ctx.kind,
        m=0,
        t=1.0,
        lower_bound=best.ratio,
        witnesses=(best,),
        budget=budget,
        pool=pool,
        spec_hash=spec_hash(spec),
        evaluated=budget.candidates + 1,
        notes=(f"weight {weight.label}",),
    )


def _largest_plain_indicator(spec, N, m, budget):
    pool = tuple(range(1, N + 1))
    count = sum(math.comb(N, k) for k in range(1, m + 1))
    if count <= budget.max_sets:
        subsets = [c for k in range(1, m + 1) for c in itertools.combinations(pool, k)]
    else:
        rng = np.random.default_rng([budget.seed, N, m])
        subsets = [tuple(sorted(rng.choice(np.asarray(pool), size=m, replace=False).tolist())) for _ in range(budget.max_sets)]
    rows = np.zeros((len(subsets), N))
    for row, subset in enumerate(subsets):
        rows[row, [n - 1 for n in subset]] = 1.0
    values = spec.evaluate(pool, rows)
    pos = int(np.argmax(values))
    return SparseVector.indicator(subsets[pos])


def _dual_candidates(N, m, seed):
    found = [tuple(range(1, m + 1)), tuple(range(N - m + 1, N + 1))]
    rng = np.random.default_rng([seed, N, m, 1])
    while len(found) < DUAL_SAMPLES and math.comb(N, m) > len(set(found)):
        found.append(tuple(sorted(rng.choice(np.arange(1, N + 1), size=m, replace=False).tolist())))
    return list(dict.fromkeys(found))


def bidemocracy_lb(spec, m, N, budget=None):
    """``max ||1_A|| * ||1_B^*|| / m`` over ``|A|, |B| <= m`` in ``1..N``.

    The dual factor is a numerical lower bound; its convergence flag is
    carried by the estimate.
    """
    budget = budget or Budget.profile()
    if N > settings.GREEDYLAB_DUAL_MAX_DIM:
        raise DomainError(f"dual norms are evaluated for N <= {settings.GREEDYLAB_DUAL_MAX_DIM}")
    if m < 1 or m > N:
        raise DomainError(f"bidemocracy needs 1 <= m <= N, got m={m}, N={N}")
    x = _largest_plain_indicator(spec, N, m, budget)
    best_dual, best_set, converged = -math.inf, None, True
    duals = _dual_candidates(N, m, budget.seed)
    for subset in duals:
        result = dual_norm_eval(
            spec, SparseVector.indicator(subset), N,
            iterations=budget.solver_iterations, random_starts=budget.random_starts, seed=budget.seed,
        )
        converged = converged and result.converged
        if result.value > best_dual:
            best_dual, best_set = result.value, subset
    ctx = SearchContext(EstimateKind.BIDEMOCRACY, m, 1.0, budget, tuple(range(1, N + 1)))
    witness = Witness(x, x.support, frozenset(best_set), y=SparseVector.indicator(best_set))
    witness = replace(witness, ratio=witness_ratio(spec, ctx.kind, witness, ctx))
    if not converged:
        logger.warning(f"Bidemocracy at m={m}, N={N} rests on unconverged dual norms")
    return ParameterEstimate(
        kind=ctx.kind,
        m=m,
        t=1.0,
        lower_bound=witness.ratio,
        witnesses=(witness,),
        budget=budget,
        pool=ctx.pool,
        spec_hash=spec_hash(spec),
        evaluated=len(duals),
        converged=converged,
        notes=() if converged else ("dual norm solver did not converge",),
    )
