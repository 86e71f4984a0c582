"""Certified lower bounds for the greedy-type parameters.

Each parameter is a supremum of a ratio; an estimate maximizes the ratio
over the seeded candidate family and keeps the witness that realizes it.
Denominators that are infima (best approximation errors) are replaced by
explicit competitors, which can only shrink the ratio.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import billiard
import numpy as np

from greedy.approximation import projection_search, sigma_m_search
from greedy.chebyshev import chebyshev_best
from greedy.models import check_threshold
from greedy.selection import enumerate_greedy_sets
from spaces.duality import dual_norm_eval
from spaces.exceptions import BudgetError, ContractError, DomainError
from spaces.models import SparseVector
from spaces.norms import norm_eval
from spaces.serializers import spec_hash

from .bounds import bound_calculator
from .candidates import candidate_family, sign_patterns
from .models import Budget, ChainCheck, EstimateKind, ParameterEstimate, Witness
from .serializers import witness_key

logger = logging.getLogger(__name__)

SIGN_LIMIT = 128
KAPPA_REAL = 1.0


@dataclass(frozen=True)
class SearchContext:
    kind: str
    m: int
    t: float
    budget: Budget
    pool: tuple
    largest: Witness | None = None
    memo: dict = field(default_factory=dict, compare=False)
    unconverged: list = field(default_factory=list, compare=False)

    @property
    def options(self):
        return self.budget.solver_options

    def greedy_sets(self, x, m=None):
        return enumerate_greedy_sets(x, self.m if m is None else m, self.t, cap=self.budget.max_sets)

    def pool_for(self, x):
        return tuple(sorted(set(self.pool) | x.support))

    def rng(self, *salt):
        return np.random.default_rng([self.budget.seed, *salt])

    def cheb(self, spec, x, index_set):
        key = (x, frozenset(index_set))
        if key not in self.memo:
            result = chebyshev_best(spec, x, index_set, self.options)
            if not result.converged:
                self.unconverged.append(key)
            self.memo[key] = result
        return self.memo[key]


def sign_indicator(x, index_set, signs=None):
    """``1_{eps,A}`` with ``eps`` the signs of ``x`` (+1 off its support) unless given."""
    if signs is None:
        signs = {n: (-1.0 if x.coefficient(n) < 0 else 1.0) for n in index_set}
    return SparseVector.indicator(index_set, signs)


def min_coefficient(x, index_set):
    return min((abs(x.coefficient(n)) for n in index_set), default=0.0)


def padded(index_set, size, avoid):
    """Complete ``index_set`` to ``size`` indices with the smallest ones outside ``avoid``."""
    chosen = set(index_set)
    n = 1
    while len(chosen) < size:
        if n not in avoid and n not in chosen:
            chosen.add(n)
        n += 1
    return frozenset(chosen)


def _quotient(numerator, denominator):
    if denominator <= 0:
        return math.nan
    return numerator / denominator


def witness_ratio(spec, kind, witness, ctx):
    """Re-evaluate the defining ratio of ``kind`` on one witness."""
    x, A, B, y, z = witness.x, witness.a_set, witness.b_set, witness.y, witness.z
    norm = norm_eval(spec, x)
    if kind in (EstimateKind.G_BAR, EstimateKind.K_M):
        return _quotient(norm_eval(spec, x.restrict(A)), norm)
    if kind == EstimateKind.G_HAT:
        return _quotient(norm_eval(spec, x.without(A)), norm)
    if kind in (EstimateKind.L, EstimateKind.L_D):
        return _quotient(norm_eval(spec, x.without(A)), norm_eval(spec, x - y))
    if kind in (EstimateKind.L_A, EstimateKind.L_AD):
        return _quotient(norm_eval(spec, x.without(A)), norm_eval(spec, x.without(B)))
    if kind == EstimateKind.L_CH_U:
        return _quotient(ctx.cheb(spec, x, A).lower_error, norm_eval(spec, x - y))
    if kind == EstimateKind.L_CH_L:
        lowest = min(ctx.cheb(spec, x, G).lower_error for G in ctx.greedy_sets(x))
        return _quotient(lowest, norm_eval(spec, x - y))
    if kind in (EstimateKind.SQUEEZE, EstimateKind.TRUNC_QG, EstimateKind.PROP_C):
        return _quotient(min_coefficient(x, A) * norm_eval(spec, y), norm)
    if kind == EstimateKind.SUCC:
        return _quotient(norm_eval(spec, x.restrict(B)), norm)
    if kind in (EstimateKind.SUPERDEMOCRACY, EstimateKind.DEMOCRACY):
        return _quotient(norm, norm_eval(spec, y))
    if kind == EstimateKind.PROPERTY_A:
        return _quotient(norm_eval(spec, x + y), norm_eval(spec, x + z))
    if kind == EstimateKind.BIDEMOCRACY:
        N = len(ctx.pool)
        dual = dual_norm_eval(
            spec, y, N, iterations=ctx.budget.solver_iterations,
            random_starts=ctx.budget.random_starts, seed=ctx.budget.seed,
        )
        return _quotient(norm * dual.value, ctx.m)
    raise ContractError(f"unknown estimator kind '{kind}'")


def better(current, candidate):
    """Larger ratio wins; ties go to the smaller canonical witness."""
    if candidate is None or math.isnan(candidate.ratio):
        return current
    if current is None or candidate.ratio > current.ratio:
        return candidate
    if candidate.ratio == current.ratio and witness_key(candidate) < witness_key(current):
        return candidate
    return current


def _certified(spec, ctx, witness):
    if witness is None:
        return None
    return replace(witness, ratio=witness_ratio(spec, ctx.kind, witness, ctx))


def best_competitor(spec, x, ctx, forbidden=frozenset()):
    """``(||x - y||, y)`` for an explicit ``y`` with ``|supp(y)| <= m`` avoiding ``forbidden``.

    Both the exact projection search and the pool-limited Chebyshev search
    propose a ``y``; the closer one is kept.
    """
    _, subset = projection_search(spec, x, ctx.m, forbidden)
    best = (norm_eval(spec, x.without(subset)), x.restrict(subset))
    found = sigma_m_search(spec, x, ctx.m, ctx.pool_for(x), ctx.options, forbidden=forbidden)
    if found.cheb is not None:
        distance = norm_eval(spec, x - found.cheb.y)
        if distance < best[0]:
            best = (distance, found.cheb.y)
    return best


def _pick(pairs, largest=True):
    """Extreme value over ``(index_set, value)`` pairs; ties toward the smaller sorted set."""
    order = sorted(pairs, key=lambda item: tuple(sorted(item[0])))
    pick = max if largest else min
    return pick(order, key=lambda item: item[1]) if order else (None, math.nan)


def _score_projection(spec, x, ctx, keep):
    norm = norm_eval(spec, x)
    values = []
    for A in ctx.greedy_sets(x):
        part = x.restrict(A) if keep else x.without(A)
        values.append((A, norm_eval(spec, part)))
    A, value = _pick(values)
    return Witness(x, A, ratio=_quotient(value, norm)) if A is not None else None


def score_g_bar(spec, x, ctx):
    return _score_projection(spec, x, ctx, keep=True)


def score_g_hat(spec, x, ctx):
    return _score_projection(spec, x, ctx, keep=False)


def score_k_m(spec, x, ctx):
    n = len(x)
    top = min(ctx.m, n)
    count = sum(math.comb(n, k) for k in range(1, top + 1))
    if count > ctx.budget.max_sets:
        raise BudgetError(f"{count} projections exceed max_sets", needed=count, cap=ctx.budget.max_sets)
    subsets = [c for k in range(1, top + 1) for c in itertools.combinations(range(n), k)]
    rows = np.zeros((len(subsets), n))
    for row, subset in enumerate(subsets):
        rows[row, list(subset)] = x.array[list(subset)]
    values = spec.evaluate(x.indices, rows)
    pos = int(np.argmax(values))
    A = frozenset(x.indices[k] for k in subsets[pos])
    return Witness(x, A, ratio=float(values[pos]) / norm_eval(spec, x))


def _score_chebyshev(spec, x, ctx, largest):
    denominator, y = best_competitor(spec, x, ctx)
    if denominator <= 0:
        return None
    pairs = [(A, ctx.cheb(spec, x, A).lower_error) for A in ctx.greedy_sets(x)]
    A, value = _pick(pairs, largest=largest)
    return Witness(x, A, y=y, ratio=value / denominator) if A is not None else None


def score_l_ch_u(spec, x, ctx):
    return _score_chebyshev(spec, x, ctx, largest=True)


def score_l_ch_l(spec, x, ctx):
    return _score_chebyshev(spec, x, ctx, largest=False)


def score_lebesgue(spec, x, ctx):
    denominator, y = best_competitor(spec, x, ctx)
    if denominator <= 0:
        return None
    pairs = [(A, norm_eval(spec, x.without(A))) for A in ctx.greedy_sets(x)]
    A, value = _pick(pairs)
    return Witness(x, A, y=y, ratio=value / denominator) if A is not None else None


def score_lebesgue_disjoint(spec, x, ctx):
    best = None
    for A in ctx.greedy_sets(x):
        denominator, y = best_competitor(spec, x, ctx, forbidden=A)
        if denominator > 0:
            best = better(best, Witness(x, A, y=y, ratio=norm_eval(spec, x.without(A)) / denominator))
    return best


def score_almost_greedy(spec, x, ctx):
    value, B = projection_search(spec, x, ctx.m)
    if value <= 0:
        return None
    B = padded(B, ctx.m, x.support)
    pairs = [(A, norm_eval(spec, x.without(A))) for A in ctx.greedy_sets(x)]
    A, numerator = _pick(pairs)
    return Witness(x, A, B, ratio=numerator / value) if A is not None else None


def score_almost_greedy_disjoint(spec, x, ctx):
    best = None
    for A in ctx.greedy_sets(x):
        value, B = projection_search(spec, x, ctx.m, forbidden=A)
        if value > 0:
            B = padded(B, ctx.m, x.support | A)
            best = better(best, Witness(x, A, B, ratio=norm_eval(spec, x.without(A)) / value))
    return best


def largest_indicator(spec, pool, m, budget):
    """``max ||1_{eps,B}||`` over ``|B| = m`` inside ``pool``; exhaustive when it fits ``max_sets``."""
    pool = tuple(pool)
    rng = np.random.default_rng([budget.seed, m, len(pool)])
    total = math.comb(len(pool), m) * 2 ** max(m - 1, 0)
    if total <= budget.max_sets:
        choices = (
            (B, signs)
            for B in itertools.combinations(pool, m)
            for signs in sign_patterns(B, SIGN_LIMIT, rng)
        )
    else:
        choices = []
        for _ in range(budget.max_sets):
            B = tuple(sorted(rng.choice(np.asarray(pool), size=m, replace=False).tolist()))
            choices.append((B, {n: float(rng.choice([-1.0, 1.0])) for n in B}))
    best, best_value = None, -math.inf
    position = {n: k for k, n in enumerate(pool)}
    batch = []

    def flush():
        nonlocal best, best_value
        rows = np.zeros((len(batch), len(pool)))
        for row, (B, signs) in enumerate(batch):
            for n in B:
                rows[row, position[n]] = signs.get(n, 1.0)
        values = spec.evaluate(pool, rows)
        pos = int(np.argmax(values))
        if values[pos] > best_value:
            best_value, best = float(values[pos]), batch[pos]
        batch.clear()

    for choice in choices:
        batch.append(choice)
        if len(batch) == 4096:
            flush()
    if batch:
        flush()
    B, signs = best
    vector = SparseVector.indicator(B, signs)
    return Witness(vector, b_set=frozenset(B), y=vector, ratio=norm_eval(spec, vector))


def score_squeeze(spec, x, ctx):
    largest = ctx.largest
    pairs = [(A, min_coefficient(x, A)) for A in ctx.greedy_sets(x)]
    A, a = _pick(pairs)
    if A is None:
        return None
    return Witness(x, A, largest.b_set, y=largest.y, ratio=a * largest.ratio / norm_eval(spec, x))


def score_trunc_qg(spec, x, ctx):
    norm = norm_eval(spec, x)
    best = None
    for A in ctx.greedy_sets(x):
        indicator = sign_indicator(x, A)
        ratio = min_coefficient(x, A) * norm_eval(spec, indicator) / norm
        best = better(best, Witness(x, A, y=indicator, ratio=ratio))
    return best


def _largest_signed(spec, index_set, rng):
    indices = tuple(sorted(index_set))
    patterns = sign_patterns(indices, SIGN_LIMIT, rng)
    rows = np.array([[signs[n] for n in indices] for signs in patterns])
    values = spec.evaluate(indices, rows)
    pos = int(np.argmax(values))
    return SparseVector.indicator(indices, patterns[pos]), float(values[pos])


def score_prop_c(spec, x, ctx):
    norm = norm_eval(spec, x)
    best = None
    for A in ctx.greedy_sets(x):
        a = min_coefficient(x, A)
        if a == 0:
            continue
        indicator, value = _largest_signed(spec, A, ctx.rng(len(A), *sorted(A)))
        best = better(best, Witness(x, A, y=indicator, ratio=a * value / norm))
    return best


def score_succ(spec, x, ctx):
    best = None
    for A in ctx.greedy_sets(x):
        indicator = sign_indicator(x, A)
        members = sorted(A)
        count = 2 ** len(members) - 1
        if count > ctx.budget.max_sets:
            raise BudgetError(f"{count} subsets exceed max_sets", needed=count, cap=ctx.budget.max_sets)
        subsets = [c for k in range(1, len(members) + 1) for c in itertools.combinations(range(len(members)), k)]
        rows = np.zeros((len(subsets), len(members)))
        signs = np.array([indicator.coefficient(n) for n in members])
        for row, subset in enumerate(subsets):
            rows[row, list(subset)] = signs[list(subset)]
        values = spec.evaluate(tuple(members), rows)
        pos = int(np.argmax(values))
        B = frozenset(members[k] for k in subsets[pos])
        ratio = float(values[pos]) / norm_eval(spec, indicator)
        best = better(best, Witness(indicator, A, B, ratio=ratio))
    return best


SCORERS = {
    EstimateKind.G_BAR: score_g_bar,
    EstimateKind.G_HAT: score_g_hat,
    EstimateKind.L_CH_U: score_l_ch_u,
    EstimateKind.L_CH_L: score_l_ch_l,
    EstimateKind.L: score_lebesgue,
    EstimateKind.L_D: score_lebesgue_disjoint,
    EstimateKind.L_A: score_almost_greedy,
    EstimateKind.L_AD: score_almost_greedy_disjoint,
    EstimateKind.SQUEEZE: score_squeeze,
    EstimateKind.K_M: score_k_m,
    EstimateKind.TRUNC_QG: score_trunc_qg,
    EstimateKind.PROP_C: score_prop_c,
    EstimateKind.SUCC: score_succ,
}


def _score_one(arguments):
    """Best certified witness of one candidate: ``(witness, skipped, unconverged)``."""
    spec, x, ctx = arguments
    before = len(ctx.unconverged)
    try:
        witness = _certified(spec, ctx, SCORERS[ctx.kind](spec, x, ctx))
    except BudgetError as exc:
        logger.warning(f"Skipped a {ctx.kind} candidate with |supp|={len(x)}: {exc}")
        return None, 1, len(ctx.unconverged) - before
    return witness, 0, len(ctx.unconverged) - before


def score_family(spec, family, ctx, jobs=1):
    """Score candidates, in-process or over a billiard pool; results keep input order."""
    tasks = [(spec, x, ctx) for x in family]
    if jobs > 1 and len(tasks) > 1:
        with billiard.Pool(jobs) as workers:
            return workers.map(_score_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))
    return [_score_one(task) for task in tasks]


def _context(spec, kind, m, t, budget, pool):
    try:
        kind = EstimateKind(kind)
    except ValueError:
        raise ContractError(f"unknown estimator kind '{kind}'")
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    t = check_threshold(t)
    budget = budget or Budget.profile()
    pool = tuple(sorted(set(pool))) if pool is not None else budget.pool
    if not pool or pool[0] < 1:
        raise DomainError("the pool must be a nonempty set of positive indices")
    return SearchContext(kind, m, t, budget, pool)


def _estimate(spec, ctx, scored, evaluated, notes=()):
    best, skipped, unconverged = None, 0, 0
    for witness, skip, flag in scored:
        best = better(best, witness)
        skipped += skip
        unconverged += flag
    notes = list(notes)
    if unconverged:
        notes.append(f"{unconverged} Chebyshev searches did not converge")
    if best is None:
        notes.append("no candidate produced a ratio")
    return ParameterEstimate(
        kind=ctx.kind,
        m=ctx.m,
        t=ctx.t,
        lower_bound=best.ratio if best else 0.0,
        witnesses=(best,) if best else (),
        budget=ctx.budget,
        pool=ctx.pool,
        spec_hash=spec_hash(spec),
        evaluated=evaluated,
        skipped=skipped,
        converged=unconverged == 0,
        notes=tuple(notes),
    )


def estimate_parameter(spec, kind, m, t=1.0, budget=None, pool=None, jobs=1):
    """Lower bound for one parameter at ``(m, t)``, realized by an explicit witness.

    With ``budget.candidates == 0`` only the trivial candidates are scored.
    """
    ctx = _context(spec, kind, m, t, budget, pool)
    if ctx.kind not in SCORERS:
        raise ContractError(f"'{ctx.kind}' is estimated by its own helper")
    if ctx.kind == EstimateKind.SQUEEZE:
        if len(ctx.pool) < m:
            raise ContractError(f"the pool needs at least m={m} indices")
        ctx = replace(ctx, largest=largest_indicator(spec, ctx.pool, m, ctx.budget))
    family = candidate_family(ctx.pool, m, ctx.t, ctx.budget.candidates, ctx.budget.seed)
    notes = ["denominators are pool-limited upper bounds"] if ctx.kind in DENOMINATOR_KINDS else []
    estimate = _estimate(spec, ctx, score_family(spec, family, ctx, jobs), len(family), notes)
    logger.info(
        f"{ctx.kind}(m={m}, t={ctx.t}) >= {estimate.lower_bound:.6g} over {len(family)} candidates"
    )
    return estimate


DENOMINATOR_KINDS = (EstimateKind.L_CH_U, EstimateKind.L_CH_L, EstimateKind.L, EstimateKind.L_D)


def reevaluate(spec, estimate):
    """Ratio of the stored witness recomputed from scratch (``nan`` without witness)."""
    if not estimate.witnesses:
        return math.nan
    ctx = SearchContext(EstimateKind(estimate.kind), estimate.m, estimate.t, estimate.budget, tuple(estimate.pool))
    return witness_ratio(spec, ctx.kind, estimate.witnesses[0], ctx)


def is_self_certified(spec, estimate, rtol=1e-9):
    value = reevaluate(spec, estimate)
    if not estimate.witnesses:
        return estimate.lower_bound == 0.0
    return abs(value - estimate.lower_bound) <= rtol * max(1.0, abs(estimate.lower_bound))


def closed_family(base, m, budget):
    """``base`` plus every signed sub-indicator ``1_{eps(x),B}`` of its greedy sets of size ``<= m``."""
    seen = set(base)
    family = list(base)
    for x in base:
        for k in range(1, min(m, len(x)) + 1):
            for A in enumerate_greedy_sets(x, k, 1.0, cap=budget.max_sets):
                indicator = sign_indicator(x, A)
                members = sorted(A)
                for size in range(1, len(members) + 1):
                    for B in itertools.combinations(members, size):
                        vector = indicator.restrict(B)
                        if vector not in seen:
                            seen.add(vector)
                            family.append(vector)
    return family


def remark37_chain(spec, m, budget=None, pool=None):
    """Check ``Property (C) <= 2 kappa C_tqg^2`` with both sides on one closed family.

    Sizes ``1..m`` are scanned so that every sub-indicator used by the
    chain of inequalities is itself scored.
    """
    base_ctx = _context(spec, EstimateKind.PROP_C, m, 1.0, budget, pool)
    base = candidate_family(base_ctx.pool, m, 1.0, base_ctx.budget.candidates, base_ctx.budget.seed)
    family = closed_family(base, m, base_ctx.budget)
    results = {}
    for kind, scorer in ((EstimateKind.TRUNC_QG, score_trunc_qg), (EstimateKind.PROP_C, score_prop_c)):
        scored = []
        for size in range(1, m + 1):
            ctx = replace(base_ctx, kind=kind, m=size, memo={}, unconverged=[])
            for x in family:
                if len(x) < size:
                    continue
                scored.append(_score_one_with(scorer, spec, x, ctx))
        ctx = replace(base_ctx, kind=kind, memo={}, unconverged=[])
        results[kind] = _estimate(spec, ctx, scored, len(family), ["closed family, sizes 1..m"])
    tqg, prop_c = results[EstimateKind.TRUNC_QG], results[EstimateKind.PROP_C]
    bound = bound_calculator("remark37", {"C": max(tqg.lower_bound, 1e-300), "kappa": KAPPA_REAL})
    holds = prop_c.lower_bound <= bound * (1 + 1e-9)
    if not holds:
        logger.error(f"Property (C) estimate {prop_c.lower_bound!r} exceeds 2 kappa C^2 = {bound!r}")
    return ChainCheck(prop_c, tqg, KAPPA_REAL, bound, holds, len(family))


def _score_one_with(scorer, spec, x, ctx):
    try:
        witness = scorer(spec, x, ctx)
    except BudgetError as exc:
        logger.warning(f"Skipped a chain candidate with |supp|={len(x)}: {exc}")
        return None, 1, 0
    if witness is None:
        return None, 0, 0
    return replace(witness, ratio=witness_ratio(spec, ctx.kind, witness, ctx)), 0, 0
