"""Exhaustive and sampled checks of the inequalities behind the preset spaces."""
import itertools
import logging
import math

import numpy as np
from django.conf import settings

from params.estimators import estimate_parameter
from params.models import Budget, EstimateKind
from spaces.exceptions import BudgetError, CapacityError, DomainError
from spaces.norms import SchauderMajorant, norm_of_indicator
from spaces.weights import weight_values

from .models import ConditionalityPoint, SuiteResult
from .presets import ONE, W1, build_example_72, build_xp, direct_sum, example74_zm, failure_bound

logger = logging.getLogger(__name__)

QG_CONSTANT = 6.0
TOLERANCE = 1e-12
MAX_VIOLATIONS = 20
# dense {-1, 0, 1}^n enumeration stops here: 3^10 rows
MAX_SIGNED_POOL = 10
SANDWICH_TOLERANCE = 1e-10
BATCH_ROWS = 1 << 16


def signed_rows(n):
    """Every vector in ``{-1, 0, 1}^n``, the zero row included."""
    if not 1 <= n <= MAX_SIGNED_POOL:
        raise DomainError(f"signed enumeration needs 1 <= n <= {MAX_SIGNED_POOL}, got {n}")
    return np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))


def signed_set_count(pool, max_size):
    """Rows ``signed_batches`` yields: one sign pattern of each opposite pair."""
    return sum(math.comb(pool, size) * 2 ** (size - 1) for size in range(1, min(max_size, pool) + 1))


def signed_batches(pool, max_size, batch_rows=BATCH_ROWS):
    """Dense rows ``1_{eps,A}`` over ``1..pool`` for every ``|A| <= max_size``.

    Norms are even, so only patterns with a leading ``+1`` are produced.
    """
    needed = signed_set_count(pool, max_size)
    if needed > settings.GREEDYLAB_SIGNED_CAP:
        raise BudgetError(
            f"{needed} signed sets over 1..{pool} exceed the cap",
            needed=needed,
            cap=settings.GREEDYLAB_SIGNED_CAP,
        )
    for size in range(1, min(max_size, pool) + 1):
        tails = np.array(list(itertools.product((1.0, -1.0), repeat=size - 1)), dtype=float)
        signs = np.hstack([np.ones((len(tails), 1)), tails.reshape(len(tails), size - 1)])
        per_block = max(1, batch_rows // len(signs))
        combinations = itertools.combinations(range(pool), size)
        while block := list(itertools.islice(combinations, per_block)):
            columns = np.repeat(np.array(block, dtype=np.int64), len(signs), axis=0)
            rows = np.zeros((len(columns), pool))
            np.put_along_axis(rows, columns, np.tile(signs, (len(block), 1)), axis=1)
            yield rows


def random_signed_sets(rng, count, domain, max_size):
    """``count`` sign indicators on random subsets of ``1..domain`` with at most ``max_size`` elements."""
    for _ in range(count):
        size = int(rng.integers(1, min(max_size, domain) + 1))
        indices = np.sort(rng.choice(domain, size=size, replace=False)) + 1
        yield tuple(int(n) for n in indices), rng.choice((-1.0, 1.0), size=size)


def _members(row):
    return tuple(int(k) + 1 for k in np.flatnonzero(row))


def _signed_case(row, indices=None):
    return tuple((int(indices[k]) if indices else int(k) + 1, int(row[k])) for k in np.flatnonzero(row))


def _signed_scan(name, check, pool, max_size, random_count, random_max, seed):
    """Run ``check(indices, rows) -> (scores, bad)`` over the exhaustive and the sampled sign indicators."""
    checked, worst_ratio, worst_case, violations = 0, -math.inf, None, []

    def record(indices, rows):
        nonlocal checked, worst_ratio, worst_case
        scores, bad = check(indices, rows)
        checked += len(rows)
        top = int(np.argmax(scores))
        if scores[top] > worst_ratio:
            worst_ratio, worst_case = float(scores[top]), _signed_case(rows[top], indices)
        for k in np.flatnonzero(bad)[: MAX_VIOLATIONS - len(violations)]:
            violations.append(_signed_case(rows[k], indices))

    full = tuple(range(1, pool + 1))
    for rows in signed_batches(pool, max_size):
        record(full, rows)
    rng = np.random.default_rng([seed, random_max])
    for indices, signs in random_signed_sets(rng, random_count, random_max, max_size):
        record(indices, signs[np.newaxis, :])
    logger.info(f"Suite {name}: {checked} sign indicators, worst ratio {worst_ratio:.6g}, {len(violations)} violations")
    return SuiteResult(name, checked, worst_ratio, worst_case, tuple(violations))


def lemma71_suite(exhaustive_n=12, random_count=10_000, random_max=100_000, seed=0, max_size=1000):
    """``sum_{n in A} n^{-3/4} <= 4 (sum_{n in A} n^{-1/2} log(n+1))^{1/2}``.

    All nonempty ``A`` in ``1..exhaustive_n``, then ``random_count`` sampled
    subsets of ``1..random_max``.
    """
    pool = np.arange(1, exhaustive_n + 1, dtype=float)
    masks = ((np.arange(1, 2**exhaustive_n)[:, None] >> np.arange(exhaustive_n)) & 1).astype(float)
    ratios = (masks @ pool**-0.75) / (4 * np.sqrt(masks @ (np.log1p(pool) / np.sqrt(pool))))
    worst = int(np.argmax(ratios))
    worst_ratio, worst_case = float(ratios[worst]), _members(masks[worst])
    violations = [_members(masks[k]) for k in np.flatnonzero(ratios > 1)]

    rng = np.random.default_rng([seed, random_max])
    for _ in range(random_count):
        size = int(rng.integers(1, min(max_size, random_max) + 1))
        n = np.unique(rng.integers(1, random_max + 1, size=size)).astype(float)
        ratio = float(np.sum(n**-0.75) / (4 * math.sqrt(np.sum(np.log1p(n) / np.sqrt(n)))))
        if ratio > worst_ratio:
            worst_ratio, worst_case = ratio, tuple(int(k) for k in n)
        if ratio > 1 and len(violations) < MAX_VIOLATIONS:
            violations.append(tuple(int(k) for k in n))

    checked = len(ratios) + random_count
    logger.info(f"Sum bound over {checked} sets: worst ratio {worst_ratio:.6g}")
    return SuiteResult("lemma71", checked, worst_ratio, worst_case, tuple(violations[:MAX_VIOLATIONS]))


def example72_conditionality(ms=(100, 10_000, 1_000_000)):
    """``||y_m|| / ||z_m||`` in the prefix-functional space, from prefix sums."""
    points = []
    for m in ms:
        if m < 1:
            raise DomainError(f"m must be at least 1, got {m}")
        if m > settings.GREEDYLAB_DIRECT_SUM_LIMIT:
            raise CapacityError(f"m={m} exceeds the direct summation limit")
        n = np.arange(1, m + 1, dtype=float)
        c = n**-0.25 / np.log1p(n)
        t = n**-0.75 * c
        total = math.fsum(t.tolist())
        sup = float(c[0])
        signs = np.where(n % 2 == 0, 1.0, -1.0)
        alternating = float(np.max(np.abs(np.cumsum(signs * t))))
        # the prefix sums of y_m are increasing, so their sup is the total
        points.append(ConditionalityPoint(m, max(math.sqrt(total), total, sup), max(math.sqrt(total), alternating, sup)))
    return points


def example72_qg_suite(count=10_000, m_max=8, seed=0, pool_size=10):
    """``||P_A x|| / ||x||`` over greedy sets of the seeded candidates, against the bound 6."""
    spec = build_example_72().spec
    budget = Budget.profile("default", candidates=count, seed=seed, pool_size=max(pool_size, m_max))
    estimates = tuple(estimate_parameter(spec, EstimateKind.G_BAR, m, budget=budget) for m in range(1, m_max + 1))
    worst = max(estimates, key=lambda estimate: estimate.lower_bound)
    violations = tuple(estimate.m for estimate in estimates if estimate.lower_bound > QG_CONSTANT)
    if violations:
        logger.warning(f"Greedy projections exceed {QG_CONSTANT} at m={violations}")
    return SuiteResult(
        "ex72_qg",
        sum(estimate.evaluated for estimate in estimates),
        worst.lower_bound,
        worst.witness,
        violations,
        estimates,
    )


def example72_sandwich_suite(pool=20, max_size=8, random_count=1000, random_max=10_000, seed=0):
    """``max(1, w1(A)^{1/2}) <= ||1_{eps,A}|| <= max(1, 4 w1(A)^{1/2})``.

    Every signed ``A`` in ``1..pool`` with ``|A| <= max_size``, then
    ``random_count`` signed subsets of ``1..random_max``.
    """
    spec = build_example_72().spec

    def check(indices, rows):
        norms = spec.evaluate(indices, rows)
        root = np.sqrt((rows != 0) @ weight_values(W1, indices))
        lower, upper = np.maximum(1.0, root), np.maximum(1.0, 4 * root)
        bad = (norms < lower * (1 - SANDWICH_TOLERANCE)) | (norms > upper * (1 + SANDWICH_TOLERANCE))
        return np.maximum(norms / upper, lower / norms), bad

    return _signed_scan("ex72_sandwich", check, pool, max_size, random_count, random_max, seed)


def xp_exactness_suite(p=2.0, w=None, pool=10, max_size=10, random_count=1000, random_max=10_000, seed=0):
    """``||1_{eps,A}|| = max(1, w(A)^{1/p})`` in X_p.

    Every signed ``A`` in ``1..pool`` with ``|A| <= max_size``, then
    ``random_count`` signed subsets of ``1..random_max``.
    """
    w = w or ONE
    spec = build_xp(p, w).spec

    def check(indices, rows):
        expected = np.maximum(1.0, ((rows != 0) @ weight_values(w, indices)) ** (1.0 / p))
        errors = np.abs(spec.evaluate(indices, rows) - expected) / expected
        return errors, errors > TOLERANCE

    return _signed_scan("xp_exactness", check, pool, max_size, random_count, random_max, seed)


def _best_sub_indicators(rows, norms):
    """``max_{B subset A} ||1_{eps,B}||`` for every row, by dynamic programming over supports."""
    n = rows.shape[1]
    digits = (rows + 1).astype(np.int64)
    powers = 3 ** np.arange(n, dtype=np.int64)
    codes = digits @ powers
    position = {int(code): k for k, code in enumerate(codes)}
    best = np.zeros(len(rows))
    for k in np.argsort(np.count_nonzero(rows, axis=1), kind="stable"):
        value = norms[k]
        for i in np.flatnonzero(rows[k]):
            value = max(value, best[position[int(codes[k] - (digits[k, i] - 1) * powers[i])]])
        best[k] = value
    return best


def lemma75_suite(preset, n=8, random_count=200, seed=0):
    """The Schauder majorant keeps unit vectors, is dominated by sub-indicators and is prefix monotone."""
    indices = tuple(range(1, n + 1))
    majorant = SchauderMajorant(preset.spec)
    rows = signed_rows(n)
    x_norms = preset.spec.evaluate(indices, rows)
    y_norms = majorant.evaluate(indices, rows)
    best = _best_sub_indicators(rows, x_norms)

    nonzero = np.flatnonzero(np.any(rows != 0, axis=1))
    ratios = y_norms[nonzero] / best[nonzero]
    violations = [("sub_indicator", _signed_case(rows[k])) for k in nonzero[ratios > 1 + TOLERANCE]]
    units = np.flatnonzero(np.count_nonzero(rows, axis=1) == 1)
    for k in units:
        if not math.isclose(y_norms[k], x_norms[k], rel_tol=1e-12):
            violations.append(("unit_vector", _signed_case(rows[k])))

    rng = np.random.default_rng([seed, n])
    for _ in range(random_count):
        v = rng.normal(size=n)
        prefixes = np.tril(np.ones((n, n))) * v
        values = majorant.evaluate(indices, prefixes)
        if np.any(values > values[-1] * (1 + TOLERANCE)):
            violations.append(("prefix", tuple(v.tolist())))

    worst = int(np.argmax(ratios))
    checked = len(nonzero) + random_count
    logger.info(f"Schauder majorant of {preset.name}: {checked} cases, {len(violations)} violations")
    return SuiteResult(
        "lemma75",
        checked,
        float(ratios[worst]),
        _signed_case(rows[nonzero[worst]]),
        tuple(violations[:MAX_VIOLATIONS]),
    )


def lemma77_democracy_sandwich(left, right, sets=None, n=8):
    """``||1_A||_Z = max(||1_{A_1}||_X, ||1_{A_2}||_Y)`` with ``A_1``, ``A_2`` the odd and even parts."""
    total = direct_sum(left, right)
    if sets is None:
        sets = [c for size in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), size)]
    details, violations, worst_ratio, worst_case = [], [], 0.0, None
    for index_set in sets:
        odd = {(k + 1) // 2 for k in index_set if k % 2 == 1}
        even = {k // 2 for k in index_set if k % 2 == 0}
        z = float(norm_of_indicator(total.spec, index_set))
        x = float(norm_of_indicator(left.spec, odd))
        y = float(norm_of_indicator(right.spec, even))
        ratio = z / max(x, y)
        details.append((tuple(sorted(index_set)), z, x, y))
        if ratio > worst_ratio:
            worst_ratio, worst_case = ratio, tuple(sorted(index_set))
        if not math.isclose(z, max(x, y), rel_tol=1e-12):
            violations.append(tuple(sorted(index_set)))
    return SuiteResult("lemma77", len(details), worst_ratio, worst_case, tuple(violations[:MAX_VIOLATIONS]), tuple(details))


def example74_ratio_trend(family):
    """Certificates of every ``z_m`` and the certified failure-ratio bounds, which must decrease in ``m``."""
    witnesses = tuple(example74_zm(family, m) for m in range(1, family.count + 1))
    bounds = [failure_bound(witness.total) for witness in witnesses]
    violations = [("certificates", w.m) for w in witnesses if not w.holds]
    violations += [("trend", m + 1) for m in range(1, len(bounds)) if not bounds[m] < bounds[m - 1]]
    return SuiteResult(
        "ex74_ratio_trend",
        len(witnesses),
        max(bounds),
        witnesses[int(np.argmax(bounds))].m,
        tuple(violations),
        witnesses,
    )
