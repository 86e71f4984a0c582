"""Greedy sets, projections and the thresholding step."""
import itertools
import logging
import math

from django.conf import settings

from spaces.exceptions import BudgetError, ContractError, DomainError

from .models import check_threshold

logger = logging.getLogger(__name__)


def project(x, index_set):
    """``P_A(x)``: the restriction of ``x`` to ``A``; zero for empty ``A``."""
    return x.restrict(index_set)


def thresholding_approximation(x, index_set):
    """One step of the (weak) thresholding greedy algorithm on a chosen set."""
    return project(x, index_set)


def greedy_order(x):
    """Support ordered by decreasing magnitude, ties toward smaller indices."""
    return sorted(x.indices, key=lambda n: (-abs(x.coefficient(n)), n))


def padding_indices(x, count, start=1):
    """The ``count`` smallest indices outside ``supp(x)`` from ``start`` on."""
    padding = []
    n = start
    while len(padding) < count:
        if n not in x.support:
            padding.append(n)
        n += 1
    return padding


def natural_greedy_set(x, m):
    """``Lambda_m(x)``; pads with the smallest unused indices when ``m > |supp(x)|``."""
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    order = greedy_order(x)
    chosen = order[:m]
    if m > len(order):
        chosen += padding_indices(x, m - len(order))
    return frozenset(chosen)


def is_greedy_set(x, index_set, t=1.0):
    """``min_{j in A} |x_j| >= t max_{j not in A} |x_j|``."""
    check_threshold(t)
    index_set = set(index_set)
    inside = min((abs(x.coefficient(n)) for n in index_set), default=math.inf)
    outside = max((abs(v) for n, v in zip(x.indices, x.values) if n not in index_set), default=0.0)
    return inside >= t * outside


def _padding_pool(x, m):
    top = (x.indices[-1] if x else 0) + m
    return [n for n in range(1, top + 1) if n not in x.support]


def _check_family(count, cap, what):
    if count > cap:
        raise BudgetError(f"{what} has {count} members, cap is {cap}", needed=count, cap=cap)


def enumerate_greedy_sets(x, m, t=1.0, cap=None):
    """All of ``G(x, m, t)``, sorted; never truncated.

    For ``|supp(x)| >= m`` each candidate minimum ``a`` splits the support into
    forced indices (``t|x_n| > a``) and eligible ones (``a <= |x_n|``, ``t|x_n| <= a``);
    a greedy set is the forced part plus eligible indices including one tie at ``a``.
    For ``|supp(x)| < m`` the sets are ``supp(x)`` plus paddings drawn from
    ``1..max(supp)+m``.
    """
    check_threshold(t)
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    if m > settings.GREEDYLAB_ENUM_CAP:
        raise BudgetError(f"m={m} exceeds the enumeration cap", needed=m, cap=settings.GREEDYLAB_ENUM_CAP)
    cap = cap or settings.GREEDYLAB_FAMILY_CAP
    if m == 0:
        return [frozenset()]

    size = len(x)
    if size < m:
        pool = _padding_pool(x, m)
        _check_family(math.comb(len(pool), m - size), cap, "padding family")
        result = [x.support | frozenset(extra) for extra in itertools.combinations(pool, m - size)]
        return sorted(result, key=lambda s: tuple(sorted(s)))

    magnitude = {n: abs(v) for n, v in zip(x.indices, x.values)}
    plan = []
    for a in sorted(set(magnitude.values()), reverse=True):
        forced = [n for n, v in magnitude.items() if t * v > a]
        eligible = [n for n, v in magnitude.items() if a <= v and t * v <= a]
        ties = {n for n in eligible if magnitude[n] == a}
        k = m - len(forced)
        if k <= 0 or k > len(eligible):
            continue
        count = math.comb(len(eligible), k) - math.comb(len(eligible) - len(ties), k)
        plan.append((forced, eligible, ties, k, count))
    _check_family(sum(item[-1] for item in plan), cap, f"G(x, {m}, {t})")

    result = []
    for forced, eligible, ties, k, _ in plan:
        for extra in itertools.combinations(sorted(eligible), k):
            if ties.intersection(extra):
                result.append(frozenset(forced).union(extra))
    return sorted(result, key=lambda s: tuple(sorted(s)))


def brute_force_greedy_sets(x, m, t=1.0):
    """Filter every candidate ``m``-set through ``is_greedy_set``; an oracle for small supports."""
    check_threshold(t)
    if len(x) >= m:
        candidates = (frozenset(c) for c in itertools.combinations(x.indices, m))
    else:
        pool = _padding_pool(x, m)
        candidates = (x.support | frozenset(c) for c in itertools.combinations(pool, m - len(x)))
    return sorted((s for s in candidates if is_greedy_set(x, s, t)), key=lambda s: tuple(sorted(s)))


def greedy_superset_s2(spec, x, index_set, s, accept):
    """Smallest ``s``-greedy set ``B`` containing ``A`` with ``min_B |x_j| >= s^2 min_A |x_i|``.

    Sizes are searched upward from ``|A|``; within a size sets come in sorted
    order and the first one ``accept(spec, x, B)`` approves is returned.
    """
    check_threshold(s, "s")
    index_set = frozenset(index_set)
    if not index_set:
        raise ContractError("A must be nonempty")
    if not index_set <= x.support:
        raise ContractError("A must lie inside supp(x)")
    floor = s * s * min(abs(x.coefficient(n)) for n in index_set)
    reachable = sum(1 for v in x.values if abs(v) >= floor)
    for size in range(len(index_set), reachable + 1):
        for candidate in enumerate_greedy_sets(x, size, s):
            if not index_set <= candidate:
                continue
            if min(abs(x.coefficient(n)) for n in candidate) < floor:
                continue
            if accept(spec, x, candidate):
                return candidate
    raise BudgetError(f"no accepted s-greedy superset of {sorted(index_set)}")
