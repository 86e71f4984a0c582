"""Approximation-error infima over supports.

``sigma_m`` and ``weighted_sigma`` optimize over supports drawn from a finite
pool by branch and bound (``pybnb``); their values are upper bounds of the
infima over all of N.  The projection errors only need subsets of the
support and are computed exhaustively in numpy batches.
"""
import itertools
import logging
import math

import numpy as np
import pybnb
from django.conf import settings

from spaces.exceptions import BudgetError, ContractError, DomainError
from spaces.models import Weight
from spaces.norms import norm_eval
from spaces.weights import weight_values

from .chebyshev import DEFAULT_OPTIONS, chebyshev_best
from .models import SupportSearchResult

logger = logging.getLogger(__name__)

BATCH_ROWS = 4096


class SupportSearch(pybnb.Problem):
    """Minimize the Chebyshev error over supports ``B`` with ``w(B) <= capacity``.

    Items are visited in increasing weight so a node whose next item does not
    fit has no feasible child.  Only maximal supports are scored because the
    error does not increase when the support grows.
    """

    def __init__(self, spec, x, items, weights, capacity, options):
        order = sorted(range(len(items)), key=lambda k: (weights[k], items[k]))
        self._items = [items[k] for k in order]
        self._weights = [weights[k] for k in order]
        self._capacity = capacity
        self._spec = spec
        self._x = x
        self._options = options
        self._memo = {}
        self._chosen = ()
        self._loads = ()
        self._next = 0

    def cheb(self, support):
        support = frozenset(support)
        if support not in self._memo:
            self._memo[support] = chebyshev_best(self._spec, self._x, support, self._options)
        return self._memo[support]

    def _fits(self, k):
        return math.fsum(self._loads + (self._weights[k],)) <= self._capacity

    def _room(self):
        return [k for k in range(self._next, len(self._items)) if self._fits(k)]

    def sense(self):
        return pybnb.minimize

    def objective(self):
        if self._room():
            return self.infeasible_objective()
        return self.cheb(self._chosen).error

    def bound(self):
        room = self._room()
        if not room:
            return self.objective()
        widest = set(self._chosen).union(self._items[k] for k in room)
        return self.cheb(widest).lower_error

    def save_state(self, node):
        node.state = (self._chosen, self._loads, self._next)

    def load_state(self, node):
        self._chosen, self._loads, self._next = node.state

    def branch(self):
        for k in self._room():
            child = pybnb.Node()
            child.state = (
                self._chosen + (self._items[k],),
                self._loads + (self._weights[k],),
                k + 1,
            )
            yield child


def _check_pool(x, pool):
    pool = tuple(sorted(set(pool)))
    if not x.support <= set(pool):
        raise ContractError("the pool must contain supp(x)")
    if len(pool) > settings.GREEDYLAB_POOL_CAP:
        raise BudgetError(
            f"pool of {len(pool)} indices exceeds the cap",
            needed=len(pool),
            cap=settings.GREEDYLAB_POOL_CAP,
        )
    return pool


def best_support(spec, x, pool, weight, capacity, options=DEFAULT_OPTIONS, forbidden=frozenset()):
    """Branch and bound over supports in ``pool`` of ``weight``-measure at most ``capacity``.

    Indices in ``forbidden`` never enter a support.
    """
    pool = _check_pool(x, pool)
    if capacity < 0:
        raise DomainError("capacity must be nonnegative")
    items = [n for n in pool if n not in forbidden]
    weights = weight_values(weight, items).tolist()
    problem = SupportSearch(spec, x, items, weights, capacity, options)
    results = pybnb.solve(problem, comm=None, log=None, queue_strategy="depth", absolute_gap=0)
    status = str(getattr(results.solution_status, "value", results.solution_status))
    if results.best_node is None:
        # only possible when nothing was scored; the empty support always is
        cheb = problem.cheb(())
        return SupportSearchResult(cheb.error, frozenset(), pool, status, results.nodes, cheb)
    chosen = frozenset(results.best_node.state[0])
    cheb = problem.cheb(chosen)
    if status != "optimal":
        logger.warning(f"Support search ended with status {status} after {results.nodes} nodes")
    return SupportSearchResult(cheb.error, chosen, pool, status, results.nodes, cheb)


def sigma_m(spec, x, m, pool, options=DEFAULT_OPTIONS):
    """Best ``m``-term approximation error with supports drawn from ``pool``."""
    return sigma_m_search(spec, x, m, pool, options).value


def sigma_m_search(spec, x, m, pool, options=DEFAULT_OPTIONS, forbidden=frozenset()):
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    return best_support(spec, x, pool, Weight.constant(1), float(m), options, forbidden)


def weighted_sigma(spec, x, weight, budget, pool, options=DEFAULT_OPTIONS):
    """Best approximation error over supports ``B`` in ``pool`` with ``w(B) <= budget``."""
    return best_support(spec, x, pool, weight, float(budget), options).value


def weighted_sigma_search(spec, x, weight, budget, pool, options=DEFAULT_OPTIONS):
    return best_support(spec, x, pool, weight, float(budget), options)


def _projection_batches(x, subsets):
    """Rows of ``x - P_B(x)`` for each ``B`` (given as position tuples)."""
    base = x.array
    batch = []
    for subset in subsets:
        batch.append(subset)
        if len(batch) == BATCH_ROWS:
            yield batch, _residuals(base, batch)
            batch = []
    if batch:
        yield batch, _residuals(base, batch)


def _residuals(base, batch):
    rows = np.repeat(base[np.newaxis, :], len(batch), axis=0)
    for row, subset in enumerate(batch):
        rows[row, list(subset)] = 0.0
    return rows


def _best_projection(spec, x, subsets):
    best_value, best_subset = math.inf, ()
    for batch, rows in _projection_batches(x, subsets):
        values = spec.evaluate(x.indices, rows)
        pos = int(np.argmin(values))
        if values[pos] < best_value:
            best_value, best_subset = float(values[pos]), batch[pos]
    return best_value, frozenset(x.indices[k] for k in best_subset)


def projection_search(spec, x, m, forbidden=frozenset()):
    """``(sigma~_m(x), B)`` by exhaustive search over ``B`` inside ``supp(x)`` minus ``forbidden``."""
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    n = len(x)
    if n > settings.GREEDYLAB_POOL_CAP:
        raise BudgetError(f"support of {n} exceeds the cap", needed=n, cap=settings.GREEDYLAB_POOL_CAP)
    if not x:
        return 0.0, frozenset()
    allowed = [k for k, index in enumerate(x.indices) if index not in forbidden]
    top = min(m, len(allowed))
    count = sum(math.comb(len(allowed), k) for k in range(top + 1))
    if count > settings.GREEDYLAB_FAMILY_CAP:
        raise BudgetError(f"{count} projections exceed the cap", needed=count, cap=settings.GREEDYLAB_FAMILY_CAP)
    subsets = itertools.chain.from_iterable(itertools.combinations(allowed, k) for k in range(top + 1))
    return _best_projection(spec, x, subsets)


def sigma_tilde_m(spec, x, m):
    """``min over B in supp(x), |B| <= m`` of ``||x - P_B(x)||``."""
    return projection_search(spec, x, m)[0]


def _knapsack_subsets(weights, capacity, cap):
    """Position tuples with total weight at most ``capacity`` (pruned DFS)."""
    order = sorted(range(len(weights)), key=lambda k: weights[k])
    found = []

    def visit(start, chosen):
        found.append(tuple(sorted(chosen)))
        if len(found) > cap:
            raise BudgetError(f"more than {cap} feasible supports", needed=len(found), cap=cap)
        for pos in range(start, len(order)):
            k = order[pos]
            total = math.fsum([weights[j] for j in chosen] + [weights[k]])
            if total > capacity:
                break
            visit(pos + 1, chosen + [k])

    visit(0, [])
    return found


def weighted_projection_search(spec, x, weight, budget):
    n = len(x)
    if n > settings.GREEDYLAB_POOL_CAP:
        raise BudgetError(f"support of {n} exceeds the cap", needed=n, cap=settings.GREEDYLAB_POOL_CAP)
    if not x:
        return 0.0, frozenset()
    weights = weight_values(weight, x.indices).tolist()
    subsets = _knapsack_subsets(weights, float(budget), settings.GREEDYLAB_FAMILY_CAP)
    return _best_projection(spec, x, subsets)


def weighted_projection_error(spec, x, weight, budget):
    """``min over B in supp(x), w(B) <= budget`` of ``||x - P_B(x)||``."""
    return weighted_projection_search(spec, x, weight, budget)[0]


def projection_error(spec, x, index_set):
    return norm_eval(spec, x.without(index_set))
