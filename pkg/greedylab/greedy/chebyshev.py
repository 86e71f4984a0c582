import logging

import numpy as np
from django.conf import settings

from spaces.exceptions import BudgetError, ContractError
from spaces.models import SparseVector
from spaces.norms import norm_eval
from spaces.solvers import GRID_MAX_DIM, center_on_face, grid_minimize, subgradient_minimize

from .models import ChebMethod, ChebResult, SolverOptions
from .selection import is_greedy_set, natural_greedy_set, project

logger = logging.getLogger(__name__)

DEFAULT_OPTIONS = SolverOptions()


def chebyshev_best(spec, x, index_set, options=DEFAULT_OPTIONS):
    """Best approximation of ``x`` by vectors supported in ``A``.

    The error never exceeds ``||x - P_A(x)||`` since the projection is always
    among the candidates.
    """
    support = frozenset(index_set)
    if len(support) > settings.GREEDYLAB_CHEB_MAX_SET:
        raise BudgetError(
            f"|A|={len(support)} exceeds the Chebyshev cap",
            needed=len(support),
            cap=settings.GREEDYLAB_CHEB_MAX_SET,
        )
    if x.support <= support:
        return ChebResult(x, 0.0, 0.0, ChebMethod.EXACT, support)
    if not support:
        return ChebResult(SparseVector.zero(), norm_eval(spec, x), 0.0, ChebMethod.EXACT, support)

    indices = tuple(sorted(x.support | support))
    free = sorted(support)
    positions = [indices.index(n) for n in free]
    base = np.array([x.coefficient(n) for n in indices])

    def values_at(points):
        out = np.repeat(base[np.newaxis, :], points.shape[0], axis=0)
        out[:, positions] -= points
        return out

    def batch_value(points):
        return spec.evaluate(indices, values_at(points))

    def oracle(u):
        value, grad = spec.subgradient(indices, values_at(u[np.newaxis, :])[0])
        return value, -grad[positions]

    projection = np.array([x.coefficient(n) for n in free])
    scale = max(1.0, float(np.max(np.abs(base))))
    use_grid = options.method == ChebMethod.GRID or (
        options.method == "auto" and len(free) <= GRID_MAX_DIM
    )

    if use_grid:
        lipschitz = float(sum(spec.evaluate((n,), np.ones(1)) for n in free))
        result = grid_minimize(batch_value, projection, 2 * scale, lipschitz)
        slack = 1e-12 * max(1.0, result.value)
        result.point = center_on_face(batch_value, result.point, result.value, slack, reach=max(result.gap, 1e-9))
    else:
        rng = np.random.default_rng([options.seed, len(free)])
        starts = [projection, np.zeros(len(free))]
        starts += [rng.normal(scale=scale, size=len(free)) for _ in range(options.random_starts)]
        result = subgradient_minimize(oracle, starts, iterations=options.iterations, tol=options.tolerance * 1e-3)

    projection_error = norm_eval(spec, x - project(x, support))
    y = SparseVector.from_pairs(free, result.point.tolist())
    error = norm_eval(spec, x - y)
    if error > projection_error:
        y, error = project(x, support), projection_error
    tolerance = options.tolerance * max(1.0, error)
    converged = result.converged and result.gap <= tolerance
    if not converged:
        logger.warning(
            f"Chebyshev search on |A|={len(free)} ended with gap {result.gap:.3e} (method {result.method})"
        )
    return ChebResult(y, error, float(result.gap), result.method, support, converged)


def chebyshev_greedy_step(spec, x, m, t=1.0, greedy_set=None, options=DEFAULT_OPTIONS):
    """One Chebyshev greedy step: best approximation over a (t-)greedy set.

    Without an explicit set the natural greedy set is used; it is t-greedy
    for every t.
    """
    chosen = natural_greedy_set(x, m) if greedy_set is None else frozenset(greedy_set)
    if len(chosen) != m or not is_greedy_set(x, chosen, t):
        raise ContractError(f"{sorted(chosen)} is not an {m}-{t}-greedy set")
    return chosen, chebyshev_best(spec, x, chosen, options)
