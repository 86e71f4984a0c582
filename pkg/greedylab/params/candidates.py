"""The seeded candidate family behind every estimator.

Member ``i`` depends only on ``(seed, i)`` and the pool, so a larger
budget extends the family without changing its prefix.  Three generators
take turns:

* random decay vectors with random signs and occasional ties,
* perturbations modelled on the greedy-set constructions used in the
  proofs: ``x - P_A(x) + a (1+d) t^-2 1_{eps,E}`` and
  ``x + a t (1-d) (1_{E1} - 1_{E2})``,
* small-support vectors with coefficients from a fixed grid, in a fixed order.
"""
import functools
import itertools

import numpy as np

from greedy.selection import natural_greedy_set
from spaces.models import SparseVector

FAMILY_VERSION = 1
GRID_WINDOW = 6
GRID_SUPPORT = 3
GRID_VALUES = (1.0, -1.0, 0.5, -0.5, 0.25, -0.25)
TIE_PROBABILITY = 0.3


def trivial_candidates(pool, m):
    """``1_{A}`` and ``1_{A + one index}`` for the first ``m`` pool indices."""
    head = list(pool[: m + 1])
    found = [SparseVector.indicator(head[:m])] if m else []
    if len(head) > m:
        found.append(SparseVector.indicator(head))
    return [x for x in found if x]


@functools.lru_cache(maxsize=32)
def grid_vectors(pool):
    window = pool[:GRID_WINDOW]
    found = []
    for size in range(1, min(GRID_SUPPORT, len(window)) + 1):
        for support in itertools.combinations(window, size):
            # scaling and a global sign do not change any ratio
            for tail in itertools.product(GRID_VALUES, repeat=size - 1):
                found.append(SparseVector.from_pairs(support, (1.0,) + tail))
    return tuple(found)


def random_decay(rng, pool, size=None):
    size = size or int(rng.integers(1, len(pool) + 1))
    support = rng.choice(np.asarray(pool), size=size, replace=False)
    if rng.random() < 0.5:
        magnitudes = rng.uniform(0.3, 1.0) ** np.arange(size)
    else:
        magnitudes = (1.0 + np.arange(size)) ** (-rng.uniform(0.0, 2.0))
    if rng.random() < TIE_PROBABILITY:
        magnitudes = np.maximum(np.round(magnitudes, 1), 0.1)
    signs = rng.choice([-1.0, 1.0], size=size)
    order = rng.permutation(size)
    return SparseVector.from_pairs(support.tolist(), (signs * magnitudes[order]).tolist())


def perturbed(rng, pool, m, t, variant):
    """A greedy-set perturbation of a random vector living in the first half of the pool."""
    half = pool[: max(1, len(pool) // 2)]
    x = random_decay(rng, half)
    rest = [n for n in pool if n not in x.support]
    chosen = natural_greedy_set(x, min(m, len(x)))
    a = min((abs(x.coefficient(n)) for n in chosen), default=0.0)
    if not rest or a == 0.0:
        return x
    d = float(rng.uniform(0.0, 0.05))
    if variant == 0:
        extra = rng.choice(np.asarray(rest), size=min(m, len(rest)), replace=False).tolist()
        signs = {n: float(rng.choice([-1.0, 1.0])) for n in extra}
        return x.without(chosen) + SparseVector.indicator(extra, signs).scaled(a * (1 + d) / (t * t))
    count = max(1, min((m + 1) // 2, len(rest) // 2))
    picked = rng.choice(np.asarray(rest), size=min(2 * count, len(rest)), replace=False).tolist()
    signs = {n: (1.0 if k < count else -1.0) for k, n in enumerate(picked)}
    return x + SparseVector.indicator(picked, signs).scaled(a * t * (1 - d))


def candidate(pool, m, t, seed, i):
    pool = tuple(pool)
    rng = np.random.default_rng([seed, FAMILY_VERSION, i])
    turn, slot = i % 3, i // 3
    if turn == 1:
        return perturbed(rng, pool, m, t, variant=slot % 2)
    if turn == 2:
        grid = grid_vectors(pool)
        if slot < len(grid):
            return grid[slot]
    return random_decay(rng, pool)


def candidate_family(pool, m, t=1.0, count=0, seed=0):
    """Trivial candidates followed by the first ``count`` seeded members."""
    pool = tuple(pool)
    return trivial_candidates(pool, m) + [candidate(pool, m, t, seed, i) for i in range(count)]


def sign_patterns(index_set, limit, rng):
    """Sign maps on ``index_set`` with the first sign fixed to +1.

    All ``2^(k-1)`` patterns when that many fit in ``limit``, otherwise
    ``limit`` sampled ones after the constant pattern.
    """
    indices = sorted(index_set)
    if not indices:
        return [{}]
    rest = len(indices) - 1
    if 2**rest <= limit:
        tails = itertools.product((1.0, -1.0), repeat=rest)
    else:
        tails = [(1.0,) * rest] + [tuple(rng.choice([-1.0, 1.0], size=rest)) for _ in range(limit - 1)]
    return [dict(zip(indices, (1.0,) + tuple(tail))) for tail in tails]
