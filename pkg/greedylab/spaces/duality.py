"""Numerical dual norms at finite truncation.

``sup{|c . a| : ||a|| <= 1, supp(a) in [1, N]}`` equals ``1 / min{||a|| : c . a = 1}``.
The minimization runs over ``a = c/|c|^2 + Z u`` with ``Z`` an orthonormal
basis of the null space of ``c``; every iterate is feasible, so the value
returned is always a valid lower bound of the dual norm.
"""
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from .exceptions import DomainError
from .models import BasisConstants, SparseVector
from .solvers import GRID_MAX_DIM, grid_minimize, subgradient_minimize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualNormResult:
    value: float
    converged: bool
    method: str
    witness: tuple = ()


def _null_space(c):
    # rows of vh past the first span the orthogonal complement of c
    _, _, vh = np.linalg.svd(c[np.newaxis, :])
    return vh[1:].T


def dual_norm_eval(spec, c, N, iterations=1500, random_starts=2, seed=0):
    """Dual norm of the functional ``a -> sum c_n a_n`` over coordinates ``1..N``."""
    if N < 1:
        raise DomainError("truncation dimension must be positive")
    if N > settings.GREEDYLAB_DUAL_MAX_DIM:
        raise DomainError(f"dual norms are evaluated for N <= {settings.GREEDYLAB_DUAL_MAX_DIM}")
    if c and c.indices[-1] > N:
        raise DomainError(f"functional support exceeds [1, {N}]")
    if not c:
        return DualNormResult(0.0, True, "exact")

    indices = tuple(range(1, N + 1))
    coeffs = np.zeros(N)
    for n, v in zip(c.indices, c.values):
        coeffs[n - 1] = v
    base = coeffs / float(coeffs @ coeffs)
    basis = _null_space(coeffs)
    k = basis.shape[1]

    if k == 0:
        value = spec.evaluate(indices, base)
        return DualNormResult(1.0 / value, True, "exact", tuple(base.tolist()))

    def oracle(u):
        value, grad = spec.subgradient(indices, base + basis @ u)
        return value, basis.T @ grad

    rng = np.random.default_rng(seed)
    starts = [np.zeros(k)] + [rng.normal(scale=np.linalg.norm(base), size=k) for _ in range(random_starts)]
    result = subgradient_minimize(oracle, starts, iterations=iterations)

    if k <= GRID_MAX_DIM:
        lipschitz = float(sum(spec.evaluate(indices, col) for col in basis.T))

        def batch_value(points):
            return spec.evaluate(indices, base[np.newaxis, :] + points @ basis.T)

        radius = max(1.0, 2.0 * float(np.max(np.abs(result.point))))
        grid = grid_minimize(batch_value, result.point, radius, lipschitz)
        if grid.value <= result.value:
            result = grid

    best = base + basis @ result.point
    # recompute at the returned point so the witness reproduces the value
    achieved = spec.evaluate(indices, best)
    if not result.converged:
        logger.warning(f"Dual norm solver did not converge (N={N}); reporting a lower bound")
    return DualNormResult(1.0 / achieved, result.converged, result.method, tuple(best.tolist()))


def estimate_basis_constants(spec, N, **solver_options):
    """Lower estimates of lambda, lambda', lambda'' over the first ``N`` unit vectors."""
    lam = lam_prime = lam_double = 0.0
    converged = True
    for n in range(1, N + 1):
        norm = spec.evaluate((n,), np.ones(1))
        dual = dual_norm_eval(spec, SparseVector((n,), (1.0,)), N, **solver_options)
        converged = converged and dual.converged
        lam = max(lam, norm)
        lam_prime = max(lam_prime, dual.value)
        lam_double = max(lam_double, norm * dual.value)
    notes = () if converged else ("dual norms are lower bounds (solver not converged)",)
    return BasisConstants(
        lam=lam,
        lam_prime=lam_prime,
        lam_double_prime=min(lam_double, lam * lam_prime),
        dimension=N,
        converged=converged,
        notes=notes,
    )
