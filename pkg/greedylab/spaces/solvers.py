"""Minimization of convex, Lipschitz, nonsmooth functions on R^k.

Two engines share one result type:

* ``subgradient_minimize``: multi-start subgradient descent with a Polyak
  step toward an adaptive target below the best value seen so far.
* ``grid_minimize``: adaptive grid zoom for ``k <= 3``.  The reported gap is
  ``h * L`` where ``h`` is the final grid spacing and ``L`` an l_inf
  Lipschitz constant, and it holds over the final search box, which is grown
  until the best grid point is interior.
"""
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

GRID_POINTS = 9
GRID_MAX_DIM = 3


@dataclass
class SolverResult:
    point: np.ndarray
    value: float
    gap: float
    method: str
    converged: bool
    iterations: int = 0


def subgradient_minimize(oracle, starts, iterations=1500, tol=1e-10, patience=20):
    """Minimize ``oracle(u) -> (value, subgradient)`` from every start.

    The best point over all starts is returned; ``gap`` is the final target
    offset, an estimate and not a certificate.
    """
    best = None
    for start in starts:
        result = _descend(oracle, np.array(start, dtype=float), iterations, tol, patience)
        if best is None or result.value < best.value:
            best = result
    return best


def _descend(oracle, u, iterations, tol, patience):
    value, grad = oracle(u)
    f_best, u_best = value, u.copy()
    delta = 0.5 * max(abs(value), 1e-3)
    stall = 0
    it = 0
    for it in range(1, iterations + 1):
        norm2 = float(grad @ grad)
        if norm2 == 0.0:
            # zero subgradient: current point is optimal
            return SolverResult(u.copy(), value, 0.0, "subgradient", True, it)
        step = (value - (f_best - delta)) / norm2
        u = u - step * grad
        value, grad = oracle(u)
        if value < f_best - tol * max(1.0, abs(f_best)):
            f_best, u_best = value, u.copy()
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                delta *= 0.5
                stall = 0
                u = u_best.copy()
                value, grad = oracle(u)
        if delta <= tol * max(1.0, abs(f_best)):
            return SolverResult(u_best, f_best, delta, "subgradient", True, it)
    return SolverResult(u_best, f_best, delta, "subgradient", False, it)


def _grid(center, radius):
    axes = [np.linspace(c - radius, c + radius, GRID_POINTS) for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_minimize(batch_value, center, radius, lipschitz, tol=1e-6, max_rounds=200):
    """Zoom a ``9^k`` grid onto the minimizer of a convex function.

    ``batch_value`` maps an ``(n, k)`` array of points to ``n`` values.
    """
    center = np.array(center, dtype=float)
    k = center.size
    if k > GRID_MAX_DIM:
        raise ValueError(f"grid search supports at most {GRID_MAX_DIM} coordinates")
    radius = max(float(radius), 1e-12)
    shape = (GRID_POINTS,) * k
    value = np.inf
    gap = np.inf
    for rounds in range(1, max_rounds + 1):
        points = _grid(center, radius)
        values = batch_value(points)
        pos = int(np.argmin(values))
        center, value = points[pos], float(values[pos])
        spacing = 2 * radius / (GRID_POINTS - 1)
        cell = np.unravel_index(pos, shape)
        if any(c in (0, GRID_POINTS - 1) for c in cell):
            radius *= 2
            continue
        gap = spacing * lipschitz
        if gap <= tol * max(1.0, abs(value)):
            break
        radius = 2 * spacing
    converged = gap <= tol * max(1.0, abs(value))
    if not converged:
        logger.warning(f"Grid search stopped with gap {gap:.3e} after {rounds} rounds")
    return SolverResult(center, value, float(gap), "grid", converged, rounds)


def center_on_face(batch_value, point, value, slack, reach):
    """Move each coordinate to the midpoint of its near-optimal segment.

    Along coordinate ``i`` the set ``{f <= value + slack}`` is an interval
    (convexity); both ends are found by bracketing then bisection.
    """
    point = np.array(point, dtype=float)
    level = value + slack

    def inside(candidate):
        return float(batch_value(candidate[np.newaxis, :])[0]) <= level

    for i in range(point.size):
        ends = []
        for sign in (-1.0, 1.0):
            step = max(reach, 1e-9)
            inner = 0.0
            trial = point.copy()
            for _ in range(60):
                trial[i] = point[i] + sign * step
                if not inside(trial):
                    break
                inner, step = step, step * 2
            else:
                ends.append(point[i] + sign * inner)
                continue
            outer = step
            for _ in range(80):
                mid = 0.5 * (inner + outer)
                trial[i] = point[i] + sign * mid
                if inside(trial):
                    inner = mid
                else:
                    outer = mid
            ends.append(point[i] + sign * inner)
        candidate = point.copy()
        candidate[i] = 0.5 * (ends[0] + ends[1])
        if inside(candidate):
            point = candidate
    return point
