"""Composable norm specifications and their exact evaluation.

Every node evaluates on a *coordinate view*: a strictly increasing tuple of
indices and a value array over those indices (zeros allowed).  Values may be
a 1-D array (one vector) or a 2-D array whose rows are vectors; batch
evaluation lets grid searches and exhaustive subset scans run in numpy.
"""
import bisect
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from django.db import models

from .exceptions import DomainError
from .models import CoefficientRule, Weight
from .weights import weight_values


class NodeKind(models.TextChoices):
    WEIGHTED_LP = "weighted_lp", "Weighted l_p"
    SUP = "sup", "Sup norm"
    PREFIX = "prefix", "Prefix functional"
    INTERVAL = "interval", "Interval functional"
    MAX_OF = "max_of", "Maximum of norms"
    DIRECT_SUM = "direct_sum", "Interleaved direct sum"
    SCHAUDER = "schauder_majorant", "Schauder majorant"
    REINDEXED = "reindexed", "Reindexed"


def _as_batch(values):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return values[np.newaxis, :], True
    return values, False


def _finish(result, single):
    return float(result[0]) if single else result


class NormSpec:
    """Base class of all norm nodes."""

    kind = None

    def evaluate(self, indices, values):
        batch, single = _as_batch(values)
        if batch.shape[1] == 0:
            return _finish(np.zeros(batch.shape[0]), single)
        return _finish(self._evaluate(tuple(indices), batch), single)

    def subgradient(self, indices, values):
        """Return ``(value, g)`` with ``g`` a subgradient at ``values`` (1-D)."""
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return 0.0, np.zeros(0)
        value, grad = self._subgradient(tuple(indices), values)
        return float(value), grad

    def _evaluate(self, indices, batch):
        raise NotImplementedError

    def _subgradient(self, indices, values):
        raise NotImplementedError


@dataclass(frozen=True)
class WeightedLp(NormSpec):
    """``(sum w_n |a_n|^p)^{1/p}``."""

    p: float
    weight: Weight

    kind = NodeKind.WEIGHTED_LP

    def __post_init__(self):
        if not (1 <= self.p < float("inf")):
            raise DomainError(f"weighted l_p needs 1 <= p < inf, got {self.p}")

    def _evaluate(self, indices, batch):
        w = weight_values(self.weight, indices)
        scale = np.max(np.abs(batch), axis=1)
        safe = np.where(scale > 0, scale, 1.0)
        inner = (np.abs(batch / safe[:, None]) ** self.p) @ w
        return np.where(scale > 0, safe * inner ** (1.0 / self.p), 0.0)

    def _subgradient(self, indices, values):
        scale = np.max(np.abs(values))
        if scale == 0:
            return 0.0, np.zeros_like(values)
        w = weight_values(self.weight, indices)
        u = values / scale
        total = float((np.abs(u) ** self.p) @ w)
        grad = w * np.abs(u) ** (self.p - 1) * np.sign(u) / total ** ((self.p - 1) / self.p)
        return scale * total ** (1.0 / self.p), grad


@dataclass(frozen=True)
class SupNorm(NormSpec):
    kind = NodeKind.SUP

    def _evaluate(self, indices, batch):
        return np.max(np.abs(batch), axis=1)

    def _subgradient(self, indices, values):
        grad = np.zeros_like(values)
        pos = int(np.argmax(np.abs(values)))
        grad[pos] = np.sign(values[pos])
        return abs(values[pos]), grad


@dataclass(frozen=True)
class PrefixFunctional(NormSpec):
    """``sup_m |sum_{n<=m} c_n a_n|``; the sup is attained at support points."""

    rule: CoefficientRule = CoefficientRule.power(0.75)

    kind = NodeKind.PREFIX

    def _evaluate(self, indices, batch):
        c = self.rule.values_at(indices)
        return np.max(np.abs(np.cumsum(batch * c, axis=1)), axis=1)

    def _subgradient(self, indices, values):
        c = self.rule.values_at(indices)
        partial = np.cumsum(values * c)
        pos = int(np.argmax(np.abs(partial)))
        grad = np.zeros_like(values)
        grad[: pos + 1] = np.sign(partial[pos]) * c[: pos + 1]
        return abs(partial[pos]), grad


@dataclass(frozen=True)
class IntervalFunctional(NormSpec):
    """``sup_m |sum_{n in A_m} c_n a_n|`` for disjoint ordered integer intervals."""

    intervals: tuple
    rule: CoefficientRule = CoefficientRule.power(0.75)

    kind = NodeKind.INTERVAL

    def __post_init__(self):
        previous = 0
        for lo, hi in self.intervals:
            if lo > hi or lo <= previous:
                raise DomainError("intervals must be nonempty, ordered and disjoint")
            previous = hi

    @cached_property
    def lows(self):
        return [lo for lo, _ in self.intervals]

    def _blocks(self, indices):
        """Slices of ``indices`` falling in each interval that meets the support."""
        if not indices:
            return []
        blocks = []
        start = max(bisect.bisect_right(self.lows, indices[0]) - 1, 0)
        for lo, hi in self.intervals[start:]:
            if lo > indices[-1]:
                break
            i = bisect.bisect_left(indices, lo)
            j = bisect.bisect_right(indices, hi)
            if i < j:
                blocks.append((i, j))
        return blocks

    def _evaluate(self, indices, batch):
        c = self.rule.values_at(indices)
        weighted = batch * c
        best = np.zeros(batch.shape[0])
        for i, j in self._blocks(indices):
            best = np.maximum(best, np.abs(weighted[:, i:j].sum(axis=1)))
        return best

    def _subgradient(self, indices, values):
        c = self.rule.values_at(indices)
        grad = np.zeros_like(values)
        best, chosen = 0.0, None
        for i, j in self._blocks(indices):
            total = float(values[i:j] @ c[i:j])
            if abs(total) > best:
                best, chosen = abs(total), (i, j, total)
        if chosen is not None:
            i, j, total = chosen
            grad[i:j] = np.sign(total) * c[i:j]
        return best, grad


@dataclass(frozen=True)
class MaxOf(NormSpec):
    children: tuple

    kind = NodeKind.MAX_OF

    def __post_init__(self):
        if not self.children:
            raise DomainError("max_of needs at least one child")

    def _evaluate(self, indices, batch):
        return np.max(np.stack([child._evaluate(indices, batch) for child in self.children]), axis=0)

    def _subgradient(self, indices, values):
        results = [child._subgradient(indices, values) for child in self.children]
        return max(results, key=lambda item: item[0])


@dataclass(frozen=True)
class DirectSumInterleave(NormSpec):
    """Odd index ``2n-1`` is coordinate ``n`` of ``left``, even ``2n`` of ``right``."""

    left: NormSpec
    right: NormSpec

    kind = NodeKind.DIRECT_SUM

    @staticmethod
    def split(indices):
        odd = [pos for pos, n in enumerate(indices) if n % 2 == 1]
        even = [pos for pos, n in enumerate(indices) if n % 2 == 0]
        return (
            odd,
            tuple((indices[pos] + 1) // 2 for pos in odd),
            even,
            tuple(indices[pos] // 2 for pos in even),
        )

    def _evaluate(self, indices, batch):
        odd, left_idx, even, right_idx = self.split(indices)
        out = np.zeros(batch.shape[0])
        if odd:
            out = np.maximum(out, self.left._evaluate(left_idx, batch[:, odd]))
        if even:
            out = np.maximum(out, self.right._evaluate(right_idx, batch[:, even]))
        return out

    def _subgradient(self, indices, values):
        odd, left_idx, even, right_idx = self.split(indices)
        grad = np.zeros_like(values)
        best, side = 0.0, None
        if odd:
            value, g = self.left._subgradient(left_idx, values[odd])
            best, side = value, (odd, g)
        if even:
            value, g = self.right._subgradient(right_idx, values[even])
            if side is None or value > best:
                best, side = value, (even, g)
        if side is not None:
            grad[side[0]] = side[1]
        return best, grad


@dataclass(frozen=True)
class SchauderMajorant(NormSpec):
    """``sup over integer intervals [k, m]`` of the inner norm of the restriction.

    Only runs of consecutive listed coordinates need to be inspected.
    """

    inner: NormSpec

    kind = NodeKind.SCHAUDER

    def _evaluate(self, indices, batch):
        k = len(indices)
        best = np.zeros(batch.shape[0])
        for i in range(k):
            for j in range(i + 1, k + 1):
                best = np.maximum(best, self.inner._evaluate(indices[i:j], batch[:, i:j]))
        return best

    def _subgradient(self, indices, values):
        k = len(indices)
        best, chosen = -1.0, None
        for i in range(k):
            for j in range(i + 1, k + 1):
                value = self.inner._evaluate(indices[i:j], values[np.newaxis, i:j])[0]
                if value > best:
                    best, chosen = value, (i, j)
        i, j = chosen
        value, g = self.inner._subgradient(indices[i:j], values[i:j])
        grad = np.zeros_like(values)
        grad[i:j] = g
        return value, grad


@dataclass(frozen=True)
class Reindexed(NormSpec):
    """Evaluate ``inner`` after moving coordinate ``n`` to ``mapping(n)``.

    ``mapping`` is a tuple of ``(n, image)`` pairs forming a finite
    permutation; unlisted indices stay in place.
    """

    inner: NormSpec
    mapping: tuple

    kind = NodeKind.REINDEXED

    def __post_init__(self):
        sources = [n for n, _ in self.mapping]
        images = [m for _, m in self.mapping]
        if sorted(sources) != sorted(images) or len(set(sources)) != len(sources):
            raise DomainError("reindexing must permute a finite index set")

    @cached_property
    def lookup(self):
        return dict(self.mapping)

    def _moved(self, indices):
        images = [self.lookup.get(n, n) for n in indices]
        order = sorted(range(len(images)), key=images.__getitem__)
        return tuple(images[pos] for pos in order), order

    def _evaluate(self, indices, batch):
        moved, order = self._moved(indices)
        return self.inner._evaluate(moved, batch[:, order])

    def _subgradient(self, indices, values):
        moved, order = self._moved(indices)
        value, g = self.inner._subgradient(moved, values[order])
        grad = np.zeros_like(values)
        grad[order] = g
        return value, grad


def norm_eval(spec, x):
    """Exact value of ``spec`` at the sparse vector ``x``."""
    if not x:
        return 0.0
    return spec.evaluate(x.indices, x.array)


def norm_of_indicator(spec, index_set, signs=None):
    indices = tuple(sorted(index_set))
    if not indices:
        return 0.0
    signs = signs or {}
    return spec.evaluate(indices, np.array([float(signs.get(n, 1.0)) for n in indices]))
