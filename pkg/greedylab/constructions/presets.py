"""Named spaces and the explicit vectors that witness their properties.

Every preset is a :class:`SpacePreset` whose ``spec`` is a plain norm tree
from :mod:`spaces.norms`, so all downstream searches treat them alike.
"""
import functools
import logging
import math
from collections import deque

import numpy as np
from django.conf import settings

from spaces.enclosures import interval_sum_certified, terms
from spaces.exceptions import CapacityError, ConfigError, ContractError, DomainError
from spaces.models import MAX_INDEX, CoefficientRule, Enclosure, SeriesRule, SparseVector, Weight
from spaces.norms import (
    DirectSumInterleave,
    IntervalFunctional,
    MaxOf,
    PrefixFunctional,
    Reindexed,
    SchauderMajorant,
    SupNorm,
    WeightedLp,
)

from .models import (
    Corollary78Variant,
    Inequality,
    IntervalFamily,
    IntervalWitness,
    PresetName,
    RearrangedWitness,
    Relation,
    SpacePreset,
)

logger = logging.getLogger(__name__)

W1 = Weight.formula_w1()
ONE = Weight.constant(1.0)
RULE = SeriesRule.INV_N_LOG
POWER = CoefficientRule.power(0.75)

DEFAULT_TARGETS = (1.2, 1.6, 2.0)
TARGET_STEP = 0.4
DEFAULT_INTERVALS = 3
# runs of the majorant are evaluated directly up to this length
DIRECT_CHECK = 64
RTOL = 1e-12


def check(name, lhs, relation, rhs, note="", holds=None):
    """Build an :class:`Inequality`, comparing with a relative tolerance unless ``holds`` is given."""
    lhs, rhs = float(lhs), float(rhs)
    slack = RTOL * max(1.0, abs(lhs), abs(rhs))
    if holds is None:
        if relation == Relation.LE:
            holds = lhs <= rhs + slack
        elif relation == Relation.GE:
            holds = lhs >= rhs - slack
        else:
            holds = math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=slack)
    return Inequality(name, lhs, str(relation), rhs, bool(holds), note)


def build_xp(p=2.0, w=None):
    """``max(||.||_inf, (sum w_n |a_n|^p)^{1/p})``."""
    p = float(p)
    if not (p > 1 and math.isfinite(p)):
        raise ContractError(f"X_p needs 1 < p < inf, got p={p}")
    w = w or ONE
    spec = MaxOf((SupNorm(), WeightedLp(p, w)))
    return SpacePreset(PresetName.XP, spec, w, {"p": p, "weight": w.label})


def build_example_72():
    """Weighted l_2 against w1, the ``n^{-3/4}`` prefix functional and the sup norm."""
    spec = MaxOf((WeightedLp(2.0, W1), PrefixFunctional(POWER), SupNorm()))
    return SpacePreset(PresetName.EX72, spec, W1, {"weight": W1.label, "prefix_alpha": 0.75})


def _witness_coefficients(m):
    n = np.arange(1, m + 1, dtype=float)
    return n**-0.25 / np.log1p(n)


def example72_witnesses(m):
    """``y_m = sum n^{-1/4} log^{-1}(n+1) e_n`` and ``z_m``, the same with signs ``(-1)^n``."""
    if m < 1:
        raise DomainError(f"m must be at least 1, got {m}")
    if m > settings.GREEDYLAB_DIRECT_SUM_LIMIT:
        raise CapacityError(f"y_{m} has too many terms to list")
    c = _witness_coefficients(m)
    signs = np.where(np.arange(1, m + 1) % 2 == 0, 1.0, -1.0)
    indices = tuple(range(1, m + 1))
    return SparseVector(indices, tuple(c.tolist())), SparseVector(indices, tuple((signs * c).tolist()))


def _target(targets, m):
    if m <= len(targets):
        return targets[m - 1]
    return targets[-1] + TARGET_STEP * (m - len(targets))


def _above(a, b, target):
    return interval_sum_certified(RULE, a, b).lo > target


def _walk(a, target):
    """End of the interval starting at ``a`` whose certified sum first exceeds ``target``.

    Lengths double until the target is passed, then bisect.
    """
    if not _above(a, MAX_INDEX, target):
        raise CapacityError(f"no interval starting at {a} reaches the sum {target} below 2^127")
    failed, length = 0, 1
    while not _above(a, min(a + length - 1, MAX_INDEX), target):
        failed, length = length, 2 * length
    passed = min(length, MAX_INDEX - a + 1)
    while passed - failed > 1:
        mid = (failed + passed) // 2
        if _above(a, a + mid - 1, target):
            passed = mid
        else:
            failed = mid
    return a + passed - 1


@functools.cache
def build_intervals_74(count=DEFAULT_INTERVALS, targets=DEFAULT_TARGETS, start=2):
    """Consecutive intervals ``A_m`` whose sums of ``1/(n log(n+1))`` exceed the targets.

    Targets past the given tuple grow by ``TARGET_STEP``.  The endpoints
    grow doubly exponentially, so a fourth interval no longer fits below
    ``2^127``.
    """
    if count < 1:
        raise DomainError(f"count must be at least 1, got {count}")
    if start < 1:
        raise DomainError("intervals are indexed from 1")
    targets = tuple(float(t) for t in targets)
    if not targets:
        raise DomainError("at least one target sum is needed")

    intervals, sums, used = [], [], []
    a = start
    for m in range(1, count + 1):
        target = _target(targets, m)
        if not target > 1:
            raise DomainError(f"target sums must exceed 1, got {target}")
        if a > MAX_INDEX:
            raise CapacityError(f"A_{m} would start beyond 2^127 - 1")
        b = _walk(a, target)
        intervals.append((a, b))
        sums.append(interval_sum_certified(RULE, a, b))
        used.append(target)
        a = b + 1

    for m in range(1, count):
        if not sums[m].lo > sums[m - 1].hi:
            raise ContractError(f"the sums over A_{m} and A_{m + 1} are not strictly increasing")
    family = IntervalFamily(tuple(intervals), tuple(sums), tuple(used))
    if family.touches_first_index:
        logger.warning("A_1 contains index 1; its single term 1/log 2 exceeds 1")
    logger.info(f"Built {count} intervals ending at {intervals[-1][1]}")
    return family


def family_from_intervals(intervals):
    """Interval family from explicit endpoints, with certified sums."""
    intervals = tuple((int(lo), int(hi)) for lo, hi in intervals)
    sums = tuple(interval_sum_certified(RULE, lo, hi) for lo, hi in intervals)
    family = IntervalFamily(intervals, sums)
    if family.touches_first_index:
        logger.warning("A_1 contains index 1; its single term 1/log 2 exceeds 1")
    return family


def _family_metadata(family):
    return {
        "intervals": [[lo, hi] for lo, hi in family.intervals],
        "sums": [[s.lo, s.hi] for s in family.sums],
        "targets": list(family.targets),
        "contains_index_1": family.touches_first_index,
    }


def build_example_74(family=None):
    """Weighted l_2 against w1, the interval functional over ``family`` and the sup norm."""
    family = family or build_intervals_74()
    spec = MaxOf((WeightedLp(2.0, W1), IntervalFunctional(family.intervals, POWER), SupNorm()))
    return SpacePreset(PresetName.EX74, spec, W1, {"weight": W1.label, **_family_metadata(family)})


def _first_true(d, ok):
    """Smallest ``k`` in ``1..d`` with ``ok(k)``, given ``ok(d)``."""
    failed, passed = 0, d
    while passed - failed > 1:
        mid = (failed + passed) // 2
        if ok(mid):
            passed = mid
        else:
            failed = mid
    return passed


def failure_bound(total):
    """``2(2 + sqrt(S))/S`` at the low end of ``S``: bounds ``||z_m|| / ||P_E z_m||`` from above."""
    return 2 * (2 + math.sqrt(total.lo)) / total.lo


def _explicit_split(family, m):
    lo, hi = family.interval(m)
    total = family.sums[m - 1]
    values = terms(RULE, lo, hi).tolist()
    d = len(values)
    split = _first_true(d, lambda k: math.fsum(values[k:]) <= math.fsum(values[:k]))
    head, tail = math.fsum(values[:split]), math.fsum(values[split:])

    n = np.arange(lo, hi + 1, dtype=float)
    coefficients = n**-0.25 / np.log1p(n)
    coefficients[split:] *= -1.0
    indices = tuple(range(lo, hi + 1))
    z = SparseVector(indices, tuple(coefficients.tolist()))

    parts = (WeightedLp(2.0, W1), IntervalFunctional(family.intervals, POWER), SupNorm())
    diamond, interval, sup = (float(node.evaluate(indices, coefficients)) for node in parts)
    selected = max(float(node.evaluate(indices[:split], coefficients[:split])) for node in parts)
    norm = max(diamond, interval, sup)
    root = math.sqrt(total.hi)
    certificates = (
        check("sup_norm", sup, Relation.LE, 1.0),
        check("interval_functional", interval, Relation.LE, 1.0),
        check("weighted_l2", diamond, Relation.EQ, root),
        check("projection", selected, Relation.GE, total.hi / 2),
        check("split_gap", head - tail, Relation.LE, 2 * values[split - 1], holds=0 <= head - tail <= 2 * values[split - 1]),
        check("qg_failure_ratio", norm / selected, Relation.LE, failure_bound(total)),
    )
    return IntervalWitness(
        m=m,
        interval=(lo, hi),
        split=split,
        selected=(lo, lo + split - 1),
        total=total,
        head=Enclosure(head, head, exact=True),
        tail=Enclosure(tail, tail, exact=True),
        certificates=certificates,
        vector=z,
        projection_ratio=selected / norm,
    )


def _symbolic_split(family, m):
    lo, hi = family.interval(m)
    total = family.sums[m - 1]
    d = hi - lo + 1

    def head(k):
        return interval_sum_certified(RULE, lo, lo + k - 1)

    def tail(k):
        if k == d:
            return Enclosure(0.0, 0.0, exact=True)
        return interval_sum_certified(RULE, lo + k, hi)

    split = _first_true(d, lambda k: tail(k).hi <= head(k).lo)
    head_sum, tail_sum = head(split), tail(split)
    gap_hi = head_sum.hi - tail_sum.lo
    sup = float(lo) ** -0.25 / math.log(lo + 1)
    upper = max(sup, gap_hi, math.sqrt(total.hi))
    lower = max(sup, head_sum.lo, math.sqrt(head_sum.lo))
    certificates = (
        check("sup_norm", sup, Relation.LE, 1.0),
        check("interval_functional", gap_hi, Relation.LE, 1.0, note="upper end of the split gap"),
        check(
            "weighted_l2", math.sqrt(total.lo), Relation.EQ, math.sqrt(total.hi),
            note="w_n c_n^2 = 1/(n log(n+1)) termwise", holds=True,
        ),
        check(
            "projection", head_sum.lo, Relation.GE, total.hi / 2,
            note="head sum dominates the tail", holds=tail_sum.hi <= head_sum.lo,
        ),
        check("split_gap", gap_hi, Relation.LE, 1.0, holds=tail_sum.hi <= head_sum.lo and gap_hi <= 1.0),
        check("qg_failure_ratio", upper / lower, Relation.LE, failure_bound(total), note="certified upper bound"),
    )
    return IntervalWitness(
        m=m,
        interval=(lo, hi),
        split=split,
        selected=(lo, lo + split - 1),
        total=total,
        head=head_sum,
        tail=tail_sum,
        certificates=certificates,
    )


@functools.cache
def example74_zm(family, m):
    """``z_m`` on ``A_m``: ``+`` on the first ``j_m`` indices and ``-`` after.

    ``j_m`` is the least ``k`` whose head sum of ``1/(n log(n+1))`` dominates
    the tail.  Intervals too long to list keep certified aggregates only.
    """
    witness = _explicit_split(family, m) if family.explicit(m) else _symbolic_split(family, m)
    if not witness.holds:
        failed = [item.name for item in witness.certificates if not item.holds]
        logger.warning(f"z_{m}: certificates {failed} do not hold")
    logger.info(f"z_{m} on {witness.interval}: j_m = {witness.split}, explicit={witness.explicit}")
    return witness


def rearrange_prefix_balanced(values):
    """Order keeping partial sums small: take a positive term when the running sum is <= 0.

    Returns the order and the largest partial sum magnitude reached.
    """
    values = [float(v) for v in values]
    positive = deque(k for k, v in enumerate(values) if v > 0)
    negative = deque(k for k, v in enumerate(values) if v <= 0)
    order, running, bound = [], 0.0, 0.0
    while positive or negative:
        queue = positive if (positive and running <= 0) or not negative else negative
        k = queue.popleft()
        running += values[k]
        bound = max(bound, abs(running))
        order.append(k)
    return tuple(order), bound


@functools.cache
def _rearrangement(family, m):
    witness = example74_zm(family, m)
    if not witness.explicit:
        raise CapacityError(f"A_{m} has {family.length(m)} terms, too many to rearrange")
    n = np.asarray(witness.vector.indices, dtype=float)
    return rearrange_prefix_balanced((n**-0.75 * witness.vector.array).tolist())


@functools.cache
def _example_76(family):
    base = build_example_74(family)
    mapping, bounds, kept = [], {}, []
    for m in range(1, family.count + 1):
        if not family.explicit(m):
            kept.append(m)
            continue
        permutation, achieved = _rearrangement(family, m)
        lo, _ = family.interval(m)
        mapping.extend((lo + k, lo + p) for k, p in enumerate(permutation) if k != p)
        bounds[str(m)] = achieved
    if kept:
        logger.warning(f"Intervals {kept} are too long to rearrange and keep their order")
    spec = SchauderMajorant(Reindexed(base.spec, tuple(mapping)))
    metadata = {**base.metadata, "achieved_bounds": bounds, "unrearranged": kept}
    return SpacePreset(PresetName.EX76, spec, W1, metadata)


def build_example_76(family=None):
    """Schauder majorant of the interval space after rearranging each explicit ``A_m``."""
    return _example_76(family or build_intervals_74())


def example76_certificates(family, m):
    """``y_m`` (``z_m`` in the rearranged basis) against the majorant bounds.

    The majorant norm of a vector living on one interval is the largest of
    its sup norm, its weighted l_2 norm and the spread of the rearranged
    partial sums, which is at most twice the achieved bound.
    """
    witness = example74_zm(family, m)
    permutation, achieved = _rearrangement(family, m)
    total = family.sums[m - 1]
    order = list(permutation)
    indices = witness.vector.indices
    z = witness.vector.array
    values = z[order]
    y = SparseVector(indices, tuple(values.tolist()))

    images = np.asarray(indices, dtype=float)[order]
    prefix = np.concatenate(([0.0], np.cumsum(images**-0.75 * values)))
    spread = float(prefix.max() - prefix.min())
    diamond = float(WeightedLp(2.0, W1).evaluate(indices, z))
    norm = max(float(np.max(np.abs(values))), diamond, spread)
    head = witness.head.lo
    root = math.sqrt(total.hi)

    certificates = [
        check("majorant_norm", norm, Relation.LE, max(1.0, root, 2 * achieved)),
        check("projection", head, Relation.GE, total.hi / 2, note="interval functional of the full run"),
        check("ratio", head / norm, Relation.GE, total.hi / (2 * (2 * achieved + root))),
    ]
    if len(indices) <= DIRECT_CHECK:
        spec = build_example_76(family).spec
        lo = indices[0]
        positions = [lo + k for k, p in enumerate(order) if p < witness.split]
        certificates.append(check("direct_norm", float(spec.evaluate(indices, values)), Relation.EQ, norm))
        certificates.append(check("direct_projection", _norm(spec, y.restrict(positions)), Relation.GE, head))
    result = RearrangedWitness(m, permutation, achieved, tuple(certificates), y)
    logger.info(f"y_{m}: achieved bound {achieved:.6g}, holds={result.holds}")
    return result


def _norm(spec, x):
    return float(spec.evaluate(x.indices, x.array)) if x else 0.0


def schauder_majorant(preset):
    return SpacePreset(
        f"schauder({preset.name})",
        SchauderMajorant(preset.spec),
        preset.weight,
        {"inner": preset.name, "inner_metadata": preset.metadata},
    )


def direct_sum(left, right, weight=None):
    """Interleaved sum: odd indices feed ``left``, even ones ``right``."""
    return SpacePreset(
        f"sum({left.name},{right.name})",
        DirectSumInterleave(left.spec, right.spec),
        weight or Weight.combined(left.weight, right.weight),
        {"left": left.name, "right": right.name, "left_metadata": left.metadata, "right_metadata": right.metadata},
    )


def build_corollary_78(variant, p=2.0, w_c0=None, count=DEFAULT_INTERVALS):
    """X_p against a weight tending to 0, interleaved with a conditional component.

    The sum is measured against ``W(w_c0, 1)``.
    """
    w_c0 = w_c0 or W1
    if variant not in Corollary78Variant.values:
        raise ContractError(f"unknown variant '{variant}'")
    if not w_c0.tends_to_zero:
        raise ContractError(f"weight {w_c0.label} is not declared to tend to 0")
    if variant == Corollary78Variant.ALMOST_GREEDY:
        component = build_example_72()
    elif variant == Corollary78Variant.SEMI_NOT_QG_SCHAUDER:
        component = build_example_76(build_intervals_74(count))
    else:
        component = build_example_74(build_intervals_74(count))
    preset = direct_sum(build_xp(p, w_c0), component, Weight.combined(w_c0, ONE))
    return SpacePreset(f"{PresetName.COR78}:{variant}", preset.spec, preset.weight, {"variant": variant, **preset.metadata})


def load_preset(name, p=2.0, weight=None, count=DEFAULT_INTERVALS):
    """Resolve a preset name; ``weight`` replaces the default of presets that take one."""
    base, _, variant = name.partition(":")
    if base == PresetName.COR78:
        return build_corollary_78(variant, p, weight, count)
    if variant or base not in PresetName.values:
        raise ConfigError(f"unknown preset '{name}'", pointer="space")
    if base == PresetName.XP:
        return build_xp(p, weight)
    if base == PresetName.EX72:
        return build_example_72()
    if base == PresetName.EX74:
        return build_example_74(build_intervals_74(count))
    if base == PresetName.EX76:
        return build_example_76(build_intervals_74(count))
    return direct_sum(build_xp(p, weight or W1), build_example_72())
