import functools
import math

import numpy as np
from django.core.cache import cache
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings, strategies as st

from .duality import dual_norm_eval, estimate_basis_constants
from .enclosures import integral_sandwich, interval_sum_certified, terms
from .exceptions import CapacityError, ContractError, DomainError
from .models import CoefficientRule, SeriesRule, SparseVector, TailRule, Weight
from .norms import (
    DirectSumInterleave,
    IntervalFunctional,
    MaxOf,
    PrefixFunctional,
    Reindexed,
    SchauderMajorant,
    SupNorm,
    WeightedLp,
    norm_eval,
)
from .serializers import NormSpecSerializer, WeightSerializer, spec_hash
from .solvers import grid_minimize, subgradient_minimize
from .weights import weight_at, weight_measure

W1 = Weight.formula_w1()
ONE = Weight.constant(1)
X2 = MaxOf((SupNorm(), WeightedLp(2, ONE)))
EX72 = MaxOf((WeightedLp(2, W1), PrefixFunctional(), SupNorm()))

SAMPLE_SPECS = [
    SupNorm(),
    WeightedLp(1.5, W1),
    X2,
    EX72,
    PrefixFunctional(CoefficientRule.power(0.5)),
    IntervalFunctional(((2, 4), (6, 11), (15, 30)), CoefficientRule.power(0.75)),
    DirectSumInterleave(EX72, WeightedLp(3, ONE)),
    SchauderMajorant(PrefixFunctional()),
    Reindexed(PrefixFunctional(), ((1, 3), (3, 5), (5, 1))),
]

vectors = st.dictionaries(
    keys=st.integers(min_value=1, max_value=40),
    values=st.floats(min_value=-10, max_value=10, allow_nan=False).filter(lambda v: abs(v) > 1e-6),
    min_size=1,
    max_size=7,
).map(SparseVector.from_mapping)


def vec(*values):
    return SparseVector.from_dense(values)


@functools.lru_cache(maxsize=None)
def functional_dual():
    return dual_norm_eval(EX72, SparseVector.from_mapping({1: 1.0, 2: 0.5, 4: -1.0}), 4)


class WeightTests(SimpleTestCase):
    def test_formula_w1_at_one(self):
        self.assertAlmostEqual(weight_at(W1, 1), math.log(2), places=12)

    def test_constant_far_index(self):
        self.assertEqual(weight_at(ONE, 10**9), 1.0)

    def test_combined_interleaves(self):
        u = Weight.explicit([1.0, 2.0, 3.0])
        v = Weight.constant(7)
        both = Weight.combined(u, v)
        self.assertEqual(weight_at(both, 3), weight_at(u, 2))
        self.assertEqual(weight_at(both, 4), 7.0)
        self.assertEqual(weight_at(both, 1), 1.0)

    def test_explicit_tails(self):
        repeat = Weight.explicit([2.0, 1.0])
        harmonic = Weight.explicit([2.0, 1.0], tail=TailRule.HARMONIC)
        self.assertEqual(weight_at(repeat, 50), 1.0)
        self.assertEqual(weight_at(harmonic, 4), 0.5)
        self.assertFalse(repeat.tends_to_zero)
        self.assertTrue(harmonic.tends_to_zero)
        self.assertTrue(W1.tends_to_zero)

    def test_index_zero_rejected(self):
        with self.assertRaises(DomainError):
            weight_at(ONE, 0)

    def test_invalid_constant(self):
        with self.assertRaises(DomainError):
            Weight.constant(0)

    def test_measure(self):
        self.assertEqual(weight_measure(W1, set()), 0.0)
        self.assertEqual(weight_measure(ONE, {4, 7, 9}), 3.0)
        expected = math.log(2) + math.log(3) / math.sqrt(2)
        self.assertAlmostEqual(weight_measure(W1, {1, 2}), expected, places=12)


class SparseVectorTests(SimpleTestCase):
    def test_zero_entries_dropped(self):
        x = SparseVector.from_mapping({3: 0.0, 1: 2.0})
        self.assertEqual(x.indices, (1,))
        self.assertEqual(x.support, frozenset({1}))

    def test_unsorted_rejected(self):
        with self.assertRaises(DomainError):
            SparseVector((2, 1), (1.0, 1.0))

    def test_index_capacity(self):
        with self.assertRaises(CapacityError):
            SparseVector((2**127,), (1.0,))
        self.assertEqual(SparseVector((2**127 - 1,), (1.0,)).indices[0], 2**127 - 1)

    def test_arithmetic(self):
        x = vec(3, -5, 2)
        self.assertEqual((x - x), SparseVector.zero())
        self.assertEqual(x.restrict({2}).as_dict, {2: -5.0})
        self.assertEqual(x.without({2}).indices, (1, 3))


class NormEvalTests(SimpleTestCase):
    def test_sup(self):
        self.assertEqual(norm_eval(SupNorm(), vec(3, -5, 2)), 5.0)

    def test_xp_indicator(self):
        self.assertAlmostEqual(norm_eval(X2, SparseVector.indicator(range(1, 5))), 2.0, places=14)

    def test_example72_unit_vector(self):
        self.assertEqual(norm_eval(EX72, SparseVector.indicator({5})), 1.0)

    def test_prefix_two_terms(self):
        x = SparseVector.indicator({1, 2}, {2: -1})
        self.assertEqual(norm_eval(PrefixFunctional(), x), 1.0)

    def test_prefix_ignores_gaps(self):
        # partial sums are constant between support points
        x = SparseVector.from_mapping({3: 1.0, 1000: -1.0})
        expected = max(3**-0.75, abs(3**-0.75 - 1000**-0.75))
        self.assertAlmostEqual(norm_eval(PrefixFunctional(), x), expected, places=14)

    def test_interval_functional(self):
        spec = IntervalFunctional(((2, 3), (5, 9)), CoefficientRule.power(0))
        x = SparseVector.from_mapping({2: 1, 3: 1, 5: -1, 7: 2})
        self.assertEqual(norm_eval(spec, x), 2.0)
        self.assertEqual(norm_eval(spec, SparseVector.indicator({4})), 0.0)

    def test_interval_rejects_overlap(self):
        with self.assertRaises(DomainError):
            IntervalFunctional(((2, 5), (5, 9)))

    def test_direct_sum_splits_parity(self):
        spec = DirectSumInterleave(SupNorm(), WeightedLp(1, Weight.constant(3)))
        x = SparseVector.from_mapping({1: 2.0, 2: 1.0, 4: 1.0})
        self.assertEqual(norm_eval(spec, x), 6.0)

    def test_schauder_majorant_sees_inner_runs(self):
        inner = PrefixFunctional(CoefficientRule.power(0))
        x = vec(1, -2, 1)
        self.assertEqual(norm_eval(inner, x), 1.0)
        self.assertEqual(norm_eval(SchauderMajorant(inner), x), 2.0)

    def test_reindexed(self):
        inner = PrefixFunctional(CoefficientRule.power(0))
        spec = Reindexed(inner, ((1, 2), (2, 1)))
        self.assertEqual(norm_eval(inner, vec(2, -1)), 2.0)
        self.assertEqual(norm_eval(spec, vec(2, -1)), 1.0)

    def test_zero_vector(self):
        for spec in SAMPLE_SPECS:
            self.assertEqual(norm_eval(spec, SparseVector.zero()), 0.0)

    def test_batch_matches_rows(self):
        rng = np.random.default_rng(3)
        indices = (1, 2, 4, 7, 12)
        batch = rng.normal(size=(6, len(indices)))
        for spec in SAMPLE_SPECS:
            together = spec.evaluate(indices, batch)
            for row, value in zip(batch, together):
                self.assertAlmostEqual(spec.evaluate(indices, row), value, places=12)

    def test_subgradient_value_and_inequality(self):
        rng = np.random.default_rng(5)
        indices = (1, 2, 3, 5, 8)
        for spec in SAMPLE_SPECS:
            a = rng.normal(size=len(indices))
            b = rng.normal(size=len(indices))
            value, grad = spec.subgradient(indices, a)
            self.assertAlmostEqual(value, spec.evaluate(indices, a), places=12)
            # convexity: f(b) >= f(a) + g.(b - a)
            self.assertGreaterEqual(spec.evaluate(indices, b) + 1e-9, value + grad @ (b - a))

    @given(spec=st.sampled_from(SAMPLE_SPECS), x=vectors, t=st.floats(min_value=-5, max_value=5).filter(lambda v: abs(v) > 1e-3))
    @settings(max_examples=200, deadline=None)
    def test_homogeneity(self, spec, x, t):
        base = norm_eval(spec, x)
        self.assertLessEqual(abs(norm_eval(spec, x.scaled(t)) - abs(t) * base), 1e-12 * max(1.0, abs(t) * base))

    @given(spec=st.sampled_from(SAMPLE_SPECS), x=vectors, y=vectors)
    @settings(max_examples=200, deadline=None)
    def test_triangle(self, spec, x, y):
        self.assertLessEqual(
            norm_eval(spec, x + y),
            norm_eval(spec, x) + norm_eval(spec, y) + 1e-12 * max(1.0, norm_eval(spec, x) + norm_eval(spec, y)),
        )

    @given(x=vectors)
    @settings(max_examples=100, deadline=None)
    def test_max_of_dominance(self, x):
        parts = [norm_eval(child, x) for child in EX72.children]
        self.assertEqual(norm_eval(EX72, x), max(parts))

    @given(x=vectors)
    @settings(max_examples=100, deadline=None)
    def test_schauder_majorant_monotone(self, x):
        spec = SchauderMajorant(IntervalFunctional(((1, 3), (4, 9), (10, 40))))
        full = norm_eval(spec, x)
        for cut in x.indices:
            prefix = x.restrict(n for n in x.indices if n <= cut)
            self.assertLessEqual(norm_eval(spec, prefix), full + 1e-12)


class EnclosureTests(SimpleTestCase):
    def setUp(self):
        cache.clear()

    def test_single_term(self):
        enclosure = interval_sum_certified(SeriesRule.INV_N_LOG, 1, 1)
        self.assertEqual(enclosure.lo, enclosure.hi)
        self.assertAlmostEqual(enclosure.lo, 1.442695, places=6)

    def test_short_range_is_exact(self):
        enclosure = interval_sum_certified(SeriesRule.POW_3_4, 1, 16)
        self.assertTrue(enclosure.exact)
        self.assertEqual(enclosure.width, 0.0)
        self.assertAlmostEqual(enclosure.lo, sum(n**-0.75 for n in range(1, 17)), places=12)

    def test_long_range_contains_direct_sum(self):
        enclosure = interval_sum_certified(SeriesRule.INV_N_LOG, 10, 10**7)
        direct = float(np.sum(terms(SeriesRule.INV_N_LOG, 10, 10**7)))
        self.assertFalse(enclosure.exact)
        self.assertTrue(enclosure.contains(direct))

    def test_sandwich_sound_on_summable_ranges(self):
        for rule, a, b in [
            (SeriesRule.POW_3_4, 5, 5000),
            (SeriesRule.W1, 4, 20000),
            (SeriesRule.INV_N_LOG, 2, 3000),
            (SeriesRule.INV_N_LOG, 777, 123456),
        ]:
            enclosure = integral_sandwich(rule, a, b)
            direct = math.fsum(terms(rule, a, b).tolist())
            self.assertTrue(enclosure.contains(direct), (rule, a, b))

    @override_settings(GREEDYLAB_DIRECT_SUM_LIMIT=100)
    def test_head_split_and_cache(self):
        first = interval_sum_certified(SeriesRule.INV_N_LOG, 1, 10**5)
        again = interval_sum_certified(SeriesRule.INV_N_LOG, 1, 10**5)
        self.assertEqual((first.lo, first.hi), (again.lo, again.hi))
        self.assertIsNotNone(cache.get("greedylab:enclosure:inv_n_log:1:100000"))
        self.assertTrue(first.contains(math.fsum(terms(SeriesRule.INV_N_LOG, 1, 10**5).tolist())))

    def test_huge_range(self):
        enclosure = interval_sum_certified(SeriesRule.INV_N_LOG, 10**18, 10**36)
        self.assertGreater(enclosure.lo, 0.0)
        self.assertLess(enclosure.width, 1e-15)
        # log log 10^36 - log log 10^18 = log 2
        self.assertAlmostEqual(enclosure.lo, math.log(2), places=10)

    def test_w1_non_monotone_range(self):
        with self.assertRaises(ContractError):
            interval_sum_certified(SeriesRule.W1, 2, 10)

    def test_empty_range(self):
        with self.assertRaises(DomainError):
            interval_sum_certified(SeriesRule.POW_3_4, 5, 4)


class SolverTests(SimpleTestCase):
    def test_grid_finds_kink(self):
        def batch(points):
            return np.abs(points[:, 0] - 3) + np.abs(points[:, 1] + 1)

        result = grid_minimize(batch, [0.0, 0.0], 1.0, lipschitz=2.0)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.value, 0.0, places=5)
        np.testing.assert_allclose(result.point, [3.0, -1.0], atol=1e-5)

    def test_subgradient_descent(self):
        target = np.array([2.0, -4.0, 0.5])

        def oracle(u):
            diff = u - target
            return float(np.max(np.abs(diff))), np.eye(3)[int(np.argmax(np.abs(diff)))] * np.sign(diff[int(np.argmax(np.abs(diff)))])

        result = subgradient_minimize(oracle, [np.zeros(3)], iterations=4000)
        self.assertLess(result.value, 1e-5)


class DualNormTests(SimpleTestCase):
    def test_sup_dual_is_l1(self):
        result = dual_norm_eval(SupNorm(), SparseVector.indicator({1, 2}), 2)
        self.assertAlmostEqual(result.value, 2.0, places=6)

    def test_l2_coordinate(self):
        result = dual_norm_eval(WeightedLp(2, ONE), SparseVector.indicator({1}), 1)
        self.assertEqual(result.value, 1.0)

    def test_xp_against_closed_form(self):
        # min{max(|a|_inf, |a|_2) : a1+a2+a3 = 1} is attained at a = 1/3 (1,1,1)
        result = dual_norm_eval(X2, SparseVector.indicator({1, 2, 3}), 3)
        self.assertLessEqual(result.value, math.sqrt(3) * (1 + 1e-9))
        self.assertAlmostEqual(result.value, math.sqrt(3), delta=1e-4 * math.sqrt(3))

    def test_witness_reproduces_value(self):
        c = SparseVector.from_mapping({1: 1.0, 3: -2.0})
        result = dual_norm_eval(EX72, c, 4)
        a = np.array(result.witness)
        self.assertAlmostEqual(a[0] - 2 * a[2], 1.0, places=9)
        self.assertAlmostEqual(1.0 / EX72.evaluate((1, 2, 3, 4), a), result.value, places=12)

    @given(a=st.lists(st.floats(min_value=-3, max_value=3, allow_nan=False), min_size=4, max_size=4))
    @settings(max_examples=25, deadline=None)
    def test_feasible_points_bound_from_below(self, a):
        a = np.array(a)
        norm = EX72.evaluate((1, 2, 3, 4), a)
        if norm < 1e-6:
            return
        self.assertGreaterEqual(functional_dual().value * (1 + 1e-4), abs(a[0] + 0.5 * a[1] - a[3]) / norm)

    def test_dimension_cap(self):
        with self.assertRaises(DomainError):
            dual_norm_eval(SupNorm(), SparseVector.indicator({1}), 65)

    def test_basis_constants_of_x2(self):
        constants = estimate_basis_constants(X2, 3)
        self.assertAlmostEqual(constants.lam, 1.0, places=12)
        self.assertAlmostEqual(constants.lam_prime, 1.0, places=5)
        self.assertLessEqual(constants.lam_double_prime, constants.lam * constants.lam_prime)


class SerializerTests(SimpleTestCase):
    def test_weight_tree(self):
        weight = Weight.combined(Weight.explicit([1.5, 0.25], tail=TailRule.HARMONIC), ONE)
        data = WeightSerializer(weight).data
        self.assertEqual(data["left"]["values"], ["1.5", "0.25"])
        loaded = WeightSerializer(data=data)
        self.assertTrue(loaded.is_valid(), loaded.errors)
        self.assertEqual(loaded.save(), weight)

    def test_norm_document(self):
        spec = DirectSumInterleave(SchauderMajorant(IntervalFunctional(((2, 9), (10, 2**100)))), X2)
        document = NormSpecSerializer(spec).data
        self.assertEqual(document["spec_version"], 1)
        loaded = NormSpecSerializer(data=document)
        self.assertTrue(loaded.is_valid(), loaded.errors)
        self.assertEqual(loaded.save(), spec)

    def test_version_checked(self):
        loaded = NormSpecSerializer(data={"spec_version": 2, "norm": {"node": "sup"}})
        self.assertFalse(loaded.is_valid())
        self.assertIn("spec_version", loaded.errors)

    def test_unknown_node_has_pointer(self):
        loaded = NormSpecSerializer(data={"spec_version": 1, "norm": {"node": "max_of", "children": [{"node": "nope"}]}})
        self.assertFalse(loaded.is_valid())
        self.assertIn("norm/children/0/node", str(loaded.errors))

    def test_spec_hash(self):
        self.assertEqual(spec_hash(EX72), spec_hash(MaxOf((WeightedLp(2, W1), PrefixFunctional(), SupNorm()))))
        self.assertNotEqual(spec_hash(EX72), spec_hash(X2))
