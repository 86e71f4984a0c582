import math

import numpy as np
from django.test import SimpleTestCase, override_settings, tag
from hypothesis import given, settings, strategies as st

from spaces.enclosures import interval_sum_certified, terms
from spaces.exceptions import BudgetError, CapacityError, ConfigError, ContractError, DomainError
from spaces.models import MAX_INDEX, SeriesRule, SparseVector, Weight
from spaces.norms import PrefixFunctional, norm_eval, norm_of_indicator
from spaces.serializers import spec_hash
from spaces.weights import weight_at

from .models import Corollary78Variant
from .presets import (
    ONE,
    W1,
    build_corollary_78,
    build_example_72,
    build_example_74,
    build_example_76,
    build_intervals_74,
    build_xp,
    direct_sum,
    example72_witnesses,
    example74_zm,
    example76_certificates,
    family_from_intervals,
    failure_bound,
    load_preset,
    rearrange_prefix_balanced,
    schauder_majorant,
)
from .serializers import IntervalFamilySerializer, SpacePresetSerializer
from .verify import (
    example72_conditionality,
    example72_qg_suite,
    example72_sandwich_suite,
    example74_ratio_trend,
    lemma71_suite,
    lemma75_suite,
    lemma77_democracy_sandwich,
    random_signed_sets,
    signed_batches,
    signed_rows,
    signed_set_count,
    xp_exactness_suite,
)

W1_12 = math.log(2) + math.log(3) / math.sqrt(2)


class PresetTests(SimpleTestCase):
    def test_xp_indicator(self):
        self.assertAlmostEqual(norm_of_indicator(build_xp(2, ONE).spec, range(1, 10)), 3.0, places=12)

    def test_xp_unit_vectors(self):
        spec = build_xp(2, Weight.explicit((0.25, 4.0, 9.0))).spec
        for n, expected in [(1, 1.0), (2, 2.0), (3, 3.0)]:
            self.assertAlmostEqual(norm_of_indicator(spec, [n]), expected, places=12)

    def test_xp_cubic_with_w1(self):
        value = norm_of_indicator(build_xp(3, W1).spec, [1, 2])
        self.assertAlmostEqual(value, W1_12 ** (1 / 3), places=12)

    def test_xp_rejects_small_p(self):
        for p in (1, 0.5, float("inf")):
            with self.assertRaises(ContractError):
                build_xp(p, ONE)

    def test_example72_normalized(self):
        spec = build_example_72().spec
        for n in range(1, 101):
            self.assertAlmostEqual(norm_of_indicator(spec, [n]), 1.0, places=12)

    def test_example72_difference(self):
        value = norm_eval(build_example_72().spec, SparseVector((1, 2), (1.0, -1.0)))
        self.assertAlmostEqual(value, math.sqrt(W1_12), places=12)
        self.assertGreater(value, 1.2124)

    def test_example72_witnesses(self):
        y, z = example72_witnesses(1)
        self.assertAlmostEqual(y.coefficient(1), 1 / math.log(2), places=12)
        self.assertEqual(z, -y)
        with self.assertRaises(DomainError):
            example72_witnesses(0)

    def test_example72_witness_prefix_norms(self):
        prefix = PrefixFunctional()
        for m in (5, 50, 400):
            y, z = example72_witnesses(m)
            self.assertLessEqual(norm_eval(prefix, z), 2 / math.log(2))
            total = interval_sum_certified(SeriesRule.INV_N_LOG, 1, m)
            self.assertAlmostEqual(norm_eval(prefix, y), total.lo, places=10)

    def test_schauder_majorant_metadata(self):
        preset = schauder_majorant(build_example_72())
        self.assertEqual(preset.metadata["inner"], "ex72")
        self.assertEqual(preset.weight, W1)

    def test_direct_sum_parity(self):
        left, right = build_xp(2, Weight.explicit((4.0,))), build_example_72()
        total = direct_sum(left, right)
        self.assertAlmostEqual(norm_of_indicator(total.spec, [1]), norm_of_indicator(left.spec, [1]))
        self.assertAlmostEqual(norm_of_indicator(total.spec, [2]), norm_of_indicator(right.spec, [1]))
        self.assertEqual(weight_at(total.weight, 3), 4.0)

    def test_corollary_weight_interleaves(self):
        preset = build_corollary_78(Corollary78Variant.ALMOST_GREEDY, 2, W1)
        self.assertEqual(weight_at(preset.weight, 3), weight_at(W1, 2))
        self.assertEqual(weight_at(preset.weight, 4), 1.0)
        for n in range(1, 21):
            self.assertAlmostEqual(norm_of_indicator(preset.spec, [n]), 1.0, places=12)

    def test_corollary_contracts(self):
        with self.assertRaises(ContractError):
            build_corollary_78(Corollary78Variant.ALMOST_GREEDY, 2, ONE)
        with self.assertRaises(ContractError):
            build_corollary_78("unknown", 2, W1)

    def test_corollary_interval_variants(self):
        for variant in (Corollary78Variant.SEMI_NOT_SCHAUDER, Corollary78Variant.SEMI_NOT_QG_SCHAUDER):
            preset = build_corollary_78(variant, 2, W1, count=1)
            self.assertEqual(preset.name, f"cor78:{variant}")
            self.assertGreater(norm_of_indicator(preset.spec, [2]), 0)

    def test_load_preset(self):
        self.assertEqual(load_preset("ex72").spec, build_example_72().spec)
        self.assertEqual(load_preset("cor78:almost_greedy").metadata["variant"], "almost_greedy")
        self.assertEqual(load_preset("xp", p=3).metadata["p"], 3.0)
        for name in ("nope", "xp:extra"):
            with self.assertRaises(ConfigError):
                load_preset(name)


class IntervalFamilyTests(SimpleTestCase):
    def test_first_interval(self):
        family = build_intervals_74(1)
        self.assertEqual(family.intervals, ((2, 9),))
        self.assertGreater(family.sums[0].lo, 1.2)
        self.assertTrue(family.sums[0].exact)

    def test_default_family(self):
        family = build_intervals_74()
        self.assertEqual(family.count, 3)
        for (lo, hi), (next_lo, _) in zip(family.intervals, family.intervals[1:]):
            self.assertEqual(next_lo, hi + 1)
        for previous, current in zip(family.sums, family.sums[1:]):
            self.assertGreater(current.lo, previous.hi)
        for total, target in zip(family.sums, family.targets):
            self.assertGreater(total.lo, target)
        self.assertTrue(family.explicit(1) and family.explicit(2))
        self.assertFalse(family.explicit(3))
        self.assertLessEqual(family.intervals[-1][1], MAX_INDEX)

    def test_fourth_interval_overflows(self):
        with self.assertRaises(CapacityError):
            build_intervals_74(4)

    def test_targets_exceed_one(self):
        with self.assertRaises(DomainError):
            build_intervals_74(1, (0.9,))

    def test_first_index_flagged(self):
        self.assertTrue(family_from_intervals([(1, 3)]).touches_first_index)
        self.assertFalse(family_from_intervals([(2, 3)]).touches_first_index)


class Example74Tests(SimpleTestCase):
    def test_first_split(self):
        family = build_intervals_74(1)
        witness = example74_zm(family, 1)
        self.assertTrue(witness.explicit)
        self.assertEqual(witness.split, 2)
        self.assertEqual(witness.selected, (2, 3))
        self.assertTrue(witness.holds, witness.certificates)
        z = witness.vector
        self.assertTrue(all(z.coefficient(n) > 0 for n in (2, 3)))
        self.assertTrue(all(z.coefficient(n) < 0 for n in range(4, 10)))

    def test_split_gap_below_largest_term(self):
        witness = example74_zm(build_intervals_74(1), 1)
        largest = float(terms(SeriesRule.INV_N_LOG, 2, 2)[0])
        gap = witness.head.lo - witness.tail.hi
        self.assertGreaterEqual(gap, 0)
        self.assertLessEqual(gap, largest)

    def test_failure_ratio(self):
        family = build_intervals_74(1)
        witness = example74_zm(family, 1)
        spec = build_example_74(family).spec
        z = witness.vector
        selected = norm_eval(spec, z.restrict(range(witness.selected[0], witness.selected[1] + 1)))
        total = witness.total.lo
        self.assertGreaterEqual(selected / norm_eval(spec, z), total / (2 * (2 + math.sqrt(total))))

    def test_projection_ratio(self):
        for witness in example74_ratio_trend(build_intervals_74()).details:
            with self.subTest(m=witness.m):
                if not witness.explicit:
                    self.assertIsNone(witness.projection_ratio)
                    continue
                (ratio,) = [c for c in witness.certificates if c.name == "qg_failure_ratio"]
                self.assertAlmostEqual(witness.projection_ratio, 1 / ratio.lhs, places=12)
                self.assertGreaterEqual(witness.projection_ratio, 1 / ratio.rhs - 1e-12)

    def test_trend_over_default_family(self):
        result = example74_ratio_trend(build_intervals_74())
        self.assertTrue(result.holds, result.violations)
        witnesses = result.details
        self.assertTrue(witnesses[1].explicit)
        self.assertFalse(witnesses[2].explicit)
        bounds = [failure_bound(witness.total) for witness in witnesses]
        self.assertEqual(bounds, sorted(bounds, reverse=True))

    def test_example74_preset(self):
        preset = build_example_74(build_intervals_74(1))
        self.assertEqual(preset.metadata["intervals"], [[2, 9]])
        self.assertAlmostEqual(norm_of_indicator(preset.spec, [1]), 1.0, places=12)


class RearrangementTests(SimpleTestCase):
    def test_alternating(self):
        order, bound = rearrange_prefix_balanced([0.5, -0.4, 0.3, -0.3])
        self.assertEqual(order, (0, 1, 2, 3))
        self.assertLessEqual(bound, 0.5)

    def test_all_positive(self):
        order, bound = rearrange_prefix_balanced([0.2, 0.3, 0.1])
        self.assertEqual(order, (0, 1, 2))
        self.assertAlmostEqual(bound, 0.6)

    def test_forced(self):
        self.assertEqual(rearrange_prefix_balanced([0.9, -0.8]), ((0, 1), 0.9))

    def test_empty(self):
        self.assertEqual(rearrange_prefix_balanced([]), ((), 0.0))

    @given(st.lists(st.floats(min_value=-1, max_value=1, allow_nan=False), max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_bound_controlled(self, values):
        order, bound = rearrange_prefix_balanced(values)
        self.assertEqual(sorted(order), list(range(len(values))))
        partial = np.cumsum(np.asarray(values)[list(order)]) if values else np.zeros(1)
        self.assertAlmostEqual(bound, float(np.max(np.abs(partial))), places=9)
        largest = max((abs(v) for v in values), default=0.0)
        self.assertLessEqual(bound, max(largest, abs(math.fsum(values))) + 1e-9)


class Example76Tests(SimpleTestCase):
    def test_certificates_on_short_interval(self):
        family = build_intervals_74(1)
        result = example76_certificates(family, 1)
        self.assertTrue(result.holds, result.certificates)
        names = {item.name for item in result.certificates}
        self.assertTrue({"majorant_norm", "projection", "ratio", "direct_norm"} <= names)
        self.assertLessEqual(result.achieved_bound, 1.0)

    def test_preset_records_bounds(self):
        preset = build_example_76(build_intervals_74(1))
        self.assertIn("1", preset.metadata["achieved_bounds"])
        self.assertEqual(preset.metadata["unrearranged"], [])

    def test_long_interval_is_refused(self):
        with self.assertRaises(CapacityError):
            example76_certificates(build_intervals_74(), 3)


class SuiteTests(SimpleTestCase):
    def test_lemma71(self):
        result = lemma71_suite(exhaustive_n=12, random_count=500)
        self.assertTrue(result.holds)
        self.assertEqual(result.checked, 4095 + 500)
        self.assertLess(result.worst_ratio, 1.0)

    def test_conditionality_grows(self):
        points = example72_conditionality((100, 10_000, 1_000_000))
        ratios = [point.ratio for point in points]
        self.assertLess(ratios[0], ratios[1])
        self.assertLess(ratios[1], ratios[2])

    def test_conditionality_matches_norms(self):
        spec = build_example_72().spec
        point = example72_conditionality((100,))[0]
        y, z = example72_witnesses(100)
        self.assertAlmostEqual(point.y_norm, norm_eval(spec, y), places=9)
        self.assertAlmostEqual(point.z_norm, norm_eval(spec, z), places=9)

    def test_quasi_greedy_suite(self):
        result = example72_qg_suite(count=10, m_max=3, seed=1)
        self.assertTrue(result.holds)
        self.assertGreaterEqual(result.worst_ratio, 1 - 1e-12)
        self.assertEqual(len(result.details), 3)

    def test_sandwich(self):
        result = example72_sandwich_suite(pool=6, max_size=6, random_count=50)
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, (3**6 - 1) // 2 + 50)

    def test_sandwich_over_twenty_indices(self):
        result = example72_sandwich_suite(pool=20, max_size=2, random_count=100)
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, 20 + 190 * 2 + 100)
        self.assertLessEqual(result.worst_ratio, 1 + 1e-10)

    def test_xp_exactness(self):
        result = xp_exactness_suite(3.0, W1, pool=6, max_size=6, random_count=50)
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, (3**6 - 1) // 2 + 50)

    def test_sampled_sets_reach_past_the_pool(self):
        result = xp_exactness_suite(2.0, W1, pool=1, max_size=12, random_count=200, random_max=10_000, seed=3)
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, 1 + 200)
        sets = list(random_signed_sets(np.random.default_rng(3), 200, 10_000, 12))
        self.assertTrue(all(1 <= len(indices) <= 12 for indices, _ in sets))
        self.assertTrue(all(list(indices) == sorted(set(indices)) for indices, _ in sets))
        self.assertGreater(max(indices[-1] for indices, _ in sets), 20)


class SignedBatchTests(SimpleTestCase):
    def test_count(self):
        self.assertEqual(signed_set_count(5, 5), (3**5 - 1) // 2)
        self.assertEqual(signed_set_count(20, 8), sum(math.comb(20, k) * 2 ** (k - 1) for k in range(1, 9)))

    def test_one_pattern_per_opposite_pair(self):
        rows = np.vstack(list(signed_batches(4, 4, batch_rows=7)))
        self.assertEqual(len(rows), signed_set_count(4, 4))
        seen = {tuple(row) for row in rows}
        self.assertEqual(len(seen), len(rows))
        self.assertTrue(all(row[np.flatnonzero(row)[0]] == 1.0 for row in rows))
        mirrored = seen | {tuple(-row) for row in rows} | {(0.0,) * 4}
        self.assertEqual(mirrored, {tuple(row) for row in signed_rows(4)})

    def test_max_size_limits_support(self):
        rows = np.vstack(list(signed_batches(12, 3)))
        self.assertEqual(len(rows), signed_set_count(12, 3))
        self.assertEqual(int(np.count_nonzero(rows, axis=1).max()), 3)

    @override_settings(GREEDYLAB_SIGNED_CAP=1000)
    def test_cap(self):
        with self.assertRaises(BudgetError) as caught:
            next(signed_batches(20, 8))
        self.assertEqual(caught.exception.cap, 1000)
        self.assertEqual(caught.exception.needed, signed_set_count(20, 8))


@tag("slow")
class AcceptanceSuiteTests(SimpleTestCase):
    """The suites at their default sizes."""

    def test_xp_exactness(self):
        for p in (2.0, 3.0):
            for w in (ONE, W1):
                with self.subTest(p=p, w=w.label):
                    result = xp_exactness_suite(p, w)
                    self.assertTrue(result.holds, result.violations)
                    self.assertEqual(result.checked, (3**10 - 1) // 2 + 1000)

    def test_lemma71(self):
        result = lemma71_suite()
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, 4095 + 10_000)

    def test_sandwich(self):
        result = example72_sandwich_suite()
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, signed_set_count(20, 8) + 1000)

    def test_quasi_greedy(self):
        result = example72_qg_suite()
        self.assertTrue(result.holds, result.violations)
        self.assertEqual([estimate.m for estimate in result.details], list(range(1, 9)))

    def test_lemma75(self):
        result = lemma75_suite(build_example_72(), n=8)
        self.assertTrue(result.holds, result.violations)

    def test_lemma77(self):
        result = lemma77_democracy_sandwich(build_xp(2, W1), build_example_72(), n=8)
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, 2**8 - 1)

    def test_lemma75_on_example72(self):
        result = lemma75_suite(build_example_72(), n=6, random_count=50)
        self.assertTrue(result.holds, result.violations)
        self.assertLessEqual(result.worst_ratio, 1 + 1e-12)

    def test_lemma77(self):
        result = lemma77_democracy_sandwich(build_xp(2, W1), build_example_72(), n=6)
        self.assertTrue(result.holds)
        self.assertEqual(result.checked, 2**6 - 1)
        self.assertAlmostEqual(result.worst_ratio, 1.0, places=12)


class SerializerTests(SimpleTestCase):
    def test_preset_record(self):
        preset = build_example_72()
        data = SpacePresetSerializer(preset).data
        self.assertEqual(data["name"], "ex72")
        self.assertEqual(data["spec_hash"], spec_hash(preset.spec))
        self.assertEqual(data["spec"]["spec_version"], 1)

    def test_family_loads(self):
        family = build_intervals_74(1)
        serializer = IntervalFamilySerializer(data=IntervalFamilySerializer(family).data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save(), family)
