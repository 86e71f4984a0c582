import math
from fractions import Fraction

from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from spaces.exceptions import ConfigError, ContractError, DomainError
from spaces.models import SparseVector, Weight
from spaces.norms import MaxOf, PrefixFunctional, SupNorm, WeightedLp, norm_eval
from spaces.weights import weight_measure

from .bounds import bound_calculator, formula_tags
from .candidates import candidate_family, sign_patterns
from .democracy import (
    bidemocracy_lb,
    check_property_A,
    democracy_lb,
    democracy_profile,
    superdemocracy_lb,
)
from .estimators import (
    SCORERS,
    estimate_parameter,
    is_self_certified,
    remark37_chain,
)
from .models import Budget, EstimateKind
from .serializers import ParameterEstimateSerializer

ONE = Weight.constant(1)
W1 = Weight.formula_w1()
X2 = MaxOf((SupNorm(), WeightedLp(2, ONE)))
EX72 = MaxOf((WeightedLp(2, W1), PrefixFunctional(), SupNorm()))

TINY = Budget(candidates=12, pool_size=6, max_sets=2000, solver_iterations=300, random_starts=1, seed=7)

CANONICAL = {"C": 1, "M": 1, "s": 1, "t": 1, "lam": 1, "lam_p": 1, "inf_w_inv": 1, "kappa": 1}

positive = st.floats(min_value=0.01, max_value=50, allow_nan=False, allow_infinity=False)
weakness = st.floats(min_value=0.01, max_value=1.0, allow_nan=False)


class BoundCalculatorTests(SimpleTestCase):
    def test_canonical_values(self):
        self.assertEqual(bound_calculator("thm314_i", CANONICAL), 9.0)
        self.assertEqual(bound_calculator("thm53_K", CANONICAL), 2.0)
        self.assertEqual(bound_calculator("prop39_C1", CANONICAL), 12.0)
        self.assertEqual(bound_calculator("remark37", CANONICAL), 2.0)

    def test_more_plug_ins(self):
        self.assertEqual(bound_calculator("thm314_ii", CANONICAL), 4.0)
        self.assertEqual(bound_calculator("thm315_i", CANONICAL), 7.0)
        self.assertEqual(bound_calculator("thm315_ii", CANONICAL), 4.0)
        self.assertEqual(bound_calculator("thm53_qg", {"C": 1, "K": 2, "s": 1, "t": 1}), 6.0)
        self.assertEqual(bound_calculator("thm321", {"C1": 1, "C2": 2, "C3": 3, "s": 1, "t": 1}), 7.0)
        self.assertEqual(bound_calculator("prop62", {"M": 1, "L": 1, "s": 1, "t": 1}), 3.0)
        self.assertEqual(bound_calculator("prop611_i", {"M": 1, "L_m": 2, "s": 1}), 8.0)
        self.assertEqual(bound_calculator("thm315_norming", {"r": 0.5}), 2.0)
        self.assertEqual(bound_calculator("lemma77_dem", {"lam": 1, "lam_p": 1, "C": 1, "C1": 3, "C2": 2}), 7.0)

    def test_thm314_rounds_once(self):
        inputs = {"C": 1.5, "M": 2, "s": 0.3, "t": 0.7, "lam": 1.1, "lam_p": 1.2}
        exact = {name: Fraction(value) for name, value in inputs.items()}
        first = 1 + 8 / (exact["t"] * exact["s"]) * exact["lam"] * exact["lam_p"]
        second = 1 + 6 * exact["C"] / (exact["t"] * exact["s"] ** 3)
        self.assertEqual(bound_calculator("thm314_i", inputs), float(exact["C"] * exact["M"] * max(first, second)))

    def test_parity_variants(self):
        inputs = {"M": 1, "L_m": 1, "L_2m": 1, "L_m1": 1, "L_2": 1, "s": 1, "t": 1, "lam": 1, "lam_p": 1}
        self.assertEqual(bound_calculator("prop66_ii", {**inputs, "m": 2}), 5.0)
        with self.assertRaises(DomainError):
            bound_calculator("prop66_ii", {**inputs, "m": 3})
        with self.assertRaises(DomainError):
            bound_calculator("prop66_iii", {**inputs, "m": 1})
        self.assertEqual(bound_calculator("prop611_iii", {**inputs, "m": 3}), 3.0)

    def test_odd_bounds_at_m_one(self):
        # L_ch(0, s) = 0
        inputs = {"M": 1, "L_m1": 0, "s": 1, "lam": 1, "lam_p": 1, "m": 1}
        self.assertEqual(bound_calculator("prop611_iii", inputs), 1.0)
        self.assertEqual(bound_calculator("cor612_iii", {**inputs, "p_m": 1}), 2.0)
        self.assertEqual(bound_calculator("prop62", {"M": 1, "L": 0, "s": 1, "t": 1}), 0.0)
        with self.assertRaises(DomainError):
            bound_calculator("prop611_iii", {**inputs, "L_m1": -1})
        with self.assertRaises(DomainError):
            bound_calculator("prop611_iii", {**inputs, "M": 0})

    def test_p_m_table(self):
        self.assertEqual(bound_calculator("cor612_pm", {"m": 3, "s": 1, "L_2": 1, "L_4": 2}), 10.0)
        with self.assertRaises(ContractError):
            bound_calculator("cor612_pm", {"m": 3, "s": 1, "L_2": 1})

    def test_contract_and_domain_errors(self):
        with self.assertRaises(ContractError):
            bound_calculator("thm314_i", {"C": 1})
        with self.assertRaises(ContractError):
            bound_calculator("no_such_bound", CANONICAL)
        with self.assertRaises(DomainError):
            bound_calculator("thm53_K", {**CANONICAL, "s": 1.5})
        with self.assertRaises(DomainError):
            bound_calculator("thm53_K", {**CANONICAL, "C": -1})
        with self.assertRaises(DomainError):
            bound_calculator("thm53_K", {**CANONICAL, "C": math.inf})
        with self.assertRaises(DomainError):
            bound_calculator("thm53_K", {**CANONICAL, "C": True})

    def test_tags(self):
        tags = formula_tags()
        self.assertIn("cor612_pm", tags)
        self.assertIn("lemma75_tqg", tags)

    @settings(max_examples=60, deadline=None)
    @given(C=positive, M=positive, lam=positive, lam_p=positive, s=weakness, t=weakness)
    def test_pure_and_monotone(self, C, M, lam, lam_p, s, t):
        inputs = {"C": C, "M": M, "s": s, "t": t, "lam": lam, "lam_p": lam_p}
        value = bound_calculator("thm314_i", inputs)
        self.assertEqual(value, bound_calculator("thm314_i", dict(reversed(list(inputs.items())))))
        self.assertGreaterEqual(value, bound_calculator("thm315_i", inputs))


class CandidateTests(SimpleTestCase):
    def test_family_extends_its_prefix(self):
        short = candidate_family((1, 2, 3, 4, 5, 6), 2, 1.0, 10, seed=3)
        long = candidate_family((1, 2, 3, 4, 5, 6), 2, 1.0, 25, seed=3)
        self.assertEqual(long[: len(short)], short)
        self.assertEqual(short[:2], [SparseVector.indicator({1, 2}), SparseVector.indicator({1, 2, 3})])

    def test_family_depends_on_seed(self):
        first = candidate_family((1, 2, 3, 4, 5, 6), 2, 1.0, 10, seed=0)
        second = candidate_family((1, 2, 3, 4, 5, 6), 2, 1.0, 10, seed=1)
        self.assertNotEqual(first, second)

    def test_sign_patterns(self):
        patterns = sign_patterns({4, 2, 9}, 16, None)
        self.assertEqual(len(patterns), 4)
        self.assertTrue(all(p[2] == 1.0 for p in patterns))
        self.assertEqual(len({tuple(sorted(p.items())) for p in patterns}), 4)


class EstimatorTests(SimpleTestCase):
    def test_unconditional_space_stays_at_one(self):
        for kind in ("g_bar", "g_hat", "trunc_qg", "succ"):
            for m in (1, 2):
                with self.subTest(kind=kind, m=m):
                    estimate = estimate_parameter(X2, kind, m, budget=TINY)
                    self.assertLessEqual(estimate.lower_bound, 1 + 1e-9)

    def test_witnesses_reproduce_every_kind(self):
        for kind in SCORERS:
            with self.subTest(kind=kind):
                estimate = estimate_parameter(EX72, kind, 2, budget=TINY)
                self.assertTrue(estimate.witnesses)
                self.assertTrue(is_self_certified(EX72, estimate))
                self.assertEqual(estimate.evaluated, TINY.candidates + 2)

    def test_monotone_in_budget(self):
        for kind in ("g_bar", "L_a", "prop_C"):
            with self.subTest(kind=kind):
                small = estimate_parameter(EX72, kind, 2, budget=TINY.with_candidates(6))
                large = estimate_parameter(EX72, kind, 2, budget=TINY.with_candidates(18))
                self.assertGreaterEqual(large.lower_bound, small.lower_bound)

    def test_disjoint_almost_greedy_ordering(self):
        values = {kind: estimate_parameter(EX72, kind, 2, budget=TINY).lower_bound for kind in ("L_a", "L_d", "L_ad")}
        self.assertLessEqual(values["L_ad"], min(values["L_a"], values["L_d"]) * (1 + 1e-12))

    def test_almost_greedy_at_least_one(self):
        for spec in (X2, EX72, PrefixFunctional()):
            estimate = estimate_parameter(spec, "L_a", 2, budget=TINY)
            self.assertGreaterEqual(estimate.lower_bound, 1 - 1e-12)

    def test_projections_dominate_greedy_projections(self):
        g_bar = estimate_parameter(EX72, "g_bar", 2, budget=TINY)
        k_m = estimate_parameter(EX72, "k_m", 2, budget=TINY)
        self.assertGreaterEqual(k_m.lower_bound, g_bar.lower_bound * (1 - 1e-12))

    def test_zero_budget_uses_trivial_witness(self):
        estimate = estimate_parameter(EX72, "g_bar", 2, budget=TINY.with_candidates(0))
        self.assertEqual(estimate.evaluated, 2)
        self.assertEqual(estimate.lower_bound, 1.0)

    def test_contract_errors(self):
        with self.assertRaises(ContractError):
            estimate_parameter(X2, "no_such_kind", 2, budget=TINY)
        with self.assertRaises(ContractError):
            estimate_parameter(X2, EstimateKind.DEMOCRACY, 2, budget=TINY)
        with self.assertRaises(DomainError):
            estimate_parameter(X2, "g_bar", 0, budget=TINY)
        with self.assertRaises(DomainError):
            estimate_parameter(X2, "g_bar", 2, t=1.5, budget=TINY)

    def test_budget_profiles(self):
        self.assertEqual(Budget.profile("smoke").candidates, 40)
        self.assertEqual(Budget.profile("smoke", seed=5).seed, 5)
        with self.assertRaises(ConfigError):
            Budget.profile("enormous")

    def test_remark37_chain(self):
        for spec in (X2, EX72):
            with self.subTest(spec=spec):
                check = remark37_chain(spec, 2, budget=TINY)
                self.assertTrue(check.holds)
                self.assertEqual(check.bound, 2 * check.trunc_qg.lower_bound**2)
                self.assertGreater(check.family_size, TINY.candidates)

    def test_parallel_scoring_matches_serial(self):
        serial = estimate_parameter(EX72, "g_hat", 2, budget=TINY)
        parallel = estimate_parameter(EX72, "g_hat", 2, budget=TINY, jobs=2)
        self.assertEqual(parallel.lower_bound, serial.lower_bound)
        self.assertEqual(parallel.witnesses, serial.witnesses)


class DemocracyTests(SimpleTestCase):
    def test_unconditional_profile(self):
        points = democracy_profile(X2, ONE, [1, 2, 3, 4], budget=TINY, pool=(1, 2, 3, 4))
        for point in points:
            with self.subTest(W=point.measure):
                expected = max(1.0, math.sqrt(point.measure))
                self.assertAlmostEqual(point.upper, expected, places=12)
                self.assertAlmostEqual(point.lower, expected, places=12)

    def test_unmatched_budget(self):
        (point,) = democracy_profile(X2, ONE, [2.5], budget=TINY, pool=(1, 2, 3, 4))
        self.assertAlmostEqual(point.upper, math.sqrt(2), places=12)
        self.assertAlmostEqual(point.lower, math.sqrt(3), places=12)

    def test_weighted_sandwich(self):
        for point in democracy_profile(EX72, W1, budget=TINY, pool=range(1, 7)):
            for witness in (point.upper_witness, point.lower_witness):
                if witness is None:
                    continue
                w = weight_measure(W1, witness.support)
                norm = norm_eval(EX72, witness)
                self.assertGreaterEqual(norm, max(1.0, math.sqrt(w)) * (1 - 1e-12))
                self.assertLessEqual(norm, max(1.0, 4 * math.sqrt(w)) * (1 + 1e-12))

    def test_single_set(self):
        (point,) = democracy_profile(EX72, W1, budget=TINY, pool=(5,))
        self.assertEqual(point.upper, point.lower)
        self.assertAlmostEqual(point.upper, norm_eval(EX72, SparseVector.indicator({5})), places=12)

    def test_unconditional_constants(self):
        for estimate in (
            superdemocracy_lb(X2, ONE, budget=TINY, pool=(1, 2, 3, 4)),
            democracy_lb(X2, ONE, budget=TINY, pool=(1, 2, 3, 4)),
        ):
            self.assertAlmostEqual(estimate.lower_bound, 1.0, places=9)
            self.assertTrue(is_self_certified(X2, estimate))

    def test_property_a(self):
        estimate = check_property_A(X2, ONE, budget=TINY.with_candidates(50))
        self.assertGreaterEqual(estimate.lower_bound, 1.0)
        self.assertLessEqual(estimate.lower_bound, 1 + 1e-9)
        witness = estimate.witness
        self.assertFalse(witness.a_set & witness.b_set)
        self.assertFalse(witness.x.support & (witness.a_set | witness.b_set))

    def test_property_a_finite_on_weighted_space(self):
        estimate = check_property_A(EX72, W1, budget=TINY.with_candidates(30))
        self.assertTrue(math.isfinite(estimate.lower_bound))
        self.assertTrue(is_self_certified(EX72, estimate))

    def test_bidemocracy_of_sup_norm(self):
        estimate = bidemocracy_lb(SupNorm(), 2, 4, budget=TINY)
        self.assertAlmostEqual(estimate.lower_bound, 1.0, delta=1e-4)
        self.assertLessEqual(estimate.lower_bound, 1 + 1e-9)

    def test_bidemocracy_domain(self):
        with self.assertRaises(DomainError):
            bidemocracy_lb(SupNorm(), 5, 4, budget=TINY)
        with self.assertRaises(DomainError):
            bidemocracy_lb(SupNorm(), 2, 65, budget=TINY)


class SerializerTests(SimpleTestCase):
    def test_estimate_record(self):
        estimate = estimate_parameter(EX72, "L_a", 2, budget=TINY)
        data = ParameterEstimateSerializer(estimate).data
        self.assertEqual(data["kind"], "L_a")
        self.assertEqual(data["seed"], TINY.seed)
        self.assertEqual(len(data["spec_hash"]), 64)
        self.assertEqual(float(data["value"]), estimate.lower_bound)
        self.assertEqual(data["witnesses"][0]["B"], sorted(estimate.witness.b_set))

    def test_loaded_record_still_certifies(self):
        estimate = estimate_parameter(EX72, "squeeze", 2, budget=TINY)
        serializer = ParameterEstimateSerializer(data=ParameterEstimateSerializer(estimate).data)
        serializer.is_valid(raise_exception=True)
        loaded = serializer.save()
        self.assertEqual(loaded.lower_bound, estimate.lower_bound)
        self.assertTrue(is_self_certified(EX72, loaded))
