import itertools
import math

import numpy as np
from django.test import SimpleTestCase, override_settings, tag
from hypothesis import given, settings, strategies as st

from spaces.exceptions import BudgetError, ContractError, DomainError
from spaces.models import CoefficientRule, SparseVector, Weight
from spaces.norms import (
    DirectSumInterleave,
    IntervalFunctional,
    MaxOf,
    NodeKind,
    PrefixFunctional,
    Reindexed,
    SchauderMajorant,
    SupNorm,
    WeightedLp,
    norm_eval,
)
from spaces.weights import weight_measure

from .approximation import (
    sigma_m,
    sigma_m_search,
    sigma_tilde_m,
    weighted_projection_error,
    weighted_sigma,
)
from .chebyshev import chebyshev_best, chebyshev_greedy_step
from .models import ChebMethod, GreedyQuery, SolverOptions
from .oracles import ORACLE_SPECS, chebyshev_oracle_suite
from .selection import (
    brute_force_greedy_sets,
    enumerate_greedy_sets,
    greedy_superset_s2,
    is_greedy_set,
    natural_greedy_set,
    project,
    thresholding_approximation,
)

ONE = Weight.constant(1)
W1 = Weight.formula_w1()
L2 = WeightedLp(2, ONE)
X2 = MaxOf((SupNorm(), L2))
EX72 = MaxOf((WeightedLp(2, W1), PrefixFunctional(), SupNorm()))

NODE_KINDS = [
    SupNorm(),
    L2,
    WeightedLp(1.5, W1),
    PrefixFunctional(),
    IntervalFunctional(((1, 2), (3, 6))),
    EX72,
    DirectSumInterleave(SupNorm(), PrefixFunctional()),
    SchauderMajorant(PrefixFunctional(CoefficientRule.power(0.5))),
    Reindexed(PrefixFunctional(), ((1, 4), (4, 1))),
]

coefficients = st.sampled_from([-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 3.0])
small_vectors = st.dictionaries(
    keys=st.integers(min_value=1, max_value=30), values=coefficients, min_size=1, max_size=10
).map(SparseVector.from_mapping)


def vec(*values):
    return SparseVector.from_dense(values)


def accept_all(spec, x, candidate):
    return True


class SelectionTests(SimpleTestCase):
    def test_project(self):
        x = vec(3, -5, 2)
        self.assertEqual(project(x, {2}).as_dict, {2: -5.0})
        self.assertEqual(project(x, set()), SparseVector.zero())
        self.assertEqual(project(vec(1, 2, 3), {1, 2, 3, 99}), vec(1, 2, 3))
        self.assertEqual(thresholding_approximation(x, {1, 3}).indices, (1, 3))

    def test_natural_greedy_set(self):
        self.assertEqual(natural_greedy_set(vec(3, -5, 2), 1), {2})
        self.assertEqual(natural_greedy_set(vec(1, 1), 1), {1})
        self.assertEqual(natural_greedy_set(vec(4, 3, 1), 2), {1, 2})

    def test_natural_greedy_set_padding(self):
        x = SparseVector.from_mapping({2: 1.0})
        self.assertEqual(natural_greedy_set(x, 3), {1, 2, 3})
        self.assertEqual(natural_greedy_set(SparseVector.zero(), 2), {1, 2})

    def test_is_greedy_set(self):
        x = vec(4, 3, 1)
        self.assertTrue(is_greedy_set(x, {2}, 0.5))
        self.assertFalse(is_greedy_set(x, {3}, 1))
        self.assertTrue(is_greedy_set(x, {1, 2, 3}, 1))

    def test_threshold_domain(self):
        with self.assertRaises(DomainError):
            is_greedy_set(vec(1), {1}, 0)
        with self.assertRaises(DomainError):
            GreedyQuery(vec(1), 1, 1.5)

    def test_enumerate_examples(self):
        self.assertEqual(enumerate_greedy_sets(vec(4, 3, 1), 1, 0.5), [{1}, {2}])
        self.assertEqual(enumerate_greedy_sets(vec(1, 1), 1, 1), [{1}, {2}])
        self.assertEqual(enumerate_greedy_sets(vec(4, 3, 1), 2, 1), [{1, 2}])
        self.assertEqual(enumerate_greedy_sets(vec(4, 3, 1), 0, 1), [frozenset()])

    def test_enumerate_with_padding(self):
        x = SparseVector.from_mapping({1: 2.0})
        self.assertEqual(enumerate_greedy_sets(x, 2), [{1, 2}, {1, 3}])
        self.assertEqual(brute_force_greedy_sets(x, 2), [{1, 2}, {1, 3}])

    def test_enumeration_budget(self):
        flat = SparseVector.indicator(range(1, 11))
        with self.assertRaises(BudgetError):
            enumerate_greedy_sets(flat, 5, 1, cap=3)
        with self.assertRaises(BudgetError):
            enumerate_greedy_sets(flat, 21, 1)

    @given(x=small_vectors, t=st.sampled_from([0.3, 0.5, 1.0]), data=st.data())
    @settings(max_examples=150, deadline=None)
    def test_enumeration_matches_brute_force(self, x, t, data):
        m = data.draw(st.integers(min_value=0, max_value=len(x)))
        fast = enumerate_greedy_sets(x, m, t)
        self.assertEqual(fast, brute_force_greedy_sets(x, m, t))
        for candidate in fast:
            self.assertLessEqual(candidate, x.support)
            self.assertTrue(all(x.coefficient(n) != 0 for n in candidate))

    @given(x=small_vectors, data=st.data())
    @settings(max_examples=100, deadline=None)
    def test_natural_set_is_greedy_and_monotone_in_t(self, x, data):
        m = data.draw(st.integers(min_value=0, max_value=len(x)))
        strict = enumerate_greedy_sets(x, m, 1.0)
        self.assertIn(natural_greedy_set(x, m), strict)
        loose = set(enumerate_greedy_sets(x, m, 0.5))
        looser = set(enumerate_greedy_sets(x, m, 0.3))
        self.assertLessEqual(set(strict), loose)
        self.assertLessEqual(loose, looser)

    def test_greedy_superset(self):
        x = vec(4, 3, 1)
        self.assertEqual(greedy_superset_s2(X2, x, {3}, 1, accept_all), {1, 2, 3})
        self.assertEqual(greedy_superset_s2(X2, x, {2}, 0.5, accept_all), {2})
        self.assertEqual(greedy_superset_s2(X2, x, natural_greedy_set(x, 1), 1, accept_all), {1})

    def test_greedy_superset_rejections(self):
        x = vec(4, 3, 1)
        with self.assertRaises(BudgetError):
            greedy_superset_s2(X2, x, {2}, 1, lambda spec, y, candidate: False)
        with self.assertRaises(ContractError):
            greedy_superset_s2(X2, x, {7}, 1, accept_all)

    def test_greedy_superset_respects_floor(self):
        x = vec(8, 4, 2, 1)
        found = greedy_superset_s2(X2, x, {2}, 0.5, lambda spec, y, candidate: len(candidate) >= 2)
        self.assertIn(2, found)
        self.assertGreaterEqual(min(abs(x.coefficient(n)) for n in found), 0.25 * 4)


class ChebyshevTests(SimpleTestCase):
    def test_sup_face_midpoint(self):
        result = chebyshev_best(SupNorm(), vec(5, 3, 1), {1})
        self.assertEqual(result.method, ChebMethod.GRID)
        self.assertAlmostEqual(result.error, 3.0, places=9)
        self.assertAlmostEqual(result.y.coefficient(1), 5.0, places=5)
        self.assertLessEqual(result.gap, 1e-6 * 3)
        self.assertTrue(result.converged)

    def test_support_covers_x(self):
        x = vec(5, 3, 1)
        result = chebyshev_best(EX72, x, {1, 2, 3, 9})
        self.assertEqual(result.error, 0.0)
        self.assertEqual(result.y, x)

    def test_l2_projection(self):
        result = chebyshev_best(L2, vec(5, 3, 1), {2})
        self.assertAlmostEqual(result.error, math.sqrt(26), places=9)
        self.assertAlmostEqual(result.y.coefficient(2), 3.0, places=5)
        self.assertLessEqual(result.y.support, {2})

    def test_empty_set(self):
        result = chebyshev_best(SupNorm(), vec(5, 3, 1), set())
        self.assertEqual(result.error, 5.0)

    def test_set_cap(self):
        with override_settings(GREEDYLAB_CHEB_MAX_SET=2):
            with self.assertRaises(BudgetError):
                chebyshev_best(SupNorm(), vec(5, 3, 1), {1, 2, 3})

    def test_prefix_beats_projection(self):
        # a vector on index 2 can cancel the first partial sum
        spec = PrefixFunctional(CoefficientRule.power(0))
        x = SparseVector.indicator({1, 3})
        result = chebyshev_best(spec, x, {2})
        self.assertLess(result.error, norm_eval(spec, x) - 0.4)
        self.assertAlmostEqual(result.error, 1.0, places=6)

    def test_subgradient_agrees_with_grid(self):
        rng = np.random.default_rng(11)
        subgradient = SolverOptions(method=ChebMethod.SUBGRADIENT, iterations=3000)
        for case in range(len(NODE_KINDS) * 2):
            spec = NODE_KINDS[case % len(NODE_KINDS)]
            x = SparseVector.from_dense(rng.normal(size=5).round(3).tolist())
            chosen = set(rng.choice(np.arange(1, 6), size=1 + case % 3, replace=False).tolist())
            oracle = chebyshev_best(spec, x, chosen)
            estimate = chebyshev_best(spec, x, chosen, subgradient)
            self.assertEqual(oracle.method, ChebMethod.GRID)
            self.assertLessEqual(estimate.error, oracle.error * (1 + 1e-4) + 1e-9, (case, spec))
            self.assertGreaterEqual(estimate.error, oracle.error - oracle.gap - 1e-9, (case, spec))

    @given(spec=st.sampled_from(NODE_KINDS), x=small_vectors, data=st.data())
    @settings(max_examples=30, deadline=None)
    def test_never_worse_than_projection(self, spec, x, data):
        chosen = data.draw(st.sets(st.integers(min_value=1, max_value=30), max_size=5))
        result = chebyshev_best(spec, x, chosen, SolverOptions(iterations=300))
        self.assertLessEqual(result.y.support, chosen)
        self.assertLessEqual(result.error, norm_eval(spec, x.without(chosen)) + 1e-12)
        self.assertAlmostEqual(result.error, norm_eval(spec, x - result.y), places=12)
        self.assertGreaterEqual(result.error, 0.0)

    def test_greedy_step(self):
        chosen, result = chebyshev_greedy_step(L2, vec(5, 3, 1), 2)
        self.assertEqual(chosen, {1, 2})
        self.assertAlmostEqual(result.error, 1.0, places=9)
        with self.assertRaises(ContractError):
            chebyshev_greedy_step(L2, vec(5, 3, 1), 1, greedy_set={3})


class InfimumTests(SimpleTestCase):
    def test_sigma_m_examples(self):
        x = vec(5, 3, 1)
        self.assertAlmostEqual(sigma_m(SupNorm(), x, 1, {1, 2, 3}), 3.0, places=9)
        self.assertEqual(sigma_m(EX72, x, 3, {1, 2, 3}), 0.0)
        self.assertAlmostEqual(sigma_m(L2, x, 2, {1, 2, 3}), 1.0, places=9)

    def test_sigma_m_reports_pool(self):
        found = sigma_m_search(SupNorm(), vec(5, 3, 1), 1, {1, 2, 3, 4})
        self.assertEqual(found.pool, (1, 2, 3, 4))
        self.assertEqual(found.support, {1})
        self.assertEqual(found.status, "optimal")

    def test_pool_checks(self):
        x = vec(5, 3, 1)
        with self.assertRaises(ContractError):
            sigma_m(SupNorm(), x, 1, {1, 2})
        with self.assertRaises(BudgetError):
            sigma_m(SupNorm(), x, 1, range(1, 26))

    def test_sigma_tilde_examples(self):
        x = vec(5, 3, 1)
        self.assertEqual(sigma_tilde_m(SupNorm(), x, 1), 3.0)
        self.assertEqual(sigma_tilde_m(EX72, x, 0), norm_eval(EX72, x))
        self.assertAlmostEqual(sigma_tilde_m(X2, SparseVector.indicator(range(1, 5)), 2), math.sqrt(2), places=14)

    def test_weighted_sigma_examples(self):
        x = vec(5, 3, 1)
        self.assertAlmostEqual(weighted_sigma(SupNorm(), x, ONE, 1.0, {1, 2, 3}), 3.0, places=9)
        self.assertEqual(weighted_sigma(EX72, x, W1, weight_measure(W1, {1, 2, 3}), {1, 2, 3}), 0.0)
        self.assertEqual(weighted_sigma(SupNorm(), x, W1, 0.5, {1, 2, 3}), 5.0)

    def test_weighted_projection_examples(self):
        x = vec(5, 3, 1)
        self.assertEqual(weighted_projection_error(SupNorm(), x, ONE, 1.0), 3.0)
        self.assertEqual(weighted_projection_error(EX72, x, W1, 0.1), norm_eval(EX72, x))

    def test_weighted_projection_exhaustive(self):
        x = SparseVector.indicator({1, 2, 3})
        budget = weight_measure(W1, {1, 2})
        expected = min(
            norm_eval(EX72, x.without(subset))
            for k in range(4)
            for subset in itertools.combinations((1, 2, 3), k)
            if weight_measure(W1, subset) <= budget
        )
        self.assertEqual(weighted_projection_error(EX72, x, W1, budget), expected)

    @given(x=small_vectors.filter(lambda v: len(v) <= 5))
    @settings(max_examples=15, deadline=None)
    def test_infimum_orderings(self, x):
        pool = sorted(x.support | {1, 2})
        options = SolverOptions(iterations=300)
        tol = 1e-6 * max(1.0, norm_eval(X2, x))
        previous = math.inf
        for m in range(0, 3):
            plain = sigma_m(X2, x, m, pool, options)
            self.assertLessEqual(plain, previous + tol)
            self.assertLessEqual(plain, sigma_tilde_m(X2, x, m) + tol)
            self.assertLessEqual(sigma_tilde_m(X2, x, m), norm_eval(X2, x))
            self.assertEqual(plain, weighted_sigma(X2, x, ONE, m, pool, options))
            self.assertLessEqual(sigma_m(X2, x, m, pool + [31], options), plain + tol)
            previous = plain


class OracleTests(SimpleTestCase):
    def test_every_node_kind_is_covered(self):
        self.assertEqual({spec.kind for spec in ORACLE_SPECS}, set(NodeKind))

    def test_small_run_agrees_with_grid(self):
        result = chebyshev_oracle_suite(count=27, dimension=5, large_count=18, large_iterations=20, seed=4)
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, 27 + 18)

    def test_projection_checks_only(self):
        result = chebyshev_oracle_suite(count=0, dimension=3, large_count=30, large_iterations=5)
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, 30)
        self.assertEqual(result.worst_ratio, 0.0)

    @tag("slow")
    def test_default_sizes(self):
        result = chebyshev_oracle_suite()
        self.assertTrue(result.holds, result.violations)
        self.assertEqual(result.checked, 500 + 10_000)
