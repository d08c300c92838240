"""Empirical tail estimator, DKW band, and coverage simulation."""

import math

import numpy as np
import pytest

from surprisal import (
    EcdfTail,
    Normal,
    ValidationError,
    band_coverage_check,
    dkw_epsilon,
    empirical_tail_prob,
)
from surprisal.empirical import sup_ecdf_distance


class TestEmpiricalTailProb:
    def test_tie_counting(self):
        tail = EcdfTail.from_values([1.0, 2.0, 2.0, 3.0])
        assert empirical_tail_prob(tail, 2.0) == 3 / 4

    def test_max_and_min(self):
        tail = EcdfTail.from_values([0.5, 1.5, 2.5, 3.5, 4.5])
        assert empirical_tail_prob(tail, 4.5) == 1 / 5
        assert empirical_tail_prob(tail, 0.5) == 1.0

    def test_outside_observed_range(self):
        tail = EcdfTail.from_values([1.0, 2.0, 3.0])
        assert empirical_tail_prob(tail, 3.1) == 0.0
        assert empirical_tail_prob(tail, 0.9) == 1.0

    def test_step_function_values(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=57)
        tail = EcdfTail.from_values(values)
        queries = np.sort(np.concatenate([values, rng.normal(size=200)]))
        probs = empirical_tail_prob(tail, queries)
        # non-increasing step function with values in {0, 1/n, ..., 1}
        assert np.all(np.diff(probs) <= 0)
        counts = probs * tail.n
        np.testing.assert_allclose(counts, np.round(counts), atol=1e-12)

    def test_rank_invariance_small(self):
        rng = np.random.default_rng(7)
        maps = (lambda s: 2.0 * s + 1.0, np.exp, lambda s: s ** 3)
        for _ in range(20):
            values = rng.normal(size=40)
            tail = EcdfTail.from_values(values)
            base = empirical_tail_prob(tail, values)
            for f in maps:
                transformed = EcdfTail.from_values(f(values))
                assert np.array_equal(base, empirical_tail_prob(transformed, f(values)))

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            EcdfTail.from_values([])


class TestDkwEpsilon:
    def test_formula_value(self):
        assert dkw_epsilon(1000, 0.05) == pytest.approx(math.sqrt(math.log(40.0) / 2000.0), abs=1e-15)
        assert dkw_epsilon(1000, 0.05) == pytest.approx(0.042947, abs=1e-6)

    def test_scaling_law(self):
        assert dkw_epsilon(2000, 0.05) == pytest.approx(dkw_epsilon(1000, 0.05) / math.sqrt(2.0), rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValidationError):
            dkw_epsilon(1000, 2.0)
        with pytest.raises(ValidationError):
            dkw_epsilon(0, 0.05)
        with pytest.raises(ValidationError):
            dkw_epsilon(1000, 0.0)


class TestSupEcdfDistance:
    def test_identical_samples(self):
        x = np.sort(np.random.default_rng(1).normal(size=100))
        assert sup_ecdf_distance(x, x) == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_samples(self):
        ref = np.linspace(0, 1, 1000)
        assert sup_ecdf_distance(ref + 10.0, ref) == pytest.approx(1.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        sample = rng.normal(size=37)
        ref = np.sort(rng.normal(size=211))
        fast = sup_ecdf_distance(sample, ref)
        grid = np.concatenate([sample, ref, [-10, 10]])
        brute = 0.0
        for s in grid:
            for shift in (0.0, -1e-9):
                fn = np.mean(sample <= s + shift)
                g = np.mean(ref <= s + shift)
                brute = max(brute, abs(fn - g))
        assert fast == pytest.approx(brute, abs=1e-6)


class TestBandCoverage:
    def test_normal_coverage(self):
        coverage = band_coverage_check(
            Normal(0, 1), n=500, alpha=0.05, reps=200, seed=11, oracle_draws=300_000
        )
        se = math.sqrt(0.05 * 0.95 / 200)
        assert coverage >= 0.95 - 3 * se

    def test_larger_n_keeps_coverage(self):
        coverage = band_coverage_check(
            Normal(0, 1), n=2000, alpha=0.05, reps=150, seed=12, oracle_draws=300_000
        )
        se = math.sqrt(0.05 * 0.95 / 150)
        assert coverage >= 0.95 - 3 * se

    def test_alpha_half(self):
        coverage = band_coverage_check(
            Normal(0, 1), n=500, alpha=0.5, reps=200, seed=13, oracle_draws=300_000
        )
        se = math.sqrt(0.5 * 0.5 / 200)
        assert coverage >= 0.5 - 3 * se

    def test_reps_floor(self):
        with pytest.raises(ValidationError):
            band_coverage_check(Normal(0, 1), n=100, alpha=0.05, reps=50, seed=1)
