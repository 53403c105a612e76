"""Enumeration and Monte Carlo oracles: exactness, determinism, consistency."""

import math
from fractions import Fraction as F

import pytest

from stratexp.errors import ComputationError, EnumerationLimitError
from stratexp.estimators import t1s, t2s, t3s, t4s
from stratexp.moments import v_table
from stratexp.verify import (
    ExactDesignDistribution,
    draw_sample,
    exact_bias_mse,
    exact_expectation,
    monte_carlo,
)

from helpers import make_population


class TestEnumeration:
    def test_stratified_mean_is_unbiased(self, synthetic):
        got = exact_expectation(synthetic, lambda s: s.ybar)
        assert got == pytest.approx(synthetic.grand_y_mean, rel=1e-13)

    def test_textbook_variance_identity(self):
        """Single stratum N=4, n=2, y={1,2,3,4}: Var(ybar) = 0.25 * 5/3 = 5/12."""
        pop = make_population(("A", [1, 1, 1, 1], [1, 2, 3, 4], 2))
        var = exact_expectation(pop, lambda s: (s.ybar - 2.5) ** 2)
        assert var == pytest.approx(5.0 / 12.0, rel=1e-13)

    def test_third_moment_matches_k1_formula(self, desk, desk_v):
        """E[e1^3] equals the table's V03 (here zero: N = 2n kills k1) and,
        on an asymmetric design, the k1-weighted third central moment."""
        pop = make_population(("A", [1, 2, 4, 8, 16, 32, 64], [1, 1, 1, 1, 1, 1, 1], 2))
        xbar = pop.grand_x_mean
        got = exact_expectation(pop, lambda s: ((s.xbar - xbar) / xbar) ** 3)
        cap, n = 7, 2
        k1 = ((cap - n) * (cap - 2 * n)) / (n * n * (cap - 1) * (cap - 2))
        mu3 = math.fsum((x - xbar) ** 3 for x in pop.strata[0].xs) / cap
        assert got == pytest.approx(k1 * mu3 / xbar**3, rel=1e-12)

    def test_visits_every_sample_once(self, synthetic):
        dist = ExactDesignDistribution(synthetic)
        assert dist.stratum_space_sizes == (20, 35)
        assert dist.size == 700
        seen = {tuple(map(tuple, s.index_sets)) for s in dist}
        assert len(seen) == 700

    def test_space_limit_error_names_size(self, synthetic):
        with pytest.raises(EnumerationLimitError, match="700"):
            ExactDesignDistribution(synthetic, limit=699)
        with pytest.raises(EnumerationLimitError):
            exact_expectation(synthetic, lambda s: 1.0, limit=10)


class TestExactBiasMse:
    def test_zero_exponent_unbiased(self, synthetic, synthetic_v):
        bias_e, mse_e = exact_bias_mse(synthetic, t3s(0.0))
        assert bias_e == pytest.approx(0.0, abs=1e-13)
        expected = synthetic.grand_y_mean ** 2 * synthetic_v[(2, 0)]
        assert mse_e == pytest.approx(expected, rel=1e-11)

    def test_constant_x_neutralizes_every_estimator(self):
        pop = make_population(
            ("A", [5, 5, 5, 5, 5], [1, 4, 2, 8, 5], 2),
            ("B", [7, 7, 7, 7], [3, 1, 4, 1], 2),
        )
        v = v_table(pop)
        expected = pop.grand_y_mean ** 2 * v[(2, 0)]
        for spec in (t1s(), t2s(), t3s(2.5), t4s(0.3)):
            bias_e, mse_e = exact_bias_mse(pop, spec)
            assert bias_e == pytest.approx(0.0, abs=1e-13)
            assert mse_e == pytest.approx(expected, rel=1e-11)

    def test_degenerate_sample_aborts_with_description(self):
        """x = {-3, 1, 2, 4} has mean 1; the sample {-3, 1} hits the pole."""
        pop = make_population(("A", [-3, 1, 2, 4], [1, 2, 3, 4], 2))
        with pytest.raises(ComputationError, match=r"index sets"):
            exact_bias_mse(pop, t1s())


class TestMonteCarlo:
    def test_same_seed_bit_identical(self, synthetic):
        a = monte_carlo(synthetic, t1s(), replicates=2000, seed=11)
        b = monte_carlo(synthetic, t1s(), replicates=2000, seed=11)
        assert a == b

    def test_different_seed_differs(self, synthetic):
        a = monte_carlo(synthetic, t1s(), replicates=2000, seed=11)
        b = monte_carlo(synthetic, t1s(), replicates=2000, seed=12)
        assert a.mse.mean != b.mse.mean

    def test_worker_count_does_not_change_bits(self, synthetic):
        one = monte_carlo(synthetic, t2s(), replicates=3000, seed=5, workers=1)
        three = monte_carlo(synthetic, t2s(), replicates=3000, seed=5, workers=3)
        assert one == three

    def test_reduction_identity_shares_streams(self, synthetic):
        """The tunable estimator at unit exponent reproduces the ratio type
        replicate for replicate."""
        a = monte_carlo(synthetic, t1s(), replicates=1500, seed=3)
        b = monte_carlo(synthetic, t3s(1.0), replicates=1500, seed=3)
        assert a.bias == b.bias
        assert a.mse == b.mse

    def test_estimates_consistent_with_enumeration(self, synthetic):
        bias_e, mse_e = exact_bias_mse(synthetic, t1s())
        mc = monte_carlo(synthetic, t1s(), replicates=30000, seed=2024)
        assert abs(mc.bias.mean - bias_e) <= 3.5 * mc.bias.standard_error
        assert abs(mc.mse.mean - mse_e) <= 3.5 * mc.mse.standard_error
        assert mc.skipped == 0

    def test_standard_error_definition(self, synthetic):
        mc = monte_carlo(synthetic, t1s(), replicates=500, seed=1)
        assert mc.bias.standard_error == pytest.approx(
            math.sqrt(mc.bias.variance / mc.bias.replicates), rel=1e-15
        )

    def test_skipped_replicates_counted(self):
        """Samples hitting the exponent pole are skipped, not fatal."""
        pop = make_population(("A", [-3, 1, 2, 4], [1, 2, 3, 4], 2))
        mc = monte_carlo(pop, t1s(), replicates=600, seed=9)
        assert mc.skipped > 0
        assert mc.bias.replicates == 600 - mc.skipped
        assert math.isfinite(mc.bias.mean)

    def test_sample_draw_is_valid_srswor(self, synthetic):
        for rep in range(50):
            s = draw_sample(synthetic, seed=77, rep=rep)
            for idx, stratum in zip(s.index_sets, synthetic.strata):
                assert len(set(idx)) == stratum.small_n
                assert all(0 <= i < stratum.capital_n for i in idx)

    def test_draws_cover_the_sample_space_uniformly_enough(self):
        """Cheap sanity check on the shuffle: each unit's inclusion
        frequency is near n/N."""
        pop = make_population(("A", [1, 2, 3, 4, 5], [1, 2, 3, 4, 5], 2))
        counts = [0] * 5
        reps = 8000
        for rep in range(reps):
            s = draw_sample(pop, seed=123, rep=rep)
            for i in s.index_sets[0]:
                counts[i] += 1
        for c in counts:
            assert c / reps == pytest.approx(0.4, abs=0.02)

    def test_replicate_floor(self, synthetic):
        with pytest.raises(ValueError):
            monte_carlo(synthetic, t1s(), replicates=1, seed=0)

    def test_variance_halves_when_replicates_double(self, synthetic):
        """Across 20 fixed seeds, the spread of the MC-MSE estimate shrinks
        by about half when replicates double.  The same seeds are used for
        both sizes, so the longer runs extend the shorter ones and the
        variance ratio concentrates near 2."""
        small = [
            monte_carlo(synthetic, t1s(), replicates=400, seed=s).mse.mean
            for s in range(20)
        ]
        large = [
            monte_carlo(synthetic, t1s(), replicates=800, seed=s).mse.mean
            for s in range(20)
        ]

        def spread(values):
            m = math.fsum(values) / len(values)
            return math.fsum((v - m) ** 2 for v in values) / (len(values) - 1)

        ratio = spread(small) / spread(large)
        assert 1.2 < ratio < 3.5
