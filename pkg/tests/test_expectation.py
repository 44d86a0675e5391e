import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mitigation_sil.errors import (
    DensityNotNormalizedError,
    InvalidModelError,
    PmfNotNormalizedError,
    QuadratureNonConvergenceError,
    SamplingUnsupportedError,
)
from mitigation_sil.expectation import (
    BetaDensity,
    Binary,
    CounterStream,
    Empirical,
    MCEstimate,
    ModularBinomial,
    PointMass,
    Proportional,
    Series,
    adaptive_quadrature,
    expect_continuous,
    expect_discrete,
    expect_failure,
    mc_expected_consequence,
    retarget,
    sample_failure,
)

from helpers import make_scenario


class TestExpectDiscrete:
    def test_binary_pmf_gives_probability(self):
        assert expect_discrete([(0, 0.9), (1, 0.1)]) == pytest.approx(0.1, abs=1e-15)

    def test_point_mass(self):
        assert expect_discrete([(0.5, 1.0)]) == 0.5

    def test_three_atoms(self):
        # 0 * 0.25 + 0.4 * 0.5 + 1 * 0.25
        assert expect_discrete([(0, 0.25), (0.4, 0.5), (1, 0.25)]) == pytest.approx(0.45, abs=1e-15)

    def test_unnormalised(self):
        with pytest.raises(PmfNotNormalizedError):
            expect_discrete([(0, 0.5), (1, 0.6)])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 10_000), st.integers(0, 2**32 - 1))
    def test_matches_brute_force_sum(self, n, seed):
        rng = np.random.default_rng(seed)
        values = rng.random(n)
        probs = rng.random(n)
        probs /= probs.sum()
        brute = 0.0
        for v, p in zip(values.tolist(), probs.tolist()):
            brute += v * p
        assert expect_discrete(list(zip(values, probs))) == pytest.approx(brute, abs=1e-12)


class TestQuadrature:
    def test_kronrod_rule_is_exact_to_degree_22(self):
        for deg in range(23):
            value, _ = adaptive_quadrature(lambda x, d=deg: x**d, 0.0, 1.0, tol=1.0)
            assert value == pytest.approx(1.0 / (deg + 1), rel=1e-13)

    def test_uniform_density_mean(self):
        assert expect_continuous(lambda x: np.ones_like(x)) == pytest.approx(0.5, abs=1e-12)

    def test_beta_2_8(self):
        assert expect_continuous(BetaDensity(2, 8).pdf) == pytest.approx(0.2, abs=1e-10)

    def test_beta_1_1_is_uniform(self):
        assert expect_continuous(BetaDensity(1, 1).pdf) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("a", [0.5, 1, 2, 8])
    @pytest.mark.parametrize("b", [0.5, 1, 2, 8])
    def test_beta_family_against_closed_form(self, a, b):
        assert abs(expect_continuous(BetaDensity(a, b).pdf) - a / (a + b)) <= 1e-8

    def test_density_not_normalised(self):
        with pytest.raises(DensityNotNormalizedError):
            expect_continuous(lambda x: 2.0 * np.ones_like(x))

    def test_interval_cap_raises(self):
        with pytest.raises(QuadratureNonConvergenceError):
            adaptive_quadrature(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, tol=1e-14, max_intervals=10)

    def test_non_integrable_raises(self):
        with pytest.raises(QuadratureNonConvergenceError):
            expect_continuous(lambda x: 1.0 / x)


class TestExpectFailure:
    def test_binary_is_pfd(self):
        assert expect_failure(Binary(1.0e-4)) == 1.0e-4

    def test_modular_binomial_is_module_pfd(self):
        assert expect_failure(ModularBinomial(4.0e-3)) == 4.0e-3
        assert expect_failure(ModularBinomial(4.0e-3, 7)) == 4.0e-3

    def test_proportional(self):
        assert expect_failure(Proportional(0.034, "response_time")) == 0.034

    def test_empirical(self):
        assert expect_failure(Empirical(((0, 0.25), (0.4, 0.5), (1, 0.25)))) == pytest.approx(0.45)

    def test_series_fan_and_damper(self):
        fe = Series((("fan", Binary(2e-3)), ("damper", ModularBinomial(4e-3, 10))))
        assert expect_failure(fe) == pytest.approx(1 - 0.998 * 0.996, abs=1e-15)

    def test_invalid_model(self):
        with pytest.raises(InvalidModelError):
            expect_failure(Binary(1.5))
        with pytest.raises(InvalidModelError):
            expect_failure(Empirical(((0, 0.5),)))
        with pytest.raises(InvalidModelError):
            expect_failure(Proportional(0.3, params={"distribution": "beta", "alpha": 1, "beta": 1}))

    @given(st.floats(0, 1))
    def test_binary_identity(self, p):
        assert expect_failure(Binary(p)) == p

    @settings(deadline=None, max_examples=40)
    @given(st.floats(0.3, 20), st.floats(0.3, 20))
    def test_beta_expectation_in_unit_interval(self, a, b):
        assert 0.0 <= expect_failure(BetaDensity(a, b)) <= 1.0


class TestCounterStream:
    def test_offsets_match_a_single_long_draw(self):
        s = CounterStream(12345, (3,))
        full = s.uniforms(0, 50)
        for start in (0, 1, 3, 4, 7, 21):
            assert np.array_equal(s.uniforms(start, 10), full[start:start + 10])

    def test_children_are_distinct(self):
        root = CounterStream(1)
        assert not np.array_equal(root.child(0).uniforms(0, 8), root.child(1).uniforms(0, 8))

    def test_seed_range(self):
        CounterStream(2**64 - 1)
        with pytest.raises(ValueError):
            CounterStream(2**64)
        with pytest.raises(ValueError):
            CounterStream(-1)


class TestSampling:
    def test_point_mass_is_deterministic(self):
        assert all(sample_failure(PointMass(0.3), seed) == 0.3 for seed in range(5))

    def test_zero_pfd_never_fails(self):
        assert not sample_failure(Binary(0.0), 9, size=10_000).any()

    def test_binary_law_of_large_numbers(self):
        draws = sample_failure(Binary(0.1), 2024, size=1_000_000)
        assert set(np.unique(draws)) <= {0.0, 1.0}
        assert abs(draws.mean() - 0.1) <= 1e-3

    def test_unspecified_module_count(self):
        with pytest.raises(SamplingUnsupportedError):
            sample_failure(ModularBinomial(0.1), 0)

    def test_modular_binomial_draws_are_fractions(self):
        draws = sample_failure(ModularBinomial(0.3, 4), 5, size=1000)
        assert set(np.unique(draws)) <= {0.0, 0.25, 0.5, 0.75, 1.0}

    def test_empirical_draws_come_from_support(self):
        model = Empirical(((0.0, 0.2), (0.4, 0.5), (1.0, 0.3)))
        draws = sample_failure(model, 5, size=10_000)
        assert set(np.unique(draws)) <= {0.0, 0.4, 1.0}

    @pytest.mark.parametrize("model", [
        Binary(0.2),
        ModularBinomial(0.15, 6),
        BetaDensity(2.0, 5.0),
        BetaDensity(0.5, 0.5),
        Empirical(((0.0, 0.5), (0.3, 0.25), (0.9, 0.25))),
        Proportional(0.25, params={"distribution": "beta", "alpha": 1.0, "beta": 3.0}),
        Series((("a", Binary(0.1)), ("b", BetaDensity(1.0, 9.0)))),
    ], ids=lambda m: m.kind)
    @pytest.mark.parametrize("seed", [11, 22, 33])
    def test_empirical_mean_converges(self, model, seed):
        n = 200_000
        draws = sample_failure(model, seed, size=n)
        assert np.all((draws >= 0) & (draws <= 1))
        assert abs(draws.mean() - expect_failure(model)) <= 4 * draws.std(ddof=1) / math.sqrt(n)


class TestRetarget:
    def test_binary(self):
        assert retarget(Binary(0.1), 0.3) == Binary(0.3)

    def test_beta_keeps_concentration(self):
        m = retarget(BetaDensity(2, 8), 0.5)
        assert (m.alpha, m.beta) == (5.0, 5.0)

    def test_series_is_rejected(self):
        with pytest.raises(InvalidModelError):
            retarget(Series((("a", Binary(0.1)),)), 0.2)


class TestMonteCarlo:
    def test_single_binary_matches_analytic(self):
        s = make_scenario([Binary(0.1)], [[1]], [1.0])
        est = mc_expected_consequence(s, 1_000_000, 42)
        assert isinstance(est, MCEstimate)
        assert abs(est.mean - 0.1) <= 3 * est.stderr

    def test_point_masses_have_no_spread(self):
        s = make_scenario([PointMass(0.0)] * 3, [[1, 0], [0, 1], [1, 1]], [0.5, 0.5], c_min=0.2, c_max=3.0)
        est = mc_expected_consequence(s, 5000, 1)
        assert est.mean == pytest.approx(0.2, abs=1e-14)
        assert est.stderr == 0.0

    def test_bit_reproducible(self, gas):
        a = mc_expected_consequence(gas, 20_000, 99)
        b = mc_expected_consequence(gas, 20_000, 99)
        assert a == b

    def test_chunking_and_threads_do_not_change_the_result(self, tunnel):
        base = mc_expected_consequence(tunnel, 30_001, 5)
        assert mc_expected_consequence(tunnel, 30_001, 5, chunk_size=777) == base
        assert mc_expected_consequence(tunnel, 30_001, 5, chunk_size=4096, workers=4) == base

    def test_sample_count_floor(self, gas):
        with pytest.raises(ValueError):
            mc_expected_consequence(gas, 999, 0)
