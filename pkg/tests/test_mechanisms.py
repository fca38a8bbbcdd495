import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropydp.core import RandomSource, derive_age, value_counts
from entropydp.errors import EmptyQueryError, ParameterError
from entropydp.mechanisms import (
    UtilityScores,
    clipped_laplace_mean,
    derive_abortion_flag,
    exponential_probabilities,
    exponential_select,
    gaussian_mean,
    gaussian_sigma,
    histogram_release,
    keep_probability,
    laplace_counts,
    laplace_mean,
    randomized_response,
    randomized_response_bits,
    rr_debiased_mean,
    sample_gaussian,
    sample_laplace,
    smooth_sensitivity,
    smooth_sensitivity_mean,
    sparse_vector,
)

SIGMA_1_1E5 = 4.844805262605389  # sqrt(2 ln(1.25e5)) at eps=1, sensitivity 1


class TestSamplers:
    def test_laplace_mean_abs_and_median(self):
        draws = RandomSource(11).laplace(1.0, size=100_000)
        assert np.mean(np.abs(draws)) == pytest.approx(1.0, abs=0.03)
        assert np.median(draws) == pytest.approx(0.0, abs=0.02)

    def test_sample_laplace_deterministic(self):
        assert sample_laplace(RandomSource(5), 1.0) == sample_laplace(RandomSource(5), 1.0)

    def test_gaussian_moments(self):
        draws = RandomSource(12).normal(1.0, size=100_000)
        assert np.std(draws) == pytest.approx(1.0, abs=0.02)
        assert np.mean(draws) == pytest.approx(0.0, abs=0.02)

    def test_sample_gaussian_deterministic(self):
        assert sample_gaussian(RandomSource(5), 2.0) == sample_gaussian(RandomSource(5), 2.0)

    @pytest.mark.parametrize("fn", [sample_laplace, sample_gaussian])
    def test_nonpositive_scale(self, fn):
        with pytest.raises(ParameterError):
            fn(RandomSource(0), 0.0)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.1, 50.0), st.integers(0, 2**32))
    def test_laplace_within_three_sigma(self, scale, seed):
        # mean of 4000 draws: sd = scale * sqrt(2) / sqrt(4000)
        src = RandomSource(seed)
        draws = np.array([sample_laplace(src, scale) for _ in range(4000)])
        assert abs(draws.mean()) < 3 * scale * math.sqrt(2 / 4000) * 1.5

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.1, 50.0), st.integers(0, 2**32))
    def test_gaussian_within_three_sigma(self, sigma, seed):
        src = RandomSource(seed)
        draws = np.array([sample_gaussian(src, sigma) for _ in range(4000)])
        assert abs(draws.mean()) < 3 * sigma / math.sqrt(4000) * 1.5


class TestLaplaceCounts:
    def test_mad_band_at_large_n(self, large_dataset):
        counts = value_counts(large_dataset, "DiagnosisCode")
        mads = []
        for seed in range(200):
            noisy = laplace_counts(counts, 1.0, 1.0, RandomSource(seed))
            mads.append(np.mean([abs(noisy[k] - counts[k]) for k in counts]))
        assert np.mean(mads) == pytest.approx(1.0, abs=0.05)

    def test_vanishing_noise(self):
        noisy = laplace_counts({"a": 3, "b": 7}, 1.0, 1e9, RandomSource(0))
        assert noisy == {"a": pytest.approx(3, abs=1e-6), "b": pytest.approx(7, abs=1e-6)}

    def test_unbiased(self):
        src = RandomSource(2)
        vals = [laplace_counts({"A": 10}, 1.0, 1.0, src)["A"] for _ in range(10_000)]
        assert np.mean(vals) == pytest.approx(10.0, abs=0.05)

    def test_may_go_negative(self):
        noisy = laplace_counts({str(i): 0 for i in range(200)}, 1.0, 1.0, RandomSource(0))
        assert min(noisy.values()) < 0

    def test_errors(self):
        with pytest.raises(EmptyQueryError):
            laplace_counts({}, 1.0, 1.0, 0)
        with pytest.raises(ParameterError):
            laplace_counts({"a": 1}, 1.0, 0.0, 0)
        with pytest.raises(ParameterError):
            laplace_counts({"a": 1}, 0.0, 1.0, 0)


class TestHistogram:
    def test_non_negative(self):
        src = RandomSource(3)
        for _ in range(500):
            assert histogram_release({"zero": 0, "one": 1}, 1.0, 0.0, src)["zero"] >= 0

    @settings(max_examples=50)
    @given(st.dictionaries(st.text(min_size=1, max_size=4), st.integers(0, 50), min_size=1, max_size=20),
           st.floats(0.05, 10.0), st.integers(0, 2**32))
    def test_property_non_negative(self, counts, eps, seed):
        out = histogram_release(counts, eps, 0.0, RandomSource(seed))
        assert set(out) == set(counts)
        assert all(v >= 0 for v in out.values())

    def test_vanishing_noise(self):
        out = histogram_release({"a": 5, "b": 0}, 1e9, 0.0, RandomSource(0))
        assert out["a"] == pytest.approx(5, abs=1e-6) and out["b"] == pytest.approx(0, abs=1e-6)

    def test_mad_band_at_large_n(self, large_dataset):
        counts = value_counts(large_dataset, "TreatmentType")
        noisy = histogram_release(counts, 1.0, 0.0, RandomSource(4))
        assert 0.6 <= np.mean([abs(noisy[k] - counts[k]) for k in counts]) <= 1.4


class TestGaussian:
    def test_sigma(self):
        assert gaussian_sigma(1.0, 1e-5, 1.0) == pytest.approx(SIGMA_1_1E5, abs=1e-5)

    def test_sigma_rejects_bad_delta(self):
        with pytest.raises(ParameterError):
            gaussian_sigma(1.0, 0.0)

    def test_vanishing_noise(self):
        assert gaussian_mean([54.4, 54.4], 1.0, 1e9, 1e-5, RandomSource(0)) == pytest.approx(54.4, abs=1e-6)

    def test_typical_release(self):
        errs = [abs(gaussian_mean([54.4], 1.0, 1.0, 1e-5, RandomSource(s)) - 54.4) for s in range(2000)]
        assert np.mean(errs) == pytest.approx(SIGMA_1_1E5 * math.sqrt(2 / math.pi), rel=0.06)
        assert np.mean(np.array(errs) < 6) > 0.7

    def test_empty(self):
        with pytest.raises(EmptyQueryError):
            gaussian_mean([], 1.0, 1.0, 1e-5, 0)


class TestExponential:
    def test_equal_scores(self):
        assert exponential_probabilities({"a": 3, "b": 3}, 1.0) == {"a": 0.5, "b": 0.5}

    def test_hand_example(self):
        probs = exponential_probabilities({"a": 10, "b": 5}, 1.0)
        assert probs["a"] == pytest.approx(0.56217, abs=1e-5)
        assert probs["b"] == pytest.approx(0.43783, abs=1e-5)

    def test_textbook_sensitivity(self):
        probs = exponential_probabilities({"a": 1, "b": 0}, 2.0, sensitivity=1.0)
        assert probs["a"] == pytest.approx(math.e / (math.e + 1))

    def test_near_uniform_treatments(self, large_dataset):
        probs = exponential_probabilities(value_counts(large_dataset, "TreatmentType"), 1.0)
        assert len(probs) == 26
        assert all(0.036 <= p <= 0.041 for p in probs.values())

    def test_infinite_epsilon_is_argmax(self):
        assert exponential_probabilities({"a": 3, "b": 1, "c": 3}, math.inf) == {"a": 0.5, "b": 0.0, "c": 0.5}

    def test_select_deterministic(self):
        a = exponential_select({"a": 10, "b": 5}, 1.0, RandomSource(9))
        b = exponential_select({"a": 10, "b": 5}, 1.0, RandomSource(9))
        assert a == b and a[0] in ("a", "b")

    def test_select_frequency(self):
        src = RandomSource(1)
        picks = [exponential_select({"a": 10, "b": 5}, 1.0, src)[0] for _ in range(5000)]
        assert picks.count("a") / 5000 == pytest.approx(0.56217, abs=0.02)

    def test_non_positive_max_score(self):
        with pytest.raises(ParameterError):
            exponential_probabilities({"a": 0, "b": 0}, 1.0)

    def test_utility_scores_validation(self):
        with pytest.raises(ParameterError):
            UtilityScores((), ())
        with pytest.raises(ParameterError):
            UtilityScores(("a",), (1.0, 2.0))

    @given(st.lists(st.floats(0.01, 1e4), min_size=1, max_size=30), st.floats(0.01, 20.0), st.floats(0.01, 100.0))
    def test_normalised_and_scale_invariant(self, scores, eps, factor):
        base = {str(i): s for i, s in enumerate(scores)}
        p = exponential_probabilities(base, eps)
        q = exponential_probabilities({k: v * factor for k, v in base.items()}, eps)
        assert math.fsum(p.values()) == pytest.approx(1.0, abs=1e-9)
        for k in base:
            assert p[k] == pytest.approx(q[k], rel=1e-6, abs=1e-12)


class TestRandomizedResponse:
    def test_keep_probability(self):
        assert keep_probability(1.0) == pytest.approx(math.e / (1 + math.e))
        assert keep_probability(0.0) == 0.5
        assert keep_probability(math.inf) == 1.0

    def test_flip_fraction(self):
        bits = np.zeros(131_000, dtype=int)
        out = randomized_response_bits(bits, 1.0, RandomSource(0))
        assert out.mean() == pytest.approx(1 / (1 + math.e), abs=0.01)

    def test_infinite_epsilon_identity(self):
        bits = np.array([0, 1, 1, 0, 1])
        assert np.array_equal(randomized_response_bits(bits, math.inf, RandomSource(0)), bits)

    def test_zero_epsilon_coin_flip(self):
        out = randomized_response_bits(np.ones(100_000, dtype=int), 0.0, RandomSource(1))
        assert 1 - out.mean() == pytest.approx(0.5, abs=0.01)

    def test_single_bit(self):
        assert randomized_response(1, math.inf, 0) == 1
        with pytest.raises(ParameterError):
            randomized_response(2, 1.0, 0)

    def test_debiased_mean(self):
        bits = (RandomSource(2).uniform(200_000) < 0.3).astype(int)
        out = randomized_response_bits(bits, 1.0, RandomSource(3))
        assert rr_debiased_mean(out, 1.0) == pytest.approx(0.3, abs=0.01)
        with pytest.raises(ParameterError):
            rr_debiased_mean(out, 0.0)

    def test_abortion_flag(self, sample_csv, large_dataset):
        from entropydp.core import load_dataset

        d = load_dataset(sample_csv)
        assert derive_abortion_flag(d).tolist() == [0] * 8
        assert derive_abortion_flag(d, "Z71.3")[0] == 1
        assert derive_abortion_flag(d, "F32.1")[0] == 0
        assert derive_abortion_flag(large_dataset).mean() == pytest.approx(1 / 21, abs=0.005)


class TestSparseVector:
    def test_loop_bound(self, large_dataset):
        res = sparse_vector(derive_age(large_dataset), 65.0, 1.0, 10, RandomSource(0))
        assert res.budget_used == 10 and len(res.answers) == 10

    def test_short_input(self):
        assert sparse_vector([1, 2, 3, 4, 5], 65.0, 1.0, 10, RandomSource(0)).budget_used == 5

    def test_far_above_threshold(self):
        src = RandomSource(4)
        hits = sum(sparse_vector([1065.0], 65.0, 1.0, 10, src).answers[0] for _ in range(10_000))
        assert hits / 10_000 > 0.999

    @given(st.lists(st.floats(0, 120), min_size=1, max_size=50), st.integers(1, 20), st.integers(0, 2**32))
    def test_budget_bound(self, values, k, seed):
        res = sparse_vector(values, 65.0, 1.0, k, RandomSource(seed))
        assert res.budget_used == len(res.answers) == min(k, len(values))

    def test_errors(self):
        with pytest.raises(EmptyQueryError):
            sparse_vector([], 65.0, 1.0, 10, 0)
        with pytest.raises(ParameterError):
            sparse_vector([1.0], 65.0, 1.0, 0, 0)


class TestMeans:
    def test_laplace_mean_large_n(self, large_dataset):
        ages = derive_age(large_dataset)
        errs = [abs(laplace_mean(ages, 0, 100, 1.0, RandomSource(s)) - ages.mean()) for s in range(300)]
        assert np.mean(np.array(errs) < 0.01) > 0.99

    def test_laplace_mean_single_value(self):
        errs = [abs(laplace_mean([50.0], 0, 100, 1.0, RandomSource(s)) - 50.0) for s in range(4000)]
        assert np.mean(errs) == pytest.approx(100.0, rel=0.06)

    def test_laplace_mean_vanishing_noise(self):
        # scale is (100 / n) / eps, so the 1e-9 bound needs a realistic n
        values = np.tile([20.0, 30.0], 65_500)
        assert laplace_mean(values, 0, 100, 1e9, RandomSource(0)) == pytest.approx(25.0, abs=1e-9)

    def test_clipped_identity_inside_bounds(self):
        assert clipped_laplace_mean([20.0, 40.0], 18, 90, math.inf, 0) == 30.0

    def test_clipped_outlier(self):
        assert clipped_laplace_mean([1000.0, 30.0], 18, 90, math.inf, 0) == 60.0

    def test_smooth_sensitivity_hand_example(self):
        local, smooth = smooth_sensitivity([18.0, 90.0], 18, 90, 1.0)
        assert local == 36.0
        assert smooth == pytest.approx(36 * math.exp(-0.1))
        assert smooth == pytest.approx(32.5741, abs=1e-4)

    def test_smooth_identical_values(self):
        assert smooth_sensitivity_mean([40.0] * 10, 18, 90, 1.0, RandomSource(0)) == 40.0

    def test_smooth_large_n(self, large_dataset):
        ages = derive_age(large_dataset)
        clipped = np.clip(ages, 18, 90).mean()
        errs = [abs(smooth_sensitivity_mean(ages, 18, 90, 1.0, RandomSource(s)) - clipped) for s in range(300)]
        assert max(errs) < 1e-4

    def test_smooth_needs_two_values(self):
        with pytest.raises(ParameterError):
            smooth_sensitivity([50.0])

    def test_bounds_validated(self):
        with pytest.raises(ParameterError):
            laplace_mean([1.0], 10, 10, 1.0, 0)
        with pytest.raises(ParameterError):
            clipped_laplace_mean([1.0], 90, 18, 1.0, 0)
