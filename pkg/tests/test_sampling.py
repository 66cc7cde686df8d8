import numpy as np
import pytest
from scipy import stats

from memwalk import (
    ConstantCoupling,
    CouplingOutOfRange,
    GaussianWellCoupling,
    InsufficientScales,
    autocorrelation,
    estimate_autocorr,
    estimate_hurst,
    evolve,
    moments,
    sample_ensemble,
    sample_path,
    splitmix64,
    substream_key,
    terminal_counts,
)


class TestRngPlumbing:
    def test_splitmix64_reference_values(self):
        # splitmix64(0) is the first output of the canonical stream seeded
        # with 0; the others are frozen from the documented mixing constants
        assert splitmix64(0) == 0xE220A8397B1DCDAF
        assert splitmix64(1) == 0x910A2DEC89025CC1
        assert splitmix64(2) == 0x975835DE1C9756CE

    def test_splitmix64_mask(self):
        assert splitmix64(2**64 - 1) < 2**64
        assert splitmix64(2**64 + 5) == splitmix64(5)

    def test_substream_keys_distinct(self):
        keys = {substream_key(42, j) for j in range(64)}
        assert len(keys) == 64
        w0, w1 = substream_key(42, 3)
        assert w0 == 42 ^ splitmix64(3)
        assert w1 == splitmix64(w0)


class TestSamplePath:
    def test_structure(self):
        t = sample_path(50, ConstantCoupling(0.004), 7)
        assert len(t.increments) == 50
        assert set(np.unique(t.increments)) <= {-1, 1}
        assert t.displacements[0] == 0
        assert np.array_equal(np.diff(t.displacements), t.increments)

    def test_deterministic(self):
        a = sample_path(30, ConstantCoupling(0.01), 5)
        b = sample_path(30, ConstantCoupling(0.01), 5)
        assert np.array_equal(a.increments, b.increments)

    def test_matches_ensemble_substream(self):
        # trajectory j of the ensemble is reproducible in isolation
        profile = ConstantCoupling(0.4 / 40)
        counts = terminal_counts(40, profile, 200, 11)
        singles = np.zeros_like(counts)
        for j in range(200):
            x = sample_path(40, profile, 11, trajectory_index=j).displacements[-1]
            singles[(x + 40) // 2] += 1
        assert np.array_equal(counts, singles)

    def test_strict_mode(self):
        with pytest.raises(CouplingOutOfRange):
            sample_path(100, ConstantCoupling(0.01), 0, strict=True)


class TestEnsembleAgainstDp:
    def test_uncoupled_terminal_chisquare(self):
        n, walks = 10, 100_000
        counts = terminal_counts(n, ConstantCoupling(0.0), walks, 2024)
        expected = evolve(n, ConstantCoupling(0.0))[0].probs * walks
        keep = expected >= 5
        chi2, p = stats.chisquare(counts[keep], expected[keep] *
                                  counts[keep].sum() / expected[keep].sum())
        assert p > 0.01

    @pytest.mark.parametrize("kappa", [0.4, -0.4])
    def test_coupled_terminal_chisquare(self, kappa):
        n, walks = 100, 100_000
        profile = ConstantCoupling(kappa / n)
        counts = terminal_counts(n, profile, walks, 99)
        expected = evolve(n, profile)[0].probs * walks
        keep = expected >= 5
        merged_obs = np.append(counts[keep], counts[~keep].sum())
        merged_exp = np.append(expected[keep], expected[~keep].sum())
        chi2, p = stats.chisquare(merged_obs,
                                  merged_exp * merged_obs.sum() / merged_exp.sum())
        assert p > 0.01

    def test_moments_within_errors(self):
        n, walks = 100, 30_000
        for kappa in (0.4, -0.4):
            profile = ConstantCoupling(kappa / n)
            est = sample_ensemble(n, profile, walks, 31)
            rep = moments(evolve(n, profile)[0])
            assert abs(est.variance.value - rep.variance) < 4 * est.variance.se
            assert abs(est.kurtosis.value - rep.kurtosis) < 4 * est.kurtosis.se
            assert abs(est.mean.value) < 4 * est.mean.se

    def test_well_profile_supported(self):
        profile = GaussianWellCoupling(2.5 / 200, 0.4, 26.0)
        est = sample_ensemble(200, profile, 20_000, 8)
        rep = moments(evolve(200, profile)[0])
        assert abs(est.variance.value - rep.variance) < 4 * est.variance.se


class TestReproducibility:
    def test_partition_invariance_across_jobs(self):
        profile = ConstantCoupling(0.4 / 150)
        a = sample_ensemble(150, profile, 25_000, 17, n_jobs=1)
        b = sample_ensemble(150, profile, 25_000, 17, n_jobs=4)
        assert a.variance.value == b.variance.value
        assert a.kurtosis.value == b.kurtosis.value
        assert a.fourth.se == b.fourth.se

    def test_autocorr_jobs_invariance(self):
        profile = ConstantCoupling(0.4 / 100)
        a = estimate_autocorr(100, profile, 2, 20_000, 23, n_jobs=1)
        b = estimate_autocorr(100, profile, 2, 20_000, 23, n_jobs=3)
        assert a.estimate.value == b.estimate.value
        assert np.array_equal(a.per_start, b.per_start)

    def test_se_scaling(self):
        profile = ConstantCoupling(0.2 / 60)
        small = sample_ensemble(60, profile, 10_000, 4)
        large = sample_ensemble(60, profile, 40_000, 4)
        ratio = small.variance.se / large.variance.se
        assert ratio == pytest.approx(2.0, rel=0.2)


class TestAutocorrEstimator:
    def test_uncoupled_consistent_with_zero(self):
        est = estimate_autocorr(100, ConstantCoupling(0.0), 2, 20_000, 12)
        assert abs(est.estimate.value) < 3 * est.estimate.se

    @pytest.mark.parametrize("kappa", [0.4, -0.4])
    def test_matches_exact_value(self, kappa):
        n, lag, walks = 100, 2, 50_000
        est = estimate_autocorr(n, ConstantCoupling(kappa / n), lag, walks, 3)
        exact = autocorrelation(n, kappa, lag).value_exact
        assert abs(est.estimate.value - exact) < 3 * est.estimate.se
        if kappa < 0:
            assert est.estimate.value < 0

    def test_pooled_equals_mean_of_starts(self):
        est = estimate_autocorr(60, ConstantCoupling(0.003), 3, 5_000, 9)
        assert est.estimate.value == pytest.approx(est.per_start.mean(),
                                                   rel=1e-12)
        assert len(est.per_start) == 60 - 3 + 1

    def test_lag_window_bounds(self):
        with pytest.raises(ValueError):
            estimate_autocorr(10, ConstantCoupling(0.0), 1, 100, 0)
        with pytest.raises(ValueError):
            estimate_autocorr(3, ConstantCoupling(0.0), 5, 100, 0)


class TestHurst:
    def test_uncoupled_half(self):
        est = estimate_hurst(0.0, [100, 1000, 10000], 2_000, 77)
        assert est.h.value == pytest.approx(0.5, abs=0.02)

    def test_deterministic(self):
        a = estimate_hurst(0.0, [50, 200, 800], 500, 1)
        b = estimate_hurst(0.0, [50, 200, 800], 500, 1)
        assert a.h.value == b.h.value

    def test_scale_span_required(self):
        with pytest.raises(InsufficientScales):
            estimate_hurst(0.0, [100, 200], 100, 0)
        with pytest.raises(InsufficientScales):
            estimate_hurst(0.0, [100, 150, 300], 100, 0)

    def test_coupled_slope_still_half(self):
        # the coupling shifts the amplitude, not the growth exponent
        est = estimate_hurst(0.4, [100, 400, 1600], 2_000, 55)
        assert est.h.value == pytest.approx(0.5, abs=0.03)
