"""Qudit source: pulse probabilities and laser-noise sampling."""

import numpy as np
import pytest

from quditweave.source import (
    NoisyQudit,
    QuditAmplitudes,
    SourceNoise,
    has_degenerate_tail,
    pulse_probabilities,
    sample_noisy_qudit,
    zeta_std,
)


class TestPulseProbabilities:
    def test_two_bin_profile(self):
        q = QuditAmplitudes(1, np.sqrt([2 / 3, 1 / 3]))
        p = pulse_probabilities(q)
        np.testing.assert_allclose(p, [2 / 3, 1.0], atol=1e-12)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_uniform_telescopes(self, m):
        q = QuditAmplitudes.uniform(m)
        p = pulse_probabilities(q)
        n = 2**m
        expected = [1.0 / (n - k) for k in range(n)]
        np.testing.assert_allclose(p, expected, atol=1e-12)

    def test_all_weight_in_first_bin(self):
        alphas = np.zeros(4)
        alphas[0] = 1.0
        q = QuditAmplitudes(2, alphas)
        p = pulse_probabilities(q)
        np.testing.assert_allclose(p, [1.0, 0.0, 0.0, 0.0], atol=1e-12)
        assert has_degenerate_tail(q)

    def test_no_degenerate_tail_for_uniform(self):
        assert not has_degenerate_tail(QuditAmplitudes.uniform(2))

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_roundtrip_reconstruction(self, m):
        # forward recursion from P reproduces the squared amplitudes
        rng = np.random.default_rng(42 + m)
        raw = rng.random(2**m) + 0.1
        alphas = np.sqrt(raw / raw.sum())
        q = QuditAmplitudes(m, alphas)
        p = pulse_probabilities(q)
        residual = 1.0
        rebuilt = np.zeros_like(p)
        for i, pi in enumerate(p):
            rebuilt[i] = residual * pi
            residual -= rebuilt[i]
        np.testing.assert_allclose(rebuilt, alphas**2, atol=1e-12)


class TestAmplitudeValidation:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            QuditAmplitudes(1, np.array([1.0, 1.0]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            QuditAmplitudes(1, np.array([-0.6, 0.8]))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            QuditAmplitudes(2, np.array([1.0]))


class TestSampling:
    def test_zero_sigma_is_exact(self):
        q = QuditAmplitudes.uniform(2)
        out = sample_noisy_qudit(q, SourceNoise(0.0), seed=1)
        np.testing.assert_allclose(out.amplitudes, q.alphas, atol=0)
        assert out.prenorm == 1.0
        assert out.clamp_count == 0

    def test_seed_reproducibility(self):
        q = QuditAmplitudes.uniform(2)
        a = sample_noisy_qudit(q, SourceNoise(0.05), seed=123)
        b = sample_noisy_qudit(q, SourceNoise(0.05), seed=123)
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
        c = sample_noisy_qudit(q, SourceNoise(0.05), seed=124)
        assert np.abs(a.amplitudes - c.amplitudes).max() > 0

    def test_norm_stays_near_one(self):
        q = QuditAmplitudes.uniform(2)
        noise = SourceNoise(0.01)
        norms = [
            sample_noisy_qudit(q, noise, seed=s).prenorm for s in range(300)
        ]
        assert 0.9 < min(norms) and max(norms) < 1.1

    def test_unit_norm_output(self):
        q = QuditAmplitudes(2, np.sqrt([0.5, 0.3, 0.15, 0.05]))
        out = sample_noisy_qudit(q, SourceNoise(0.1), seed=7)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12

    def test_aggregate_amplitude_error_variance(self):
        # sum_n (alpha_n^2 / P_n) zeta_n should be N(0, sigma^2)
        q = QuditAmplitudes(2, np.sqrt([0.4, 0.3, 0.2, 0.1]))
        sigma = 0.03
        probs = pulse_probabilities(q)
        ratios = q.alphas**2 / probs
        rng = np.random.default_rng(2024)
        agg = np.empty(100_000)
        for i in range(agg.size):
            s = sample_noisy_qudit(q, SourceNoise(sigma), seed=rng)
            agg[i] = float(ratios @ s.zeta)
        assert abs(np.var(agg) / sigma**2 - 1.0) < 0.03

    def test_mean_amplitude_phase_damping(self):
        # E[raw amplitude] = alpha * exp(-sigma^2 / 2); checked at 5 sigma
        q = QuditAmplitudes.uniform(1)
        sigma = 0.1
        n_samples = 40_000
        rng = np.random.default_rng(99)
        acc = np.zeros(2, dtype=complex)
        for _ in range(n_samples):
            s = sample_noisy_qudit(q, SourceNoise(sigma), seed=rng)
            acc += s.amplitudes * s.prenorm
        mean = acc / n_samples
        expected = q.alphas * np.exp(-(sigma**2) / 2.0)
        mc_err = 5 * sigma / np.sqrt(n_samples)
        assert np.abs(mean - expected).max() < mc_err + 5e-4

    def test_clamping_recorded(self):
        # huge sigma forces negative amplitude factors
        q = QuditAmplitudes.uniform(1)
        out = sample_noisy_qudit(q, SourceNoise(5.0), seed=3)
        assert isinstance(out, NoisyQudit)
        assert out.clamp_count >= 0
        assert np.all(np.abs(out.amplitudes) >= 0)

    def test_zeta_std_scaling(self):
        q = QuditAmplitudes(1, np.sqrt([2 / 3, 1 / 3]))
        # ratios are (1, 1/3); sum of squares 10/9 -> std scale 3/sqrt(10)
        assert abs(zeta_std(q) - 3 / np.sqrt(10)) < 1e-12
