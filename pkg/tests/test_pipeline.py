"""End-to-end protocol runs: fidelities, heralding, marginals."""

import numpy as np
import pytest

from quditweave.cavity import CavityParams
from quditweave.decoherence import MemoryParams
from quditweave.erasure import (
    LoopConfig,
    LossBudget,
    SignConsistencyError,
    erasure_success_probability,
    single_loop_total_probability,
)
from quditweave.pipeline import NoiseProfile, raw_pair_marginals, run_protocol
from quditweave.source import SourceNoise
from quditweave.states import fidelity, ideal_bell_vector, partial_trace


class TestNoiselessProtocol:
    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_raw_fidelity_is_one(self, m):
        out = run_protocol(m, NoiseProfile.noiseless(), seed=0)
        assert out.raw_fidelity >= 1.0 - 1e-10

    def test_noiseless_success_matches_single_loop_total(self):
        out = run_protocol(2, NoiseProfile.noiseless(), seed=0)
        assert abs(out.success_probability - 2 / 15) < 1e-12

    def test_concatenated_loop_success_matches_formula(self):
        profile = NoiseProfile(loop=LoopConfig(2, 7))
        out = run_protocol(2, profile, seed=0)
        expected = erasure_success_probability(2, 7, 2)
        assert abs(out.success_probability - expected) < 1e-12

    def test_loss_budget_scales_success(self):
        losses = LossBudget(eta_AB=0.05, eta_0=0.499, eta=0.016)
        profile = NoiseProfile(losses=losses)
        out = run_protocol(2, profile, seed=0)
        expected = (
            0.95**2 * (1 - 0.499) * single_loop_total_probability(2, 0.016)
        )
        assert abs(out.success_probability - expected) < 1e-12
        assert out.raw_fidelity >= 1.0 - 1e-10  # heralded losses cost rate, not fidelity

    def test_sign_failure_propagates(self):
        with pytest.raises(SignConsistencyError):
            run_protocol(2, NoiseProfile(loop=LoopConfig(2, 6)), seed=0)

    def test_m_out_of_range(self):
        with pytest.raises(ValueError):
            run_protocol(6, NoiseProfile.noiseless())


class TestNoisyTrends:
    def test_fidelity_decreases_with_source_noise(self):
        fids = []
        for sigma in (0.05, 0.25, 0.6):
            profile = NoiseProfile(source=SourceNoise(sigma))
            fids.append(run_protocol(2, profile, n_samples=400, seed=11).raw_fidelity)
        assert fids[0] > fids[1] > fids[2]

    def test_fidelity_decreases_with_pair_count(self):
        profile = NoiseProfile(source=SourceNoise(0.2), gate_error=0.002)
        f2 = run_protocol(2, profile, n_samples=300, seed=5).raw_fidelity
        f3 = run_protocol(3, profile, n_samples=300, seed=5).raw_fidelity
        assert f3 <= f2

    def test_imperfect_reflection_costs_fidelity(self):
        cavity = CavityParams(C0=0.0, C1=20.0, K_in_over_K=0.98)
        profile = NoiseProfile(cavity_a=cavity, cavity_b=cavity)
        out = run_protocol(2, profile, seed=0)
        assert out.raw_fidelity < 1.0
        assert out.success_probability < 2 / 15

    def test_gate_error_costs_fidelity(self):
        profile = NoiseProfile(gate_error=0.01)
        out = run_protocol(2, profile, seed=0)
        assert out.raw_fidelity < 1.0

    def test_memory_noise_costs_fidelity(self):
        profile = NoiseProfile(memory=MemoryParams())
        out = run_protocol(1, profile, seed=0)
        assert 0.9 < out.raw_fidelity < 1.0

    def test_seed_determinism(self):
        profile = NoiseProfile(source=SourceNoise(0.1))
        a = run_protocol(2, profile, n_samples=100, seed=42)
        b = run_protocol(2, profile, n_samples=100, seed=42)
        np.testing.assert_array_equal(a.rho.data, b.rho.data)
        assert a.raw_fidelity == b.raw_fidelity

    def test_sigma_zero_single_sample(self):
        out = run_protocol(2, NoiseProfile.noiseless(), n_samples=500, seed=1)
        assert out.samples == 1


class TestPairMarginals:
    def test_ideal_marginals(self):
        out = run_protocol(3, NoiseProfile.noiseless(), seed=0)
        for dm, f in raw_pair_marginals(out):
            assert f >= 1.0 - 1e-10

    def test_product_noise_factorizes(self):
        # memory noise alone acts per qubit, so joint fidelity factorizes
        profile = NoiseProfile(memory=MemoryParams())
        out = run_protocol(2, profile, seed=0)
        pair_fids = [f for _, f in raw_pair_marginals(out)]
        assert abs(out.raw_fidelity - np.prod(pair_fids)) < 1e-9

    def test_correlated_noise_does_not_factorize(self):
        profile = NoiseProfile(source=SourceNoise(0.4))
        out = run_protocol(2, profile, n_samples=400, seed=3)
        pair_fids = [f for _, f in raw_pair_marginals(out)]
        assert abs(out.raw_fidelity - np.prod(pair_fids)) > 1e-4


class TestHeraldingConsistency:
    def test_monte_carlo_success_matches_weighted_erasure(self):
        # with source noise the heralding probability stays within MC error
        # of the deterministic compensated-amplitude value
        profile = NoiseProfile(source=SourceNoise(0.05))
        out = run_protocol(2, profile, n_samples=800, seed=9)
        nominal = single_loop_total_probability(2, 0.0)
        assert abs(out.success_probability - nominal) < 0.01

    def test_pair_symmetric_profile_gives_permutation_covariant_state(self):
        profile = NoiseProfile(source=SourceNoise(0.3))
        out = run_protocol(2, profile, n_samples=400, seed=21)
        # swap the two pairs: the state need not be invariant branch-wise,
        # but pair fidelities agree for a pair-symmetric noise profile
        swapped = partial_trace(out.rho, [2, 3, 0, 1])
        f_orig = fidelity(out.rho, ideal_bell_vector(2))
        f_swap = fidelity(swapped, ideal_bell_vector(2))
        assert abs(f_orig - f_swap) < 5e-3
