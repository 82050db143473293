"""Independent-model fitting and the correlation measure."""

import numpy as np
import pytest

from quditweave.correlation import (
    OptimizerConfig,
    UncorrelatedModel,
    apply_uncorrelated_model,
    correlation_measure,
    model_fidelity,
)
from quditweave.pipeline import NoiseProfile, run_protocol
from quditweave.source import SourceNoise
from quditweave.states import (
    PauliChannelParams,
    apply_channel,
    bell_coefficients,
    fidelity,
    ideal_bell_register,
    ideal_bell_vector,
    partial_trace,
)


def model_from_probs(rows):
    return UncorrelatedModel(tuple(PauliChannelParams(*r) for r in rows))


class TestApplyUncorrelatedModel:
    def test_zero_model_is_ideal(self):
        out = apply_uncorrelated_model(UncorrelatedModel.zero(2), 2)
        np.testing.assert_allclose(out.data, ideal_bell_register(2).data, atol=1e-12)

    def test_single_x_channel_gives_x_weight(self):
        model = model_from_probs([(0.1, 0.0, 0.0), (0.0, 0.0, 0.0)])
        out = apply_uncorrelated_model(model, 1)
        np.testing.assert_allclose(
            bell_coefficients(out.data), [0.9, 0.1, 0.0, 0.0], atol=1e-12
        )

    def test_matches_generic_channel_engine(self):
        # dual route: fast Bell-weight convolution vs explicit Kraus channels
        rows = [(0.05, 0.02, 0.08), (0.01, 0.1, 0.03), (0.0, 0.04, 0.06), (0.07, 0.0, 0.02)]
        model = model_from_probs(rows)
        fast = apply_uncorrelated_model(model, 2)
        slow = ideal_bell_register(2)
        for q, row in enumerate(rows):
            slow = apply_channel(slow, PauliChannelParams(*row).kraus(), [q])
        np.testing.assert_allclose(fast.data, slow.data, atol=1e-12)

    def test_application_order_irrelevant(self):
        rows = [(0.05, 0.02, 0.08), (0.01, 0.1, 0.03)]
        model = model_from_probs(rows)
        fast = apply_uncorrelated_model(model, 1)
        slow = ideal_bell_register(1)
        for q in (1, 0):  # reversed order
            slow = apply_channel(slow, PauliChannelParams(*rows[q]).kraus(), [q])
        np.testing.assert_allclose(fast.data, slow.data, atol=1e-12)

    def test_model_fidelity_closed_form(self):
        rows = [(0.03, 0.01, 0.02), (0.02, 0.05, 0.01)]
        model = model_from_probs(rows)
        out = apply_uncorrelated_model(model, 1)
        assert abs(model_fidelity(model) - fidelity(out, ideal_bell_vector(1))) < 1e-12


FAST_CFG = OptimizerConfig(restarts=4, max_iterations=1200, seed=7)


class TestCorrelationMeasure:
    def test_ideal_register_gives_zero(self):
        report = correlation_measure(ideal_bell_register(2), 2, cfg=FAST_CFG)
        assert report.feasible
        assert report.T_min < 1e-4

    def test_recovers_uncorrelated_generator(self):
        rows = [(0.04, 0.01, 0.02), (0.02, 0.0, 0.05), (0.01, 0.03, 0.0), (0.0, 0.02, 0.04)]
        rho = apply_uncorrelated_model(model_from_probs(rows), 2)
        report = correlation_measure(rho, 2, cfg=FAST_CFG)
        assert report.feasible
        assert report.T_min <= 1e-3

    def test_bell_diagonal_single_pair_near_exact(self):
        rng = np.random.default_rng(31)
        for _ in range(4):
            raw = rng.random(4) + np.array([8.0, 0, 0, 0])
            c = raw / raw.sum()
            from quditweave.states import bell_diagonal

            report = correlation_measure(bell_diagonal(c), 1, cfg=FAST_CFG)
            assert report.feasible
            assert report.T_min < 1e-3

    def test_correlated_state_keeps_distance(self):
        # two pairs sharing one error: rho = (1-p) ideal + p (X Alice0, X Alice1)
        rho = ideal_bell_register(2).data
        from quditweave.states import PAULIS, apply_unitary

        flipped = apply_unitary(apply_unitary(rho, PAULIS["X"], [0]), PAULIS["X"], [2])
        mixed = 0.9 * rho + 0.1 * flipped
        report = correlation_measure(mixed, 2, cfg=FAST_CFG)
        assert report.feasible
        assert report.T_min > 0.01

    def test_grows_with_protocol_noise(self):
        reports = []
        for sigma in (0.05, 0.45):
            out = run_protocol(2, NoiseProfile(source=SourceNoise(sigma)), n_samples=300, seed=13)
            reports.append(correlation_measure(out.rho, 2, cfg=FAST_CFG))
        assert reports[0].T_min <= reports[1].T_min + 1e-6

    def test_restart_metadata_recorded(self):
        report = correlation_measure(ideal_bell_register(1), 1, cfg=FAST_CFG)
        assert len(report.restarts) == FAST_CFG.restarts
        assert all("T" in r and "feasible" in r for r in report.restarts)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            correlation_measure(ideal_bell_register(1), 2, cfg=FAST_CFG)

    def test_pair_relabeling_invariance(self):
        out = run_protocol(2, NoiseProfile(source=SourceNoise(0.35)), n_samples=200, seed=17)
        swapped = partial_trace(out.rho, [2, 3, 0, 1])
        a = correlation_measure(out.rho, 2, cfg=FAST_CFG)
        b = correlation_measure(swapped, 2, cfg=FAST_CFG)
        assert abs(a.T_min - b.T_min) < 5e-3
