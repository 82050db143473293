"""Density-matrix engine checks: channels, distances, Bell utilities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditweave import states
from quditweave.states import (
    DensityMatrix,
    KrausSet,
    PauliChannelParams,
    ToleranceError,
    apply_channel,
    apply_unitary,
    apply_unitary_vec,
    bell_coefficients,
    bell_diagonal,
    embed,
    fidelity,
    ideal_bell_register,
    ideal_bell_vector,
    partial_trace,
    trace_distance,
)


def random_density(n_qubits, rng):
    dim = 2**n_qubits
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestConventions:
    def test_little_endian_single_qubit(self):
        # X on qubit 0 flips the least significant bit.
        vec = np.zeros(4, dtype=complex)
        vec[0] = 1.0
        out = apply_unitary_vec(vec, states.X, [0], 2)
        assert abs(out[1] - 1.0) < 1e-14

        out = apply_unitary_vec(vec, states.X, [1], 2)
        assert abs(out[2] - 1.0) < 1e-14

    def test_cnot_convention_first_target_is_control(self):
        cnot = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        # control qubit 0 (value 1 at index 1) flips target qubit 1 -> index 3
        vec = np.zeros(4, dtype=complex)
        vec[1] = 1.0
        out = apply_unitary_vec(vec, cnot, [0, 1], 2)
        assert abs(out[3] - 1.0) < 1e-14
        # control 0 in |0> leaves target alone
        vec = np.zeros(4, dtype=complex)
        vec[2] = 1.0
        out = apply_unitary_vec(vec, cnot, [0, 1], 2)
        assert abs(out[2] - 1.0) < 1e-14

    def test_embed_matches_kron(self):
        rng = np.random.default_rng(7)
        op = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        # qubit 0 is least significant: full = I (x) op in kron order
        np.testing.assert_allclose(embed(op, [0], 2), np.kron(np.eye(2), op), atol=1e-14)
        np.testing.assert_allclose(embed(op, [1], 2), np.kron(op, np.eye(2)), atol=1e-14)

    def test_apply_unitary_matches_dense_conjugation(self):
        rng = np.random.default_rng(3)
        rho = random_density(3, rng)
        op = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        full = embed(op, [2, 0], 3)
        expected = full @ rho @ full.conj().T
        np.testing.assert_allclose(apply_unitary(rho, op, [2, 0]), expected, atol=1e-12)


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        bad = np.array([[1.0, 0.5], [0.0, 0.0]], dtype=complex)
        with pytest.raises(ToleranceError):
            DensityMatrix(bad)

    def test_rejects_bad_trace(self):
        with pytest.raises(ToleranceError):
            DensityMatrix(np.eye(2, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        bad = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ToleranceError):
            DensityMatrix(bad)

    def test_accepts_valid_and_freezes(self):
        dm = DensityMatrix(np.diag([0.25, 0.75]).astype(complex))
        assert dm.n_qubits == 1
        with pytest.raises(ValueError):
            dm.data[0, 0] = 9.0


class TestKrausSet:
    def test_identity_is_complete(self):
        KrausSet.identity(2)

    def test_non_cptp_rejected(self):
        with pytest.raises(ToleranceError):
            KrausSet([0.5 * states.I2])

    def test_pauli_channel_kraus_complete(self):
        PauliChannelParams(0.1, 0.2, 0.3).kraus()

    def test_pauli_params_validation(self):
        with pytest.raises(ValueError):
            PauliChannelParams(0.5, 0.4, 0.3)


class TestApplyChannel:
    def test_identity_channel_is_noop(self):
        rng = np.random.default_rng(11)
        rho = random_density(2, rng)
        out = apply_channel(rho, KrausSet.identity(1), [1])
        assert np.abs(out.data - rho).max() < 1e-12

    def test_full_dephasing_kills_coherence(self):
        plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
        rho = np.outer(plus, plus.conj())
        k = KrausSet([states.I2 / np.sqrt(2), states.Z / np.sqrt(2)])
        out = apply_channel(rho, k, [0])
        np.testing.assert_allclose(out.data, np.eye(2) / 2, atol=1e-12)

    def test_partial_dephasing_scales_coherence_by_half(self):
        # weights (1 + e^-ln2)/2 and (1 - e^-ln2)/2 scale coherences by 0.5
        lam = np.exp(-np.log(2.0))
        a0 = np.sqrt((1 + lam) / 2) * states.I2
        a1 = np.sqrt((1 - lam) / 2) * states.Z
        plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
        rho = np.outer(plus, plus.conj())
        out = apply_channel(rho, KrausSet([a0, a1]), [0])
        assert abs(out.data[0, 1] - 0.25) < 1e-12

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        rho = random_density(2, rng)
        with pytest.raises(ValueError):
            apply_channel(rho, KrausSet.identity(2), [0])
        with pytest.raises(ValueError):
            apply_channel(rho, KrausSet.identity(1), [3])
        with pytest.raises(ValueError):
            apply_channel(rho, KrausSet.identity(2), [0, 0])

    def test_trace_and_hermiticity_preserved(self):
        rng = np.random.default_rng(13)
        rho = random_density(3, rng)
        k = PauliChannelParams(0.05, 0.1, 0.2).kraus()
        out = apply_channel(rho, k, [1])
        assert abs(np.trace(out.data) - 1.0) < 1e-10
        assert np.abs(out.data - out.data.conj().T).max() < 1e-12


class TestFidelityTraceDistance:
    def test_bell_state_self_fidelity(self):
        rho = ideal_bell_register(1)
        assert abs(fidelity(rho, states.PHI_PLUS) - 1.0) < 1e-12

    def test_orthogonal_bell_states(self):
        rho = np.outer(states.PSI_PLUS, states.PSI_PLUS.conj())
        assert abs(fidelity(rho, states.PHI_PLUS)) < 1e-12

    def test_bell_diagonal_fidelity_is_leading_weight(self):
        rho = bell_diagonal([0.85, 0.05, 0.05, 0.05])
        assert abs(fidelity(rho, states.PHI_PLUS) - 0.85) < 1e-12

    def test_trace_distance_self_is_zero(self):
        rho = ideal_bell_register(2)
        assert trace_distance(rho, rho) < 1e-12

    def test_trace_distance_orthogonal_pure(self):
        zero = np.diag([1.0, 0.0]).astype(complex)
        one = np.diag([0.0, 1.0]).astype(complex)
        assert abs(trace_distance(zero, one) - 1.0) < 1e-12

    def test_bell_diagonal_trace_distance_is_l1(self):
        # commuting Bell-diagonal operators reduce to classical L1 distance
        c1 = np.array([0.7, 0.1, 0.1, 0.1])
        c2 = np.array([0.4, 0.3, 0.2, 0.1])
        expected = 0.5 * np.abs(c1 - c2).sum()
        got = trace_distance(bell_diagonal(c1), bell_diagonal(c2))
        assert abs(got - expected) < 1e-12

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(ideal_bell_register(1), ideal_bell_vector(2))
        with pytest.raises(ValueError):
            trace_distance(ideal_bell_register(1).data, ideal_bell_register(2).data)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=40, deadline=None)
    def test_fuchs_van_de_graaff(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(2, rng)
        psi = states.haar_random_state(2, rng)
        f = fidelity(rho, psi)
        t = trace_distance(rho, np.outer(psi, psi.conj()))
        assert 1 - np.sqrt(f) <= t + 1e-10
        assert t <= np.sqrt(1 - f) + 1e-10


class TestBellRegister:
    def test_m1_corner_pattern(self):
        rho = ideal_bell_register(1).data
        assert abs(rho[0, 0] - 0.5) < 1e-14
        assert abs(rho[0, 3] - 0.5) < 1e-14
        assert abs(rho[3, 0] - 0.5) < 1e-14
        assert abs(rho[3, 3] - 0.5) < 1e-14

    def test_m2_purity(self):
        assert abs(ideal_bell_register(2).purity() - 1.0) < 1e-12

    def test_m3_fidelity_vs_vector(self):
        rho = ideal_bell_register(3)
        assert abs(fidelity(rho, ideal_bell_vector(3)) - 1.0) < 1e-12

    def test_m_out_of_range(self):
        with pytest.raises(ValueError):
            ideal_bell_register(0)
        with pytest.raises(ValueError):
            ideal_bell_register(7)

    def test_pair_marginals_are_bell_pairs(self):
        rho = ideal_bell_register(2)
        for p in range(2):
            marg = partial_trace(rho, [2 * p, 2 * p + 1])
            np.testing.assert_allclose(marg, ideal_bell_register(1).data, atol=1e-12)


class TestPartialTrace:
    def test_product_state_factors(self):
        rng = np.random.default_rng(23)
        a = random_density(1, rng)
        b = random_density(1, rng)
        joint = np.kron(b, a)  # qubit 0 = a (least significant)
        np.testing.assert_allclose(partial_trace(joint, [0]), a, atol=1e-13)
        np.testing.assert_allclose(partial_trace(joint, [1]), b, atol=1e-13)

    def test_reorders_qubits(self):
        rng = np.random.default_rng(29)
        a = random_density(1, rng)
        b = random_density(1, rng)
        joint = np.kron(b, a)
        swapped = partial_trace(joint, [1, 0])
        np.testing.assert_allclose(swapped, np.kron(a, b), atol=1e-13)


class TestBellDiagonalUtilities:
    def test_roundtrip(self):
        c = np.array([0.6, 0.2, 0.15, 0.05])
        np.testing.assert_allclose(bell_coefficients(bell_diagonal(c)), c, atol=1e-12)

    def test_pauli_error_classes(self):
        # single-sided Pauli on Alice's qubit maps Phi+ to the labeled class
        phi = ideal_bell_register(1).data
        for idx, label in enumerate(states.PAULI_LABELS):
            rho = apply_unitary(phi, states.PAULIS[label], [0])
            coeffs = bell_coefficients(rho)
            expected = np.zeros(4)
            expected[idx] = 1.0
            np.testing.assert_allclose(coeffs, expected, atol=1e-12)
