"""Spin-photon scattering: reflection coefficients, schedules, branch states."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditweave import states
from quditweave.cavity import (
    CavityParams,
    branch_traces,
    hadamard_schedule,
    initial_register_state,
    reflection_coefficients,
    register_block_tensor,
    scatter_register,
)
from quditweave.source import QuditAmplitudes
from quditweave.states import PAULIS, embed


class TestReflectionCoefficients:
    def test_bare_cavity_is_minus_one(self):
        p = CavityParams(C0=0.0, C1=0.0, K_in_over_K=1.0, omega=0.0)
        r0, _ = reflection_coefficients(p)
        assert abs(r0 - (-1.0)) < 1e-12

    def test_finite_cooperativity(self):
        p = CavityParams(C0=0.0, C1=100.0, K_in_over_K=1.0, omega=0.0, Delta1=0.0)
        _, r1 = reflection_coefficients(p)
        assert abs(r1 - (1.0 - 1.0 / 200.5)) < 1e-12

    def test_infinite_cooperativity_limit(self):
        _, r1 = reflection_coefficients(CavityParams.ideal())
        assert r1 == 1.0
        r0, _ = reflection_coefficients(CavityParams.ideal())
        assert abs(r0 - (-1.0)) < 1e-12

    @given(
        st.floats(0.0, 500.0),
        st.floats(0.0, 500.0),
        st.floats(0.0, 1.0),
        st.floats(-5.0, 5.0),
        st.floats(-5.0, 5.0),
        st.floats(0.01, 10.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_passivity(self, c0, c1, kin, omega, delta, gamma):
        p = CavityParams(
            C0=c0, C1=c1, K_in_over_K=kin, omega=omega, Delta0=delta,
            Delta1=-delta, gamma0=gamma, gamma1=gamma,
        )
        r0, r1 = reflection_coefficients(p)
        assert abs(r0) <= 1.0 + 1e-9
        assert abs(r1) <= 1.0 + 1e-9


class TestHadamardSchedule:
    def test_bin_zero_empty(self):
        assert hadamard_schedule(3, 0) == set()

    def test_bin_three_first_two_qubits(self):
        assert hadamard_schedule(3, 3) == {1, 2}

    def test_bin_four_third_qubit(self):
        assert hadamard_schedule(3, 4) == {3}

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            hadamard_schedule(2, 4)
        with pytest.raises(ValueError):
            hadamard_schedule(2, -1)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_each_qubit_scheduled_half_the_time(self, m):
        counts = {j: 0 for j in range(1, m + 1)}
        for n in range(2**m):
            for j in hadamard_schedule(m, n):
                counts[j] += 1
        assert all(c == 2 ** (m - 1) for c in counts.values())


def _ideal_both_sides(m):
    q = QuditAmplitudes.uniform(m)
    st1 = scatter_register(q, CavityParams.ideal(), "A")
    return scatter_register(None, CavityParams.ideal(), "B", state=st1)


def _expected_joint_vector(m, amps):
    """Branch n carries spin pattern bits(n) on both registers."""
    b = 2**m
    d = 4**m
    vec = np.zeros(b * d, dtype=complex)
    for n in range(b):
        reg = 0
        for j in range(m):
            bit = (n >> j) & 1
            reg |= bit << (2 * j)       # A_j at global qubit 2j
            reg |= bit << (2 * j + 1)   # B_j at global qubit 2j+1
        vec[n * d + reg] = amps[n]
    return vec


class TestIdealScattering:
    @pytest.mark.parametrize("m", [1, 2])
    def test_joint_pattern_matches_reversed_binary(self, m):
        state = _ideal_both_sides(m)
        joint = register_block_tensor(state)
        b, d = 2**m, 4**m
        dense = joint.transpose(0, 2, 1, 3).reshape(b * d, b * d)
        vec = _expected_joint_vector(m, state.amplitudes)
        np.testing.assert_allclose(dense, np.outer(vec, vec.conj()), atol=1e-12)

    def test_single_side_magnitudes_preserved(self):
        q = QuditAmplitudes(2, np.sqrt([0.4, 0.3, 0.2, 0.1]))
        state = scatter_register(q, CavityParams.ideal(), "A")
        np.testing.assert_allclose(branch_traces(state), np.ones(4), atol=1e-12)

    def test_branch_traces_shrink_for_lossy_cavity(self):
        q = QuditAmplitudes.uniform(2)
        lossy = CavityParams(C0=0.0, C1=20.0, K_in_over_K=0.9)
        state = scatter_register(q, lossy, "A")
        assert np.all(branch_traces(state) < 1.0)

    def test_near_ideal_reflection_distorts_state(self):
        q = QuditAmplitudes.uniform(2)
        imperfect = CavityParams(C0=0.0, C1=40.0)  # r1 = 1 - 1/80.5
        sa = scatter_register(q, imperfect, "A")
        sb = scatter_register(None, imperfect, "B", state=sa)
        ideal = _ideal_both_sides(2)
        diff = register_block_tensor(sb) - register_block_tensor(ideal)
        assert np.abs(diff).max() > 1e-3


def _brute_force_scatter(m, amps, params, sides, gate_error):
    """Dense reference: photon qudit (most significant) x 2m register qubits.

    Applies, bin by bin, the unconditional Hadamards with depolarizing noise
    and the photon-bin-controlled reflection on every qubit of the active
    side.  Independent of the branch-factored implementation.
    """
    b = 2**m
    nq = 2 * m
    d = 2**nq
    reg0 = np.zeros((d, d), dtype=complex)
    reg0[0, 0] = 1.0
    photon = np.outer(amps, np.conj(amps))
    rho = np.kron(photon, reg0)

    r0, r1 = reflection_coefficients(params)
    refl1 = np.array([[r0, 0], [0, r1]], dtype=complex)
    w = np.array([1 - 0.75 * gate_error] + [gate_error / 4] * 3)

    def qubit_index(side, j):
        return 2 * j + (0 if side == "A" else 1)

    def full(reg_op, bin_proj=None):
        ph = np.eye(b, dtype=complex) if bin_proj is None else bin_proj
        return np.kron(ph, reg_op)

    for side in sides:
        for t in range(b):
            sched = [j for j in range(m) if (t >> j) & 1]
            for phase in range(2):
                for j in sched:
                    u = full(embed(states.H, [qubit_index(side, j)], nq))
                    rho = u @ rho @ u.conj().T
                    if gate_error:
                        acc = np.zeros_like(rho)
                        for wi, pl in zip(w, "IXYZ"):
                            k = full(np.sqrt(wi) * embed(PAULIS[pl], [qubit_index(side, j)], nq))
                            acc += k @ rho @ k.conj().T
                        rho = acc
                if phase == 0:
                    refl_all = np.eye(d, dtype=complex)
                    for j in range(m):
                        refl_all = embed(refl1, [qubit_index(side, j)], nq) @ refl_all
                    proj_t = np.zeros((b, b), dtype=complex)
                    proj_t[t, t] = 1.0
                    proj_rest = np.eye(b, dtype=complex) - proj_t
                    op = full(refl_all, proj_t) + full(np.eye(d, dtype=complex), proj_rest)
                    rho = op @ rho @ op.conj().T
    return rho


class TestFactoredAgainstDense:
    @pytest.mark.parametrize(
        "gate_error,cavity",
        [
            (0.0, CavityParams.ideal()),
            (0.0, CavityParams(C0=0.5, C1=30.0, K_in_over_K=0.95, omega=0.1)),
            (0.02, CavityParams.ideal()),
            (0.05, CavityParams(C0=0.0, C1=50.0, K_in_over_K=0.98)),
        ],
    )
    def test_m1_both_sides(self, gate_error, cavity):
        q = QuditAmplitudes(1, np.sqrt([2 / 3, 1 / 3]))
        sa = scatter_register(q, cavity, "A", gate_error=gate_error)
        sb = scatter_register(None, cavity, "B", state=sa, gate_error=gate_error)
        joint = register_block_tensor(sb)
        b, d = 2, 4
        dense = joint.transpose(0, 2, 1, 3).reshape(b * d, b * d)
        ref = _brute_force_scatter(1, q.alphas.astype(complex), cavity, "AB", gate_error)
        np.testing.assert_allclose(dense, ref, atol=1e-11)

    def test_m2_with_noise(self):
        q = QuditAmplitudes(2, np.sqrt([0.4, 0.3, 0.2, 0.1]))
        cavity = CavityParams(C0=0.2, C1=25.0, K_in_over_K=0.97, omega=-0.05)
        sa = scatter_register(q, cavity, "A", gate_error=0.03)
        sb = scatter_register(None, cavity, "B", state=sa, gate_error=0.03)
        joint = register_block_tensor(sb)
        b, d = 4, 16
        dense = joint.transpose(0, 2, 1, 3).reshape(b * d, b * d)
        ref = _brute_force_scatter(2, q.alphas.astype(complex), cavity, "AB", 0.03)
        np.testing.assert_allclose(dense, ref, atol=1e-11)


class TestValidation:
    def test_bad_side(self):
        q = QuditAmplitudes.uniform(1)
        with pytest.raises(ValueError):
            scatter_register(q, CavityParams.ideal(), "C")

    def test_requires_input(self):
        with pytest.raises(ValueError):
            scatter_register(None, CavityParams.ideal(), "A")

    def test_initial_state_from_vector(self):
        state = initial_register_state(np.array([1.0, 0.0]))
        assert state.m == 1
        assert state.blocks["A"].shape == (1, 2, 2, 2, 2)
