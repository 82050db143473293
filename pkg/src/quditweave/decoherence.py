"""Memory and gate-error channels.

Register qubits idle while the photon travels and the heralding message
returns, so Alice waits a full round trip (2L/c) and Bob half of one (L/c).
During that wait each qubit sees a generalized amplitude damping channel
toward a thermal population set by ``a_beta``, followed by dephasing.  The
channels act on each qubit independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import DensityMatrix, I2, KrausSet, Z, _as_matrix, apply_kraus_raw


@dataclass(frozen=True)
class MemoryParams:
    """Distances in km, speeds in km/s, times in seconds."""

    L: float = 20.0
    c: float = 2.0e5
    T1: float = 10e-3
    Tp: float = 5e-3
    a_beta: float = 0.5

    def __post_init__(self):
        if self.L < 0 or self.c <= 0 or self.T1 <= 0 or self.Tp <= 0:
            raise ValueError("distances, speeds, and times must be positive")
        if not 0.0 <= self.a_beta <= 1.0:
            raise ValueError("a_beta must lie in [0, 1]")


def waiting_times(p: MemoryParams) -> tuple[float, float]:
    """(t_A, t_B): Alice waits the round trip, Bob the one-way trip."""
    return 2.0 * p.L / p.c, p.L / p.c


def dephasing_kraus(t: float, tp: float) -> KrausSet:
    """Dephasing channel scaling coherences by exp(-t/Tp)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    lam = np.exp(-t / tp)
    a0 = np.sqrt((1.0 + lam) / 2.0) * I2
    a1 = np.sqrt((1.0 - lam) / 2.0) * Z
    return KrausSet([a0, a1] if lam < 1.0 else [a0])


def amplitude_damping_kraus(t: float, t1: float, a_beta: float) -> KrausSet:
    """Generalized amplitude damping with thermal weight ``a_beta``.

    Four operators: decay toward |0> with weight a_beta and toward |1> with
    weight 1 - a_beta; the infinite-time populations are (a_beta, 1-a_beta).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    if not 0.0 <= a_beta <= 1.0:
        raise ValueError("a_beta must lie in [0, 1]")
    g = np.exp(-t / (2.0 * t1))
    drop = np.sqrt(max(0.0, 1.0 - g * g))
    e0 = np.sqrt(a_beta) * np.array([[1.0, 0.0], [0.0, g]], dtype=complex)
    e1 = np.sqrt(a_beta) * np.array([[0.0, drop], [0.0, 0.0]], dtype=complex)
    e2 = np.sqrt(1.0 - a_beta) * np.array([[g, 0.0], [0.0, 1.0]], dtype=complex)
    e3 = np.sqrt(1.0 - a_beta) * np.array([[0.0, 0.0], [drop, 0.0]], dtype=complex)
    ops = [op for op in (e0, e1, e2, e3) if np.abs(op).max() > 0]
    return KrausSet(ops)


def depolarizing_kraus(p: float) -> KrausSet:
    """Single-qubit depolarizing channel: rho -> (1-p) rho + p I/2."""
    from .states import PAULIS

    if not 0.0 <= p <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    if p == 0.0:
        return KrausSet.identity(1)
    w = [1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p]
    return KrausSet([np.sqrt(wi) * PAULIS[l] for wi, l in zip(w, "IXYZ")])


def memory_kraus(t: float, p: MemoryParams) -> KrausSet:
    """Composite per-qubit memory channel: damping first, then dephasing."""
    damp = amplitude_damping_kraus(t, p.T1, p.a_beta)
    deph = dephasing_kraus(t, p.Tp)
    ops = [a @ e for a in deph.operators for e in damp.operators]
    return KrausSet(ops)


def memory_channel(rho, p: MemoryParams, side_times: tuple[float, float] = None) -> DensityMatrix:
    """Apply the memory channel to every qubit of a 2m-qubit register.

    Alice's qubits (even indices) wait t_A, Bob's (odd indices) t_B; pass
    ``side_times`` to override the computed waiting times.
    """
    data = _as_matrix(rho).copy()
    dim = data.shape[0]
    n_qubits = dim.bit_length() - 1
    if 2**n_qubits != dim or n_qubits % 2:
        raise ValueError("expected a register of m entangled pairs (2m qubits)")
    t_a, t_b = waiting_times(p) if side_times is None else side_times
    kraus_a = memory_kraus(t_a, p).operators
    kraus_b = memory_kraus(t_b, p).operators
    for q in range(n_qubits):
        ops = kraus_a if q % 2 == 0 else kraus_b
        data = apply_kraus_raw(data, ops, [q], n_qubits)
    return DensityMatrix(data)
