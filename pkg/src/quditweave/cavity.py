"""Cavity reflection coefficients and time-bin-conditioned spin scattering.

Scattering model
----------------
At time bin ``t`` a Hadamard is applied to every register qubit whose
schedule bit is set (qubit ``j+1``, 1-based, is scheduled iff bit ``j`` of
``t`` is 1), the arriving pulse reflects off every qubit's cavity with the
conditional coefficients ``diag(r0, r1)``, and the Hadamards are undone.
Only the photon branch occupying bin ``t`` sees the reflection; the
Hadamards (and their gate noise) act on every branch.

Representation
--------------
All operations are single-qubit and at most branch-controlled, so the joint
photon+registers state stays factorized per photon branch pair (n, n'):

    rho = sum_{n,n'} g_n conj(g_{n'}) |n><n'| (x) prod_q M_q[n, n']

where each ``M_q`` is a table of 2x2 cross blocks, one per branch pair.
This is exact for depolarizing gate noise of any strength and keeps five
pairs (a 15-qubit joint system) tractable: blocks evolve with vectorized
2x2 algebra and the 2m-qubit register is only materialized at assembly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .source import NoisyQudit, QuditAmplitudes
from .states import H as HADAMARD

SIDES = ("A", "B")


@dataclass(frozen=True)
class CavityParams:
    """Dimensionless single-sided cavity parameters.

    Rates are expressed relative to the total cavity linewidth: ``omega`` in
    units of K, ``gamma0``/``gamma1`` as ratios gamma_i / K, and the
    transition detunings ``Delta0``/``Delta1`` in units of gamma0 / gamma1.
    ``C0`` and ``C1`` are the cooperativities of the uncoupled and coupled
    spin states; ``C0 = 0`` recovers the three-level picture.
    """

    C0: float = 0.0
    C1: float = math.inf
    K_in_over_K: float = 1.0
    omega: float = 0.0
    Delta0: float = 0.0
    Delta1: float = 0.0
    gamma0: float = 1.0
    gamma1: float = 1.0

    def __post_init__(self):
        if self.C0 < 0 or self.C1 < 0:
            raise ValueError("cooperativities must be nonnegative")
        if not 0.0 <= self.K_in_over_K <= 1.0:
            raise ValueError("K_in/K must lie in [0, 1]")

    @classmethod
    def ideal(cls) -> "CavityParams":
        return cls()


def reflection_coefficients(p: CavityParams) -> tuple[complex, complex]:
    """Conditional reflection coefficients (r0, r1) of the spin-cavity system.

    r_i = 1 - (K_in/K) / ( -i w/K + 1/2 + C_i / ( -i (w + D_i)/gamma_i + 1/2 ) )

    Infinite cooperativity sends the emitter term to infinity and the
    coefficient to exactly 1.
    """

    def one(c: float, delta: float, gamma: float) -> complex:
        if math.isinf(c):
            return 1.0 + 0.0j
        emitter = c / (-1j * (p.omega / gamma + delta) + 0.5)
        return 1.0 - p.K_in_over_K / (-1j * p.omega + 0.5 + emitter)

    r0 = one(p.C0, p.Delta0, p.gamma0)
    r1 = one(p.C1, p.Delta1, p.gamma1)
    return r0, r1


def hadamard_schedule(m: int, n: int) -> set[int]:
    """Qubits (1-based) that receive Hadamards around time bin ``n``.

    Qubit j is included iff bit j-1 of n is set, so the first qubit follows
    the least significant bit.
    """
    if not 0 <= n < 2**m:
        raise ValueError(f"time bin {n} outside [0, {2**m})")
    return {j + 1 for j in range(m) if (n >> j) & 1}


# ---------------------------------------------------------------------------
# Branch-factored register state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntangledRegisterState:
    """Joint photon + register state in branch-factored form.

    ``amplitudes`` are the photon branch amplitudes g_n.  ``blocks`` maps
    side -> array of shape (m, 2^m, 2^m, 2, 2): per qubit of that side, the
    2x2 cross block for every photon branch pair (n, n').  In the ideal
    noiseless case the diagonal blocks are |b><b| with b the qubit's bit of
    n, which is the reversed-binary spin pattern.
    """

    m: int
    amplitudes: np.ndarray
    blocks: dict

    @property
    def n_bins(self) -> int:
        return 2**self.m


def _fresh_blocks(m: int) -> np.ndarray:
    b = 2**m
    arr = np.zeros((m, b, b, 2, 2), dtype=complex)
    arr[..., 0, 0] = 1.0
    return arr


def initial_register_state(q) -> EntangledRegisterState:
    """Register state before any scattering: all spins in |0>."""
    if isinstance(q, (QuditAmplitudes, NoisyQudit)):
        m = q.m
        amps = np.asarray(
            q.alphas if isinstance(q, QuditAmplitudes) else q.amplitudes, dtype=complex
        )
    else:
        amps = np.asarray(q, dtype=complex)
        m = amps.shape[0].bit_length() - 1
        if 2**m != amps.shape[0]:
            raise ValueError("amplitude vector length must be a power of two")
    return EntangledRegisterState(
        m, amps.copy(), {"A": _fresh_blocks(m), "B": _fresh_blocks(m)}
    )


def _cross_hadamard(blocks: np.ndarray) -> np.ndarray:
    return np.einsum("ab,nmbc,dc->nmad", HADAMARD, blocks, HADAMARD)


def _cross_depolarize(blocks: np.ndarray, p: float) -> np.ndarray:
    if p == 0.0:
        return blocks
    traces = np.trace(blocks, axis1=-2, axis2=-1)
    mixed = np.zeros_like(blocks)
    mixed[..., 0, 0] = traces / 2.0
    mixed[..., 1, 1] = traces / 2.0
    return (1.0 - p) * blocks + p * mixed


def _scatter_qubit_blocks(
    blocks: np.ndarray, j: int, m: int, r0: complex, r1: complex, gate_error: float
) -> np.ndarray:
    """Evolve one qubit's cross-block table through all time bins.

    Within bin t the qubit sees: scheduled Hadamard + its depolarizing noise,
    the branch-t reflection, then the closing Hadamard + noise.  Reflection
    acts on row n = t from the left and column n' = t from the right.
    """
    out = blocks.copy()
    refl = np.array([[r0, 0.0], [0.0, r1]], dtype=complex)
    refl_dag = refl.conj().T
    for t in range(2**m):
        scheduled = (t >> j) & 1
        if scheduled:
            out = _cross_hadamard(out)
            out = _cross_depolarize(out, gate_error)
        out[t, :] = np.einsum("ab,nbc->nac", refl, out[t, :])
        out[:, t] = np.einsum("nab,bc->nac", out[:, t], refl_dag)
        if scheduled:
            out = _cross_hadamard(out)
            out = _cross_depolarize(out, gate_error)
    return out


def scatter_register(
    q, params: CavityParams, side: str, state: EntangledRegisterState = None,
    gate_error: float = 0.0,
) -> EntangledRegisterState:
    """Scatter the qudit off one side's register.

    ``q`` supplies the photon amplitudes when ``state`` is None (first
    scattering); when a state is given it carries the amplitudes and ``q``
    may be None.  Gate noise is a depolarizing channel of probability
    ``gate_error`` after every Hadamard.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    if not 0.0 <= gate_error <= 1.0:
        raise ValueError("gate_error must be a probability")
    if state is None:
        if q is None:
            raise ValueError("either a qudit or a register state is required")
        state = initial_register_state(q)
    r0, r1 = reflection_coefficients(params)
    new_side = np.stack(
        [
            _scatter_qubit_blocks(state.blocks[side][jj], jj, state.m, r0, r1, gate_error)
            for jj in range(state.m)
        ]
    )
    blocks = dict(state.blocks)
    blocks[side] = new_side
    return EntangledRegisterState(state.m, state.amplitudes, blocks)


# ---------------------------------------------------------------------------
# Assembly of the 2m-qubit register density matrix
# ---------------------------------------------------------------------------


def _qubit_block_list(state: EntangledRegisterState) -> list[np.ndarray]:
    """Cross blocks in global qubit order: A_0, B_0, A_1, B_1, ..."""
    out = []
    for pair in range(state.m):
        out.append(state.blocks["A"][pair])
        out.append(state.blocks["B"][pair])
    return out


def _group_product(block_list) -> np.ndarray:
    """Progressive Kronecker product over qubits, ascending significance."""
    b = block_list[0].shape[0]
    t = np.ones((b, b, 1, 1), dtype=complex)
    for mq in block_list:
        d = t.shape[2]
        t = np.einsum("nmab,nmcd->nmcadb", t, mq).reshape(b, b, 2 * d, 2 * d)
    return t


def assemble_register(weights: np.ndarray, block_list) -> np.ndarray:
    """sum_{n,n'} W[n,n'] prod_q M_q[n,n'] as a dense 2m-qubit matrix.

    ``weights`` is the branch weight matrix (outer product of heralded branch
    amplitudes, possibly averaged over noise samples); ``block_list`` gives
    one cross-block table per qubit in ascending global order.
    """
    nq = len(block_list)
    half = nq // 2
    low = _group_product(block_list[:half]) if half else None
    high = _group_product(block_list[half:])
    if low is None:
        return np.einsum("nm,nmcd->cd", weights, high)
    rho = np.einsum("nm,nmab,nmcd->cadb", weights, low, high, optimize=True)
    d = low.shape[2] * high.shape[2]
    return rho.reshape(d, d)


def register_block_tensor(state: EntangledRegisterState) -> np.ndarray:
    """Unsummed joint tensor J[n, n'] = g_n conj(g_n') prod_q M_q[n,n'].

    Shape (2^m, 2^m, 4^m, 4^m); intended for tests at small m where the
    photon-register state is inspected directly.
    """
    blocks = _group_product(_qubit_block_list(state))
    g = state.amplitudes
    return g[:, None, None, None] * g.conj()[None, :, None, None] * blocks


def branch_traces(state: EntangledRegisterState) -> np.ndarray:
    """Trace of the register factor on each diagonal branch.

    Ideal reflections preserve these at 1; lossy cavities (|r| < 1) shrink
    them, which is booked as heralded loss.
    """
    diag = np.ones(state.n_bins)
    for blocks in _qubit_block_list(state):
        tr = np.trace(blocks, axis1=-2, axis2=-1)
        diag = diag * np.real(np.einsum("nn->n", tr))
    return diag
