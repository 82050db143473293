"""Dense density-matrix engine for small qubit registers.

Conventions used throughout the package:

* Computational-basis indices are little-endian: qubit ``q`` holds bit ``q``
  of the basis index, so qubit 0 is the least significant bit.
* Entangled pairs are interleaved, pair ``p`` lives on qubits ``(2p, 2p+1)``
  with Alice's half on qubit ``2p`` and Bob's half on qubit ``2p+1``.
* A multi-qubit operator handed to :func:`apply_unitary` / :func:`embed`
  uses ``targets[0]`` as the most significant bit of its own index, so a
  textbook CNOT matrix applied with ``targets=[c, t]`` has control ``c``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

# Shared drift tolerance for channel outputs (trace preservation, CPTP drift).
TOLERANCE = 1e-10

# Validation gates for state objects.
HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
POSITIVITY_ATOL = 1e-10

# Dense representation cap; larger registers must be handled by contraction.
MAX_QUBITS = 12

I2 = np.eye(2, dtype=complex)
X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
S = np.array([[1.0, 0.0], [0.0, 1.0j]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_LABELS = ("I", "X", "Y", "Z")

# Bell basis on one pair (Alice = qubit 0, Bob = qubit 1).  The order matches
# the single-sided Pauli error that creates each state from |Phi+>:
# index 0 <-> no error, 1 <-> X, 2 <-> Y, 3 <-> Z.
PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)
PSI_PLUS = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0)
PSI_MINUS = np.array([0.0, -1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0)
PHI_MINUS = np.array([1.0, 0.0, 0.0, -1.0], dtype=complex) / np.sqrt(2.0)
BELL_VECTORS = (PHI_PLUS, PSI_PLUS, PSI_MINUS, PHI_MINUS)
BELL_LABELS = ("phi_plus", "psi_plus", "psi_minus", "phi_minus")


class ToleranceError(ValueError):
    """A state or channel failed one of the numerical validity gates."""


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.data
    return np.asarray(rho, dtype=complex)


def _check_power_of_two(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim <= 0 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite operator on n qubits.

    Construction validates all three invariants unless ``validate=False``
    (reserved for internal hot paths that re-validate at module boundaries).
    """

    __slots__ = ("data",)

    def __init__(self, data, *, validate: bool = True):
        arr = np.array(data, dtype=complex, order="C")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        n = _check_power_of_two(arr.shape[0])
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the dense cap of {MAX_QUBITS}")
        if validate:
            if not np.allclose(arr, arr.conj().T, atol=HERMITICITY_ATOL):
                raise ToleranceError("matrix is not Hermitian within 1e-12")
            tr = arr.trace()
            if abs(tr - 1.0) > 1e-9:
                raise ToleranceError(f"trace {tr} deviates from 1 beyond tolerance")
            # Renormalize the benign float drift so downstream traces stay exact.
            arr = (arr + arr.conj().T) / (2.0 * tr.real)
            evals = np.linalg.eigvalsh(arr)
            if evals[0] < -POSITIVITY_ATOL:
                raise ToleranceError(f"negative eigenvalue {evals[0]:.3e}")
        arr.setflags(write=False)
        self.data = arr

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(n_qubits={self.n_qubits})"


class KrausSet:
    """A completely positive trace-preserving map given by Kraus operators."""

    __slots__ = ("operators",)

    def __init__(self, operators):
        ops = [np.asarray(op, dtype=complex) for op in operators]
        if not ops:
            raise ValueError("KrausSet needs at least one operator")
        shape = ops[0].shape
        if shape[0] != shape[1]:
            raise ValueError("Kraus operators must be square")
        for op in ops:
            if op.shape != shape:
                raise ValueError("Kraus operators must share one shape")
        total = sum(op.conj().T @ op for op in ops)
        if not np.allclose(total, np.eye(shape[0]), atol=1e-12):
            raise ToleranceError("Kraus completeness sum deviates from identity")
        self.operators = tuple(ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @classmethod
    def identity(cls, n_qubits: int = 1) -> "KrausSet":
        return cls([np.eye(2**n_qubits, dtype=complex)])


class PauliChannelParams:
    """Single-qubit Pauli channel probabilities (px, py, pz)."""

    __slots__ = ("px", "py", "pz")

    def __init__(self, px: float, py: float, pz: float):
        for name, p in (("px", px), ("py", py), ("pz", pz)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if px + py + pz > 1.0 + 1e-12:
            raise ValueError("px + py + pz exceeds 1")
        self.px, self.py, self.pz = float(px), float(py), float(pz)

    def weights(self) -> np.ndarray:
        """Probabilities over (I, X, Y, Z)."""
        return np.array([1.0 - self.px - self.py - self.pz, self.px, self.py, self.pz])

    def kraus(self) -> KrausSet:
        w = self.weights()
        ops = [np.sqrt(w[i]) * PAULIS[PAULI_LABELS[i]] for i in range(4) if w[i] > 0]
        return KrausSet(ops)

    def __repr__(self) -> str:  # pragma: no cover
        return f"PauliChannelParams(px={self.px}, py={self.py}, pz={self.pz})"


# ---------------------------------------------------------------------------
# Operator embedding and application
# ---------------------------------------------------------------------------

def _validate_targets(targets, n_qubits, op_dim):
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets {targets} are not distinct")
    for t in targets:
        if not 0 <= t < n_qubits:
            raise ValueError(f"target {t} outside register of {n_qubits} qubits")
    if op_dim != 2 ** len(targets):
        raise ValueError(
            f"operator dimension {op_dim} does not match {len(targets)} targets"
        )
    return targets


def apply_unitary_vec(vec: np.ndarray, op: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """Apply ``op`` to the listed qubits of a state vector."""
    targets = _validate_targets(targets, n_qubits, op.shape[0])
    k = len(targets)
    tens = np.asarray(vec, dtype=complex).reshape((2,) * n_qubits)
    axes = [n_qubits - 1 - t for t in targets]
    opt = op.reshape((2,) * (2 * k))
    tens = np.tensordot(opt, tens, axes=(list(range(k, 2 * k)), axes))
    tens = np.moveaxis(tens, range(k), axes)
    return tens.reshape(-1)


def _apply_left(data: np.ndarray, op: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """(op x I) @ data on the ket side of a density matrix."""
    k = len(targets)
    tens = data.reshape((2,) * (2 * n_qubits))
    axes = [n_qubits - 1 - t for t in targets]
    opt = op.reshape((2,) * (2 * k))
    tens = np.tensordot(opt, tens, axes=(list(range(k, 2 * k)), axes))
    tens = np.moveaxis(tens, range(k), axes)
    return tens.reshape(data.shape)


def _apply_right_dagger(data: np.ndarray, op: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """data @ (op x I)^dagger on the bra side of a density matrix."""
    k = len(targets)
    tens = data.reshape((2,) * (2 * n_qubits))
    axes = [2 * n_qubits - 1 - t for t in targets]
    opt = op.conj().reshape((2,) * (2 * k))
    tens = np.tensordot(opt, tens, axes=(list(range(k, 2 * k)), axes))
    tens = np.moveaxis(tens, range(k), axes)
    return tens.reshape(data.shape)


def apply_unitary(rho, op: np.ndarray, targets) -> np.ndarray:
    """U rho U^dagger with U acting on the listed qubits. Returns an ndarray."""
    data = _as_matrix(rho)
    n = _check_power_of_two(data.shape[0])
    targets = _validate_targets(targets, n, op.shape[0])
    out = _apply_left(data, op, targets, n)
    return _apply_right_dagger(out, op, targets, n)


def apply_channel(rho, kraus: KrausSet, targets) -> DensityMatrix:
    """Sum_j (K_j x I) rho (K_j x I)^dagger on the listed qubits.

    The output is Hermitian-symmetrized to suppress float drift and returned
    as a validated :class:`DensityMatrix`.
    """
    data = _as_matrix(rho)
    n = _check_power_of_two(data.shape[0])
    targets = _validate_targets(targets, n, kraus.dim)
    out = np.zeros_like(data)
    for op in kraus.operators:
        term = _apply_left(data, op, targets, n)
        out += _apply_right_dagger(term, op, targets, n)
    out = (out + out.conj().T) / 2.0
    return DensityMatrix(out)


def apply_kraus_raw(data: np.ndarray, kraus_ops, targets, n_qubits: int) -> np.ndarray:
    """Unvalidated channel application on a bare array (internal hot path)."""
    out = np.zeros_like(data)
    for op in kraus_ops:
        term = _apply_left(data, op, targets, n_qubits)
        out += _apply_right_dagger(term, op, targets, n_qubits)
    return (out + out.conj().T) / 2.0


def embed(op: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """Expand ``op`` on the listed qubits to a full 2^n x 2^n matrix."""
    dim = 2**n_qubits
    cols = []
    for j in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[j] = 1.0
        cols.append(apply_unitary_vec(e, op, targets, n_qubits))
    return np.column_stack(cols)


def partial_trace(rho, keep) -> np.ndarray:
    """Trace out all qubits not listed in ``keep``.

    Output qubit ``j`` is input qubit ``keep[j]``, so the list also permits
    reordering.
    """
    data = _as_matrix(rho)
    n = _check_power_of_two(data.shape[0])
    keep = list(keep)
    if len(set(keep)) != len(keep) or any(not 0 <= q < n for q in keep):
        raise ValueError(f"invalid keep list {keep} for {n} qubits")
    ket = {q: q for q in range(n)}
    bra = {q: (n + q if q in keep else q) for q in range(n)}
    operand = [ket[n - 1 - a] for a in range(n)] + [bra[n - 1 - a] for a in range(n)]
    out_idx = [ket[q] for q in reversed(keep)] + [bra[q] for q in reversed(keep)]
    tens = data.reshape((2,) * (2 * n))
    reduced = np.einsum(tens, operand, out_idx)
    d = 2 ** len(keep)
    return reduced.reshape(d, d)


# ---------------------------------------------------------------------------
# Distances and reference states
# ---------------------------------------------------------------------------

def fidelity(rho, psi) -> float:
    """<psi| rho |psi> for a pure target state."""
    data = _as_matrix(rho)
    vec = np.asarray(psi, dtype=complex).reshape(-1)
    if vec.shape[0] != data.shape[0]:
        raise ValueError(
            f"dimension mismatch: state dim {data.shape[0]}, vector dim {vec.shape[0]}"
        )
    return float(np.real(vec.conj() @ data @ vec))


def trace_distance(rho, sigma) -> float:
    """Half the sum of absolute eigenvalues of rho - sigma."""
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    diff = (diff + diff.conj().T) / 2.0
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def ideal_bell_vector(m: int) -> np.ndarray:
    """State vector of m |Phi+> pairs, pair p on qubits (2p, 2p+1)."""
    if not 1 <= m <= MAX_QUBITS // 2:
        raise ValueError(f"pair count m={m} outside supported range")
    return reduce(np.kron, [PHI_PLUS] * m)


def ideal_bell_register(m: int) -> DensityMatrix:
    """Density matrix of m perfect |Phi+> pairs."""
    vec = ideal_bell_vector(m)
    return DensityMatrix(np.outer(vec, vec.conj()))


def bell_diagonal(coeffs) -> np.ndarray:
    """Two-qubit state diagonal in the Bell basis.

    ``coeffs`` orders the weights as (Phi+, Psi+, Psi-, Phi-), matching the
    single-sided (I, X, Y, Z) error classes.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (4,) or np.any(c < -1e-12) or abs(c.sum() - 1.0) > 1e-9:
        raise ValueError("Bell-diagonal coefficients must be a probability 4-vector")
    out = np.zeros((4, 4), dtype=complex)
    for w, vec in zip(c, BELL_VECTORS):
        out += w * np.outer(vec, vec.conj())
    return out


def bell_coefficients(rho_pair) -> np.ndarray:
    """Diagonal weights of a two-qubit state in the Bell basis."""
    data = _as_matrix(rho_pair)
    if data.shape != (4, 4):
        raise ValueError("expected a two-qubit state")
    return np.array([np.real(vec.conj() @ data @ vec) for vec in BELL_VECTORS])


def werner_pair(f: float) -> np.ndarray:
    """Bell-diagonal pair with weight f on Phi+ and the rest spread evenly."""
    if not 0.0 <= f <= 1.0:
        raise ValueError("fidelity must be in [0, 1]")
    r = (1.0 - f) / 3.0
    return bell_diagonal([f, r, r, r])


def haar_random_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed pure state on n qubits."""
    dim = 2**n_qubits
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vec / np.linalg.norm(vec)
