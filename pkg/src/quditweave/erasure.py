"""Switch-free time-bin erasure through concatenated beamsplitter delay loops.

A photon entering a chain of ``s`` delay loops can reach the detector at bin
``u`` along many paths; the interference of those paths is captured by the
integer coefficients

    Y(s, u, n) = sum_{t=1}^{min(s, u-n)} (-1)^{t+1} C(s, t) C(u-n-1, t-1),

computed here in exact integer arithmetic because the sign pattern decides
whether a detection bin heralds a usable state.  When all Y share one sign
over the 2^m source bins, the initial amplitudes can be tuned so every
branch arrives at the detector with equal magnitude, which erases the
time-bin information.

Two routes are provided for every quantity: closed forms built from Y, and
an exact single-photon amplitude propagation through the beamsplitter
network (:func:`simulate_interferometer`) that serves as the independent
oracle for the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from .source import QuditAmplitudes

# Beamsplitter convention: symmetric coupler, transmission 1, phase i on the
# cross ports; the delay adds one time bin and a loss beamsplitter with
# amplitude sqrt(1 - eta) toward the kept mode.
_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class SignConsistencyError(ValueError):
    """The requested (s, u) detection setting cannot herald all branches."""


@dataclass(frozen=True)
class LoopConfig:
    """Erasure network: loop count s, detection bin u, per-loop loss eta."""

    s: int
    u: int
    eta: float = 0.0

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("loop count must be >= 1")
        if self.u < 0:
            raise ValueError("detection bin must be nonnegative")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("per-loop loss must lie in [0, 1)")


@dataclass(frozen=True)
class LossBudget:
    """Heralded losses: per-interaction local loss, link loss, loop loss."""

    eta_AB: float = 0.0
    eta_0: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        for name in ("eta_AB", "eta_0", "eta"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name}={v} outside [0, 1)")


@dataclass(frozen=True)
class ErasureOutcome:
    """Designed erasure step: probability, compensation and phase fixes."""

    success_probability: float
    compensation: QuditAmplitudes
    phase_corrections: tuple


def y_coefficient(s: int, u: int, n: int) -> int:
    """Interference coefficient Y(s, u, n), exact integer arithmetic."""
    if s < 1:
        raise ValueError("loop count must be >= 1")
    if not u > n >= 0:
        raise ValueError("need detection bin u > source bin n >= 0")
    d = u - n
    total = 0
    for t in range(1, min(s, d) + 1):
        total += (-1) ** (t + 1) * comb(s, t) * comb(d - 1, t - 1)
    return total


def sign_consistent(s: int, u: int, m: int) -> bool:
    """True when Y(s, u, n) keeps one strict sign for all n < 2^m."""
    if u < 2**m:
        return False
    ys = [y_coefficient(s, u, n) for n in range(2**m)]
    return all(y > 0 for y in ys) or all(y < 0 for y in ys)


def compensation_amplitudes(s: int, u: int, m: int, eta: float = 0.0) -> QuditAmplitudes:
    """Source amplitudes that flatten the detector arrivals at bin u.

    alpha_n^2 = 1 / sum_k |Y(s,u,n) / Y(s,u,k)|^2 ((1-eta)/2)^(k-n)

    Only defined for sign-consistent (s, u); the provenance of the result
    records the loop configuration it compensates.
    """
    if not sign_consistent(s, u, m):
        raise SignConsistencyError(
            f"(s={s}, u={u}) is not sign-consistent for m={m}"
        )
    x = 2**m
    ys = np.array([y_coefficient(s, u, n) for n in range(x)], dtype=float)
    r = (1.0 - eta) / 2.0
    # alpha_n^2 proportional to r^n / Y_n^2
    weights = r ** np.arange(x) / ys**2
    a2 = weights / weights.sum()
    return QuditAmplitudes(m, np.sqrt(a2), provenance=LoopConfig(s, u, eta))


def erasure_success_probability(s: int, u: int, m: int, eta: float = 0.0) -> float:
    """Detection probability at bin u with compensated amplitudes.

    P = [2^m (1-eta)^u / 2^(s+u)] / sum_k |1/Y(s,u,k)|^2 ((1-eta)/2)^k
    """
    if not sign_consistent(s, u, m):
        raise SignConsistencyError(
            f"(s={s}, u={u}) is not sign-consistent for m={m}"
        )
    x = 2**m
    ys = np.array([y_coefficient(s, u, n) for n in range(x)], dtype=float)
    r = (1.0 - eta) / 2.0
    denom = float(np.sum(r ** np.arange(x) / ys**2))
    return float(2**m * (1.0 - eta) ** u / 2.0 ** (s + u) / denom)


def single_loop_total_probability(m: int, eta: float = 0.0) -> float:
    """Summed success probability of the single loop over all bins u >= 2^m.

    With one loop every late detection heralds and the compensation does not
    depend on u, so the per-bin series is geometric with ratio (1-eta)/2 and
    is summed in closed form.  Lossless this equals 2^(m-1) / (2^(2^m) - 1).
    """
    if m < 1:
        raise ValueError("pair count must be >= 1")
    x = 2**m
    r = (1.0 - eta) / 2.0
    denom = float(np.sum(r ** np.arange(x)))  # sum_k r^k over source bins
    first = 2**m * (1.0 - eta) ** x / 2.0 ** (1 + x) / denom
    return first / (1.0 - r)


def total_success_probability(m: int, budget: LossBudget, p_erasure: float) -> float:
    """Fold local and transmission losses into the erasure probability."""
    return (1.0 - budget.eta_AB) ** m * (1.0 - budget.eta_0) * p_erasure


@dataclass(frozen=True)
class LoopSearchResult:
    s: int
    u: int
    probability: float


def optimal_loop_config(
    m: int,
    eta: float = 0.0,
    s_max: int = 4,
    u_max: Optional[int] = None,
    s_min: int = 1,
) -> Optional[LoopSearchResult]:
    """Best loop configuration within the given ranges.

    Candidates are every sign-consistent (s, u) with s >= 2, scored by
    :func:`erasure_success_probability`, plus (for s = 1) the u-summed total
    of :func:`single_loop_total_probability`, since a single loop heralds on
    any bin at or after 2^m and its compensation is u-independent.  Ties go
    to smaller s, then smaller u.  Returns None when no candidate exists in
    range.
    """
    x = 2**m
    if u_max is None:
        u_max = x + 4 * s_max
    best: Optional[LoopSearchResult] = None
    for s in range(s_min, s_max + 1):
        if s == 1:
            if u_max >= x:
                cand = LoopSearchResult(1, x, single_loop_total_probability(m, eta))
                if best is None or cand.probability > best.probability:
                    best = cand
            continue
        for u in range(x, u_max + 1):
            if not sign_consistent(s, u, m):
                continue
            p = erasure_success_probability(s, u, m, eta)
            if best is None or p > best.probability:
                best = LoopSearchResult(s, u, p)
    return best


def impulse_response(s: int, d: int, eta: float = 0.0) -> complex:
    """Detector amplitude for a photon injected d bins before detection.

    Closed form: (i/sqrt2)^s at d=0, and for d >= 1

        (i/sqrt2)^(s-1) Y(s, d) H(d),   H(d) = i^(d-1) (1-eta)^(d/2) / 2^((d+1)/2).
    """
    if d < 0:
        return 0.0j
    if d == 0:
        return (1j * _INV_SQRT2) ** s
    y = y_coefficient(s, d, 0)
    h = 1j ** (d - 1) * (1.0 - eta) ** (d / 2.0) / 2.0 ** ((d + 1) / 2.0)
    return (1j * _INV_SQRT2) ** (s - 1) * y * h


def phase_corrections(m: int) -> tuple:
    """Single-qubit gates removing the residual i^(-2^p) branch phases.

    After heralding, pair p carries phase i^(-2^p) on its |11> component:
    pair 0 needs an S gate (cancels -i), pair 1 a Z gate (cancels -1), and
    pairs 2 and up are already clean.  Apply each gate to one qubit of the
    pair (the package applies them on Bob's side).
    """
    if m < 1:
        raise ValueError("pair count must be >= 1")
    gates = []
    for p in range(m):
        residual = 1j ** (-(2**p))
        gate = np.diag([1.0, np.conj(residual)]).astype(complex)
        gates.append(gate)
    return tuple(gates)


def design_erasure(m: int, loop: LoopConfig) -> ErasureOutcome:
    """Compensation, success probability and phase fixes for one network.

    For s = 1 the success probability is the u-summed single-loop total and
    any detection at or after bin 2^m heralds; for s >= 2 only the announced
    bin ``loop.u`` heralds.
    """
    comp = compensation_amplitudes(loop.s, loop.u, m, loop.eta)
    if loop.s == 1:
        prob = single_loop_total_probability(m, loop.eta)
    else:
        prob = erasure_success_probability(loop.s, loop.u, m, loop.eta)
    return ErasureOutcome(prob, comp, phase_corrections(m))


# ---------------------------------------------------------------------------
# Independent oracle: exact amplitude propagation through the network
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetectionTable:
    """Per-branch detector amplitudes from the network propagation.

    ``amplitudes[n, u]`` is the joint amplitude for source bin n to click at
    bin u (the register factor of branch n rides along unchanged).  Loss
    amplitudes are accumulated into ``lost_probability``; whatever is still
    circulating in the delays at the time horizon appears in
    ``residual_probability``.
    """

    m: int
    amplitudes: np.ndarray
    lost_probability: float
    residual_probability: float

    def detection_probability(self, u: int) -> float:
        """Click probability at bin u; branches add incoherently because the
        register states are orthogonal."""
        return float(np.sum(np.abs(self.amplitudes[:, u]) ** 2))

    def post_detection_branches(self, u: int) -> np.ndarray:
        """Unnormalized branch amplitudes conditioned on a click at bin u."""
        return self.amplitudes[:, u].copy()

    def heralding_complete(self, u: int, tol: float = 1e-12) -> bool:
        """A click at u heralds only if every branch can reach it."""
        if u < 2**self.m:
            return False
        return bool(np.all(np.abs(self.amplitudes[:, u]) > tol))

    def probability_accounting(self) -> tuple[float, float, float]:
        detected = float(np.sum(np.abs(self.amplitudes) ** 2))
        return detected, self.lost_probability, self.residual_probability


def simulate_interferometer(q, s: int, eta: float = 0.0, t_max: Optional[int] = None) -> DetectionTable:
    """Propagate each source branch through s concatenated delay loops.

    Walks the beamsplitter network port by port and time step by time step:
    loop k's coupler sends (i in1 + delay)/sqrt2 onward and
    (in1 + i delay)/sqrt2 into its delay line, which feeds back one bin
    later attenuated by sqrt(1 - eta).  No interference coefficients or
    closed forms enter; this is the oracle the Y-based formulas are checked
    against.
    """
    if isinstance(q, QuditAmplitudes):
        m, amps = q.m, q.alphas.astype(complex)
    elif hasattr(q, "amplitudes"):
        m, amps = q.m, np.asarray(q.amplitudes, dtype=complex)
    else:
        amps = np.asarray(q, dtype=complex)
        m = amps.shape[0].bit_length() - 1
        if 2**m != amps.shape[0]:
            raise ValueError("amplitude vector length must be a power of two")
    if s < 1:
        raise ValueError("loop count must be >= 1")
    if t_max is None:
        t_max = 2**m + 8 * s + 40
    if t_max < 2**m:
        raise ValueError("time horizon must reach bin 2^m")

    n_bins = 2**m
    table = np.zeros((n_bins, t_max + 1), dtype=complex)
    lost = 0.0
    residual = 0.0
    keep = np.sqrt(1.0 - eta)
    for n in range(n_bins):
        if amps[n] == 0:
            continue
        delays = np.zeros(s, dtype=complex)  # amplitude re-entering loop k now
        for t in range(t_max + 1):
            signal = amps[n] if t == n else 0.0j
            new_delays = np.zeros_like(delays)
            for k in range(s):
                onward = (1j * signal + delays[k]) * _INV_SQRT2
                into_delay = (signal + 1j * delays[k]) * _INV_SQRT2
                new_delays[k] = keep * into_delay
                lost += eta * abs(into_delay) ** 2
                signal = onward
            table[n, t] = signal
            delays = new_delays
        residual += float(np.sum(np.abs(delays) ** 2))
    return DetectionTable(m, table, lost, residual)
