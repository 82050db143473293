"""Time-bin photonic qudit source: ideal amplitudes and laser-noise sampling.

The source emits a single photon spread over ``2**m`` time bins with real,
nonnegative amplitudes.  Each bin is produced by one driving pulse whose
strength sets the emission probability conditioned on no earlier emission,
so the pulse probabilities follow a depleting-residual recursion.

Laser phase and amplitude fluctuations enter as per-bin Gaussian draws
``theta_n`` (phase) and ``zeta_n`` (pulse-strength error).  The zeta variance
is scaled so the aggregate amplitude error sum_n (alpha_n^2 / P_n) zeta_n is
N(0, sigma^2) regardless of the amplitude profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True)
class QuditAmplitudes:
    """Real nonnegative time-bin amplitudes alpha_n with unit square sum.

    ``provenance`` optionally records the erasure-loop configuration the
    amplitudes were compensated for (set by the erasure module).
    """

    m: int
    alphas: np.ndarray
    provenance: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.alphas, dtype=float)
        if arr.shape != (2**self.m,):
            raise ValueError(f"expected {2**self.m} amplitudes, got shape {arr.shape}")
        if np.any(arr < -1e-12):
            raise ValueError("amplitudes must be nonnegative")
        norm2 = float(np.sum(arr**2))
        if abs(norm2 - 1.0) > 1e-9:
            raise ValueError(f"squared amplitudes sum to {norm2}, expected 1")
        arr = np.clip(arr, 0.0, None) / np.sqrt(norm2)
        arr.setflags(write=False)
        object.__setattr__(self, "alphas", arr)

    @classmethod
    def uniform(cls, m: int) -> "QuditAmplitudes":
        n = 2**m
        return cls(m, np.full(n, 1.0 / np.sqrt(n)))


@dataclass(frozen=True)
class SourceNoise:
    """Standard deviation of the laser phase/amplitude fluctuations."""

    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class NoisyQudit:
    """One sampled emission of the source.

    ``amplitudes`` is renormalized to unit norm; ``prenorm`` records the norm
    before renormalization for diagnostics.  ``theta`` and ``zeta`` are the
    raw Gaussian draws and ``clamp_count`` the number of bins whose sampled
    amplitude factor went negative and was clamped to zero.
    """

    m: int
    amplitudes: np.ndarray
    prenorm: float
    theta: np.ndarray
    zeta: np.ndarray
    clamp_count: int


def pulse_probabilities(q: QuditAmplitudes) -> np.ndarray:
    """Per-bin driving probabilities P_n that realize the amplitudes.

    P_0 = alpha_0^2 and P_n = alpha_n^2 / (1 - sum_{k<n} alpha_k^2).  Once the
    residual population drops below ``RESIDUAL_FLOOR`` the remaining bins are
    degenerate; their probabilities are reported as 0 rather than NaN (see
    :func:`has_degenerate_tail`).
    """
    a2 = q.alphas**2
    n = a2.shape[0]
    probs = np.zeros(n)
    residual = 1.0
    for i in range(n):
        if residual < RESIDUAL_FLOOR:
            probs[i] = 0.0
        else:
            probs[i] = min(a2[i] / residual, 1.0)
        residual -= a2[i]
    return probs


def has_degenerate_tail(q: QuditAmplitudes) -> bool:
    """True when trailing bins carry no population and their P_n is undefined."""
    a2 = q.alphas**2
    residuals = 1.0 - np.concatenate([[0.0], np.cumsum(a2[:-1])])
    return bool(np.any(residuals < RESIDUAL_FLOOR))


def zeta_std(q: QuditAmplitudes) -> float:
    """Standard deviation scale for the per-bin pulse-strength error.

    Chosen so sum_n (alpha_n^2 / P_n) zeta_n has variance sigma^2.  Bins with
    zero amplitude do not contribute.
    """
    probs = pulse_probabilities(q)
    mask = probs > 0
    ratios = np.zeros_like(probs)
    ratios[mask] = q.alphas[mask] ** 2 / probs[mask]
    denom = float(np.sum(ratios**2))
    if denom <= 0:
        raise ValueError("amplitude profile leaves no bin to perturb")
    return 1.0 / np.sqrt(denom)


def sample_noisy_qudit(q: QuditAmplitudes, noise: SourceNoise, seed) -> NoisyQudit:
    """Draw one noisy emission: (1 + zeta_n / 2 P_n) alpha_n e^{i theta_n}.

    ``seed`` may be an int, a SeedSequence, or a Generator; fixed seeds give
    reproducible samples.  The amplitude vector is renormalized after
    sampling, with the pre-normalization norm recorded.  Amplitude factors
    that go negative are clamped to zero and counted.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = 2**q.m
    sigma = noise.sigma
    if sigma == 0.0:
        amps = q.alphas.astype(complex)
        return NoisyQudit(q.m, amps, 1.0, np.zeros(n), np.zeros(n), 0)

    theta = rng.normal(0.0, sigma, size=n)
    zeta = rng.normal(0.0, sigma * zeta_std(q), size=n)
    probs = pulse_probabilities(q)
    factors = np.ones(n)
    mask = probs > 0
    factors[mask] = 1.0 + zeta[mask] / (2.0 * probs[mask])
    clamp_count = int(np.count_nonzero(factors < 0))
    factors = np.clip(factors, 0.0, None)
    raw = factors * q.alphas * np.exp(1j * theta)
    prenorm = float(np.linalg.norm(raw))
    if prenorm == 0.0:
        raise ValueError("sampled qudit collapsed to zero amplitude")
    amps = raw / prenorm
    amps.setflags(write=False)
    return NoisyQudit(q.m, amps, prenorm, theta, zeta, clamp_count)
