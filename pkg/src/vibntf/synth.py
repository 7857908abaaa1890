"""Random vibrato square-wave notes.

A note is a band-limited square wave (odd harmonics with ``1/k`` amplitudes)
whose partials all share the sinusoidal modulation
``kappa(tau) = depth * sin(2 pi rate tau)``, i.e. partial ``k`` has
instantaneous angular frequency ``(1 + kappa(tau)) * 2 pi k f0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer

__all__ = [
    "A3_HZ",
    "VibratoParams",
    "SynthRanges",
    "note_frequency",
    "max_partials",
    "sample_vibrato_params",
    "render_vibrato_square",
    "fsfr_trajectory",
]

A3_HZ = 220.0
PEAK = 0.9


@dataclass(frozen=True)
class VibratoParams:
    f0: float
    num_partials: int
    depth: float
    rate: float
    phase0: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError("f0 must be positive")
        if self.num_partials < 1:
            raise ValueError("need at least one partial")
        if not 0 <= self.depth < 1:
            raise ValueError("depth must lie in [0, 1)")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        phases = tuple(float(p) for p in self.phase0) or (0.0,) * self.num_partials
        if len(phases) != self.num_partials:
            raise ValueError("need one initial phase per partial")
        object.__setattr__(self, "phase0", phases)

    def harmonic(self, p: int) -> int:
        """Harmonic number of the ``p``-th partial (1-based)."""
        return 2 * p - 1

    def to_dict(self) -> dict:
        return {
            "f0": self.f0,
            "num_partials": self.num_partials,
            "depth": self.depth,
            "rate": self.rate,
            "phase0": list(self.phase0),
        }


@dataclass(frozen=True)
class SynthRanges:
    # semitone offsets from A3, inclusive; 0..23 spans A3..G#5
    note_range: tuple[int, int] = (0, 23)
    partials_range: tuple[int, int] = (10, 30)
    depth_range: tuple[float, float] = (0.05, 0.20)
    rate_range_hz: tuple[float, float] = (0.5, 10.0)

    def __post_init__(self):
        for name in ("note_range", "partials_range", "depth_range", "rate_range_hz"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if self.rate_range_hz[0] <= 0:
            raise ValueError("vibrato rates must be positive for log-uniform sampling")


def note_frequency(semitones_above_a3: int) -> float:
    return A3_HZ * 2.0 ** (semitones_above_a3 / 12.0)


def max_partials(f0: float, depth: float, sample_rate: int) -> int:
    """Largest partial count whose top harmonic stays below Nyquist at peak deviation."""
    top = (sample_rate / 2) / (f0 * (1 + depth))  # harmonic number bound, exclusive
    p = math.floor((top + 1) / 2)
    while p > 0 and (2 * p - 1) * f0 * (1 + depth) >= sample_rate / 2:
        p -= 1
    return p


def sample_vibrato_params(rng: np.random.Generator, ranges: SynthRanges = SynthRanges(), sample_rate: int = 44100) -> VibratoParams:
    """Draw note, partial count, depth, rate and initial phases, in that order."""
    k = int(rng.integers(ranges.note_range[0], ranges.note_range[1] + 1))
    f0 = note_frequency(k)
    partials = int(rng.integers(ranges.partials_range[0], ranges.partials_range[1] + 1))
    depth = float(rng.uniform(*ranges.depth_range))
    lo, hi = ranges.rate_range_hz
    rate = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
    partials = min(partials, max_partials(f0, depth, sample_rate))
    phases = rng.uniform(0.0, 2 * math.pi, size=partials)
    return VibratoParams(f0, partials, depth, rate, tuple(phases))


def _phase_warp(tau: np.ndarray, depth: float, rate: float) -> np.ndarray:
    """``tau + integral_0^tau kappa``, closed form."""
    w = 2 * math.pi * rate
    return tau + depth * (1.0 - np.cos(w * tau)) / w


def render_vibrato_square(params: VibratoParams, duration: float, sample_rate: int = 44100) -> AudioBuffer:
    if not duration > 0:
        raise ValueError("duration must be positive")
    if params.harmonic(params.num_partials) * params.f0 * (1 + params.depth) >= sample_rate / 2:
        raise ValueError("highest partial aliases; reduce num_partials")
    n = int(round(duration * sample_rate))
    tau = np.arange(n) / sample_rate
    warped = _phase_warp(tau, params.depth, params.rate)
    x = np.zeros(n)
    for p in range(1, params.num_partials + 1):
        k = params.harmonic(p)
        x += np.sin(params.phase0[p - 1] + 2 * math.pi * k * params.f0 * warped) / k
    peak = np.max(np.abs(x)) if n else 0.0
    if peak > 0:
        x *= PEAK / peak
    return AudioBuffer(x, sample_rate)


def fsfr_trajectory(params: VibratoParams, tau: np.ndarray) -> np.ndarray:
    """Analytic FSFR ``kappa'(tau) / (1 + kappa(tau))`` shared by every partial."""
    w = 2 * math.pi * params.rate
    kappa = params.depth * np.sin(w * tau)
    return params.depth * w * np.cos(w * tau) / (1 + kappa)
