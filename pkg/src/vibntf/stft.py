"""Short-time Fourier transform, least-squares inverse, and normalization.

Frame ``n`` is centred on sample ``n * hop`` of the input: the signal is
left-padded by ``fft_len // 2`` zeros and right-padded to cover
``T = ceil(len / hop) + 1`` frames. For 2 s at 44.1 kHz with a 1024-point
Hann window and hop 256 this gives F = 513 bins and T = 346 frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import get_window

from .audio import AudioBuffer
from .errors import DegenerateInputError, ShapeError

__all__ = [
    "StftConfig",
    "Spectrogram",
    "ProbGrid",
    "hann",
    "frame_count",
    "pad_signal",
    "stft_forward",
    "istft",
    "normalize_spectrogram",
    "export_magnitude_csv",
]


@dataclass(frozen=True)
class StftConfig:
    fft_len: int = 1024
    hop: int = 256
    window: str = "hann"

    def __post_init__(self):
        n, h = self.fft_len, self.hop
        if n < 2 or n & (n - 1):
            raise ValueError(f"fft_len must be a power of two, got {n}")
        if h < 1 or n % h or h > n // 2:
            raise ValueError(f"hop must divide fft_len and be at most fft_len/2, got {h}")
        if self.window != "hann":
            raise ValueError(f"only the Hann window is supported, got {self.window!r}")

    @property
    def num_bins(self) -> int:
        return self.fft_len // 2 + 1


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT grid, frequency bins along rows and hops along columns."""

    values: np.ndarray
    config: StftConfig
    sample_rate: int
    original_len: int

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.config.num_bins:
            raise ShapeError(
                f"expected {self.config.num_bins} frequency rows, got shape {self.values.shape}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray) -> "Spectrogram":
        return Spectrogram(values, self.config, self.sample_rate, self.original_len)


@dataclass(frozen=True, eq=False)
class ProbGrid:
    """Nonnegative F x T grid summing to one."""

    values: np.ndarray = field()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"ProbGrid must be 2-D, got shape {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("ProbGrid entries must be finite and nonnegative")
        if abs(v.sum() - 1.0) > 1e-12:
            raise ValueError(f"ProbGrid must sum to 1, got {v.sum()!r}")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def hann(n: int) -> np.ndarray:
    """Periodic (DFT-even) Hann window."""
    return get_window("hann", n, fftbins=True)


def frame_count(length: int, hop: int) -> int:
    return math.ceil(length / hop) + 1


def pad_signal(x: np.ndarray, config: StftConfig) -> np.ndarray:
    """Zero-pad ``x`` so that frame ``n`` is ``padded[n*hop : n*hop + fft_len]``."""
    n_frames = frame_count(len(x), config.hop)
    left = config.fft_len // 2
    total = (n_frames - 1) * config.hop + config.fft_len
    return np.pad(x, (left, total - left - len(x)))


def frames(padded: np.ndarray, config: StftConfig) -> np.ndarray:
    """Strided T x fft_len view of the frames of a padded signal."""
    view = np.lib.stride_tricks.sliding_window_view(padded, config.fft_len)
    return view[:: config.hop]


def stft_forward(buffer: AudioBuffer, config: StftConfig = StftConfig()) -> Spectrogram:
    if len(buffer) < 1:
        raise DegenerateInputError("cannot transform an empty buffer")
    padded = pad_signal(buffer.samples, config)
    spec = np.fft.rfft(frames(padded, config) * hann(config.fft_len), axis=1)
    return Spectrogram(np.ascontiguousarray(spec.T), config, buffer.sample_rate, len(buffer))


def istft(spec: Spectrogram) -> AudioBuffer:
    """Weighted overlap-add inverse with window-squared normalization."""
    config = spec.config
    n_bins, n_frames = spec.shape
    if n_frames != frame_count(spec.original_len, config.hop):
        raise ShapeError(
            f"{n_frames} frames is inconsistent with original length {spec.original_len}"
        )
    win = hann(config.fft_len)
    chunks = np.fft.irfft(spec.values.T, n=config.fft_len, axis=1) * win

    total = (n_frames - 1) * config.hop + config.fft_len
    out = np.zeros(total)
    norm = np.zeros(total)
    w2 = win * win
    for t in range(n_frames):
        start = t * config.hop
        out[start : start + config.fft_len] += chunks[t]
        norm[start : start + config.fft_len] += w2
    left = config.fft_len // 2
    sl = slice(left, left + spec.original_len)
    # frame centring guarantees norm >= 0.5 inside the signal support
    return AudioBuffer(out[sl] / norm[sl], spec.sample_rate)


def normalize_spectrogram(spec: Spectrogram) -> ProbGrid:
    """Magnitudes divided by their total, as an energy distribution over (f, t)."""
    mag = np.abs(spec.values)
    total = mag.sum()
    if total == 0:
        raise DegenerateInputError("all-zero spectrogram cannot be normalized")
    return ProbGrid(mag / total)


def export_magnitude_csv(spec: Spectrogram, path) -> Path:
    """Write |X| with one row per frequency bin."""
    path = Path(path)
    np.savetxt(path, np.abs(spec.values), delimiter=",", fmt="%.9g")
    return path
