"""Local frequency and frequency-slope estimation with the Distributed
Derivative Method, plus FSFR post-processing and quantization.

Each bin is modelled locally as ``exp(eta0 + eta1*tau + eta2*tau**2)`` with
``tau`` in seconds measured from the frame centre. Integration by parts
against a heterodyned Hann atom ``phi`` gives one linear equation per atom::

    <x, phi'> = -eta1 <x, phi> - 2 eta2 <tau x, phi>

and the ``num_atoms`` atoms nearest the bin give an overdetermined system in
``(eta1, eta2)``. ``Im(eta1)`` is the angular frequency at the frame centre
and ``2 Im(eta2)`` its time derivative, so the frequency-slope-to-frequency
ratio (FSFR) is ``2 Im(eta2) / Im(eta1)`` in 1/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .audio import AudioBuffer
from .errors import DegenerateInputError, ShapeError
from .stft import ProbGrid, StftConfig, frames, hann, pad_signal

__all__ = [
    "DdmConfig",
    "FsfrField",
    "PostprocessConfig",
    "QuantizedFsfr",
    "analytic_frames",
    "atom_transforms",
    "ddm_estimate",
    "postprocess_fsfr",
    "quantize_fsfr",
    "dequantize",
    "export_fsfr_csv",
    "export_r_index_csv",
]


@dataclass(frozen=True)
class DdmConfig:
    num_atoms: int = 5
    min_freq_eps: float = 2 * math.pi  # rad/s

    def __post_init__(self):
        if self.num_atoms < 3 or self.num_atoms % 2 == 0:
            raise ValueError(f"num_atoms must be odd and >= 3, got {self.num_atoms}")
        if not self.min_freq_eps > 0:
            raise ValueError("min_freq_eps must be positive")


@dataclass(frozen=True)
class PostprocessConfig:
    energy_percentile: float = 0.10
    clip_mult: float = 4.0

    def __post_init__(self):
        if not 0 <= self.energy_percentile < 1:
            raise ValueError("energy_percentile must lie in [0, 1)")
        if not self.clip_mult > 0:
            raise ValueError("clip_mult must be positive")


@dataclass(frozen=True, eq=False)
class FsfrField:
    """Per-bin DDM output. ``fsfr`` is 0 wherever ``valid`` is false."""

    eta1_im: np.ndarray
    eta2_im: np.ndarray
    fsfr: np.ndarray
    valid: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.fsfr.shape


@dataclass(frozen=True, eq=False)
class QuantizedFsfr:
    r_index: np.ndarray
    num_bins: int
    edges: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.r_index.shape


def analytic_frames(framed: np.ndarray) -> np.ndarray:
    """Drop the negative-frequency half of each frame (FFT-based, per frame)."""
    n = framed.shape[1]
    gain = np.zeros(n)
    gain[0] = 1.0
    gain[1 : n // 2] = 2.0
    gain[n // 2] = 1.0
    return np.fft.ifft(np.fft.fft(framed, axis=1) * gain, axis=1)


def atom_transforms(buffer: AudioBuffer, config: StftConfig):
    """Inner products of the analytic frames with the atoms and their variants.

    Returns ``(a, b, c)``, F x T complex grids holding ``<x, phi>``,
    ``2 <tau x, phi>`` and ``<x, phi'>`` for every bin and frame.
    """
    n = config.fft_len
    fs = buffer.sample_rate
    framed = analytic_frames(frames(pad_signal(buffer.samples, config), config))

    idx = np.arange(n)
    win = hann(n)
    tau = (idx - n / 2) / fs
    dwin = fs * (math.pi / n) * np.sin(2 * math.pi * idx / n)  # d/dtau of the periodic Hann
    n_bins = config.num_bins

    def transform(weights):
        return np.fft.fft(framed * weights, axis=1)[:, :n_bins].T

    a = transform(win)
    b = 2.0 * transform(win * tau)
    omega = 2 * math.pi * fs * np.arange(n_bins) / n
    c = transform(dwin) - 1j * omega[:, None] * a
    return a, b, c


def ddm_estimate(
    buffer: AudioBuffer,
    stft_config: StftConfig = StftConfig(),
    ddm_config: DdmConfig = DdmConfig(),
) -> FsfrField:
    if len(buffer) < 1:
        raise DegenerateInputError("cannot analyze an empty buffer")
    a, b, c = atom_transforms(buffer, stft_config)
    eta1, eta2, ok = _kernels.ddm_solve(
        np.ascontiguousarray(a), np.ascontiguousarray(b), np.ascontiguousarray(c), ddm_config.num_atoms
    )
    eta1_im = eta1.imag
    eta2_im = eta2.imag
    valid = ok & (np.abs(eta1_im) >= ddm_config.min_freq_eps)
    fsfr = np.zeros_like(eta1_im)
    np.divide(2.0 * eta2_im, eta1_im, out=fsfr, where=valid)
    valid &= np.isfinite(fsfr)
    fsfr[~valid] = 0.0
    return FsfrField(eta1_im, eta2_im, fsfr, valid)


def postprocess_fsfr(
    field: FsfrField,
    energy: ProbGrid,
    cfg: PostprocessConfig = PostprocessConfig(),
    sample_rate: int = 44100,
) -> FsfrField:
    """Replace unreliable FSFR values with the median of the reliable ones.

    A bin is reliable when its estimate is valid, its energy is at or above
    the ``energy_percentile`` quantile, and ``|fsfr| <= clip_mult * sample_rate``.
    """
    if field.shape != energy.shape:
        raise ShapeError(f"FSFR grid {field.shape} and energy grid {energy.shape} differ")
    threshold = np.quantile(energy.values, cfg.energy_percentile)
    keep = field.valid & (energy.values >= threshold) & (np.abs(field.fsfr) <= cfg.clip_mult * sample_rate)
    if not keep.any():
        raise DegenerateInputError("no FSFR estimates survive post-processing")
    median = float(np.median(field.fsfr[keep]))
    fsfr = np.where(keep, field.fsfr, median)
    return FsfrField(field.eta1_im, field.eta2_im, fsfr, np.ones_like(field.valid))


def quantize_fsfr(field: FsfrField, num_bins: int = 50) -> QuantizedFsfr:
    """Map FSFR values onto ``num_bins`` equal-width bins spanning their range.

    The maximum lands in the last bin. A constant field has no range and maps
    everything to ``num_bins // 2``.
    """
    if num_bins < 2:
        raise ValueError("need at least two quantization bins")
    if not field.valid.all():
        raise ValueError("quantize a post-processed (fully valid) field")
    values = field.fsfr
    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        edges = np.linspace(lo, hi, num_bins + 1)
        r = np.floor((values - lo) / (hi - lo) * num_bins).astype(np.int64)
        r = np.clip(r, 0, num_bins - 1)
    else:
        edges = lo + np.arange(num_bins + 1, dtype=np.float64) - num_bins / 2
        r = np.full(values.shape, num_bins // 2, dtype=np.int64)
    return QuantizedFsfr(r, num_bins, edges)


def dequantize(q: QuantizedFsfr) -> np.ndarray:
    """Bin midpoints for each quantized cell."""
    mids = 0.5 * (q.edges[:-1] + q.edges[1:])
    return mids[q.r_index]


def export_fsfr_csv(field: FsfrField, path) -> Path:
    path = Path(path)
    np.savetxt(path, field.fsfr, delimiter=",", fmt="%.9g")
    return path


def export_r_index_csv(q: QuantizedFsfr, path) -> Path:
    path = Path(path)
    np.savetxt(path, q.r_index, delimiter=",", fmt="%d")
    return path
