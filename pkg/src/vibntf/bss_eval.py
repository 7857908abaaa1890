"""Source-to-distortion, interference and artifact ratios.

Each estimate is split into ``s_target + e_interf + e_artif`` by least-squares
projection onto time-invariant FIR-filtered versions (``filter_len`` taps) of
the references: ``s_target`` is the projection onto the matched reference
alone and ``s_target + e_interf`` the projection onto all references. The
normal equations are assembled from FFT cross-correlations, since the Gram
matrix of delayed copies is block Toeplitz.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.signal import fftconvolve

from .audio import AudioBuffer
from .errors import NumericalError, ShapeError

__all__ = ["BssMetrics", "DB_CAP", "bss_eval_sources", "decompose", "project", "ratio_db"]

DB_CAP = 200.0


@dataclass(frozen=True)
class BssMetrics:
    """Metrics per reference source.

    ``permutation[j]`` is the index of the estimate matched to reference ``j``;
    ``sdr[j]`` etc. are that pair's ratios in dB.
    """

    sdr: np.ndarray
    sir: np.ndarray
    sar: np.ndarray
    permutation: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "sdr": [float(v) for v in self.sdr],
            "sir": [float(v) for v in self.sir],
            "sar": [float(v) for v in self.sar],
            "permutation": list(self.permutation),
        }


def ratio_db(num: float, den: float) -> float:
    """``10 log10(num / den)`` clipped to +-DB_CAP."""
    if num <= 0:
        return -DB_CAP
    if den <= 0:
        return DB_CAP
    return float(np.clip(10.0 * np.log10(num / den), -DB_CAP, DB_CAP))


def _nfft(n: int) -> int:
    return 1 << int(np.ceil(np.log2(max(n, 2))))


class _Projector:
    """Cached spectra of a set of references for repeated projections."""

    def __init__(self, refs: np.ndarray, filter_len: int):
        self.refs = refs
        self.filter_len = filter_len
        n_src, n = refs.shape
        self.nfft = _nfft(n + filter_len - 1)
        self.spectra = np.fft.rfft(refs, n=self.nfft, axis=1)
        lags = np.arange(filter_len)
        self.lag_index = (lags[:, None] - lags[None, :]) % self.nfft
        # corr[a, b, k] = sum_m refs[a, m] refs[b, m + k]
        corr = np.fft.irfft(np.conj(self.spectra)[:, None, :] * self.spectra[None, :, :], n=self.nfft, axis=2)
        self.corr = corr

    def gram(self, which) -> np.ndarray:
        L = self.filter_len
        k = len(which)
        g = np.empty((k * L, k * L))
        for i, a in enumerate(which):
            for j, b in enumerate(which):
                g[i * L : (i + 1) * L, j * L : (j + 1) * L] = self.corr[a, b][self.lag_index]
        return g

    def project(self, which, estimate: np.ndarray) -> np.ndarray:
        L = self.filter_len
        n = self.refs.shape[1]
        est_spec = np.fft.rfft(estimate, n=self.nfft)
        rhs = np.concatenate(
            [np.fft.irfft(np.conj(self.spectra[a]) * est_spec, n=self.nfft)[:L] for a in which]
        )
        g = self.gram(which)
        try:
            coef = scipy.linalg.solve(g, rhs, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise NumericalError("projection basis is rank deficient; references must be linearly independent") from exc
        if not np.all(np.isfinite(coef)):
            raise NumericalError("projection produced non-finite filter coefficients")
        out = np.zeros(n + L - 1)
        for i, a in enumerate(which):
            out += fftconvolve(self.refs[a], coef[i * L : (i + 1) * L])
        return out


def project(refs: np.ndarray, estimate: np.ndarray, filter_len: int) -> np.ndarray:
    """Projection of ``estimate`` onto the delayed copies of all ``refs`` rows."""
    refs = np.atleast_2d(np.asarray(refs, dtype=np.float64))
    return _Projector(refs, filter_len).project(range(refs.shape[0]), np.asarray(estimate, dtype=np.float64))


def decompose(refs: np.ndarray, estimate: np.ndarray, target: int, filter_len: int):
    """Return ``(s_target, e_interf, e_artif)``, each of length ``n + filter_len - 1``."""
    refs = np.atleast_2d(np.asarray(refs, dtype=np.float64))
    proj = _Projector(refs, filter_len)
    est = np.asarray(estimate, dtype=np.float64)
    return _decompose(proj, est, proj.project(range(refs.shape[0]), est), target)


def _decompose(proj: _Projector, est: np.ndarray, p_all: np.ndarray, target: int):
    s_target = proj.project([target], est)
    e_interf = p_all - s_target
    padded = np.concatenate([est, np.zeros(proj.filter_len - 1)])
    e_artif = padded - p_all
    return s_target, e_interf, e_artif


def _ratios(s_target, e_interf, e_artif):
    def energy(x):
        return float(np.dot(x, x))

    sdr = ratio_db(energy(s_target), energy(e_interf + e_artif))
    sir = ratio_db(energy(s_target), energy(e_interf))
    sar = ratio_db(energy(s_target + e_interf), energy(e_artif))
    return sdr, sir, sar


def _as_matrix(signals) -> np.ndarray:
    rows = [s.samples if isinstance(s, AudioBuffer) else np.asarray(s, dtype=np.float64) for s in signals]
    if len({len(r) for r in rows}) > 1:
        raise ShapeError("all signals must have the same length")
    return np.vstack(rows)


def bss_eval_sources(estimates, references, filter_len: int = 512) -> BssMetrics:
    """Evaluate estimates against references under the best permutation.

    The permutation maximizing mean SIR over all pairings is selected.
    """
    est = _as_matrix(estimates)
    ref = _as_matrix(references)
    if est.shape != ref.shape:
        raise ShapeError(f"estimates {est.shape} and references {ref.shape} differ in shape")
    if filter_len < 1:
        raise ValueError("filter_len must be >= 1")
    n_src = ref.shape[0]
    if np.any(np.sum(ref * ref, axis=1) == 0):
        raise NumericalError("a reference source is silent")

    proj = _Projector(ref, filter_len)
    table = np.empty((3, n_src, n_src))  # [metric, estimate, reference]
    for i in range(n_src):
        p_all = proj.project(range(n_src), est[i])
        for j in range(n_src):
            table[:, i, j] = _ratios(*_decompose(proj, est[i], p_all, j))

    best, best_sir = None, -np.inf
    refs_idx = np.arange(n_src)
    for perm in itertools.permutations(range(n_src)):
        mean_sir = table[1, list(perm), refs_idx].mean()
        if mean_sir > best_sir:
            best, best_sir = perm, mean_sir
    sel = (list(best), refs_idx)
    return BssMetrics(table[0][sel], table[1][sel], table[2][sel], tuple(int(i) for i in best))
