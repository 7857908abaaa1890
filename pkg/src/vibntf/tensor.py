"""Sparse spectrogram-plus-FSFR observation tensor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ddm import QuantizedFsfr
from .errors import ShapeError
from .stft import ProbGrid

__all__ = ["ObservationTensor", "build_observation"]


@dataclass(frozen=True, eq=False)
class ObservationTensor:
    """F x T x R tensor with one nonzero FSFR slot per time-frequency bin.

    The tensor is stored as the energy grid plus the index of the occupied
    slot; ``dense()`` materializes it for small instances.
    """

    energy: ProbGrid
    r_index: np.ndarray
    num_r: int

    def __post_init__(self):
        if self.r_index.shape != self.energy.shape:
            raise ShapeError(f"r_index {self.r_index.shape} does not match energy {self.energy.shape}")
        r = np.asarray(self.r_index, dtype=np.int64)
        if r.size and (r.min() < 0 or r.max() >= self.num_r):
            raise ValueError(f"r_index values must lie in [0, {self.num_r})")
        object.__setattr__(self, "r_index", np.ascontiguousarray(r))

    @property
    def dims(self) -> tuple[int, int, int]:
        f, t = self.energy.shape
        return f, t, self.num_r

    @property
    def p(self) -> np.ndarray:
        return self.energy.values

    def dense(self) -> np.ndarray:
        n_f, n_t, n_r = self.dims
        out = np.zeros((n_f, n_t, n_r))
        ff, tt = np.indices((n_f, n_t))
        out[ff, tt, self.r_index] = self.energy.values
        return out


def build_observation(energy: ProbGrid, q: QuantizedFsfr) -> ObservationTensor:
    if energy.shape != q.shape:
        raise ShapeError(f"energy grid {energy.shape} and FSFR grid {q.shape} differ")
    return ObservationTensor(energy, q.r_index, q.num_bins)
