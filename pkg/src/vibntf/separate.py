"""Wiener masks from fitted factors and source reconstruction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import ShapeError
from .factorize import FactorSet, NmfFactorSet, source_reconstructions
from .stft import Spectrogram, istft
from .tensor import ObservationTensor

__all__ = [
    "MaskSet",
    "SeparationResult",
    "masks_from_joint",
    "wiener_masks_vibntf",
    "wiener_masks_klnmf",
    "apply_masks",
]


@dataclass(frozen=True, eq=False)
class MaskSet:
    masks: np.ndarray  # (S, F, T)

    @property
    def num_sources(self) -> int:
        return self.masks.shape[0]


@dataclass(frozen=True, eq=False)
class SeparationResult:
    source_spectrograms: list
    source_signals: list


def masks_from_joint(joint: np.ndarray) -> MaskSet:
    """Normalize per-source joint values (S, F, T) over sources.

    Bins whose total is zero or non-finite get the uniform mask ``1/S``.
    """
    n_s = joint.shape[0]
    total = joint.sum(axis=0)
    bad = ~(total > 0) | ~np.isfinite(total)
    masks = joint / np.where(bad, 1.0, total)
    masks[:, bad] = 1.0 / n_s
    return MaskSet(np.clip(masks, 0.0, 1.0))


def wiener_masks_vibntf(fs: FactorSet, obs: ObservationTensor, marginalize_r: bool = False) -> MaskSet:
    """Posterior source share of every bin under the tensor model.

    By default the FM factor is evaluated at the observed slot ``r(f, t)``.
    With ``marginalize_r`` the FM factor is summed out, which reduces to the
    masks of the plain NMF source model.
    """
    n_f, n_t, n_r = obs.dims
    if fs.spectra.shape[0] != n_f or fs.fm.shape[:2] != (n_r, n_t):
        raise ShapeError("factor dimensions do not match the observation")
    joint = source_reconstructions(fs) * fs.mix  # (F, T, S)
    if not marginalize_r:
        joint = joint * fs.fm[obs.r_index, np.arange(n_t)[None, :], :]
    return masks_from_joint(np.moveaxis(joint, 2, 0))


def wiener_masks_klnmf(nmf: NmfFactorSet) -> MaskSet:
    """One mask per NMF component, each component treated as a source."""
    joint = nmf.spectra.T[:, :, None] * nmf.activations[:, None, :]  # (Z, F, T)
    return masks_from_joint(joint)


def apply_masks(mix_spec: Spectrogram, masks: MaskSet) -> SeparationResult:
    if masks.masks.shape[1:] != mix_spec.shape:
        raise ShapeError(f"masks {masks.masks.shape[1:]} do not match spectrogram {mix_spec.shape}")
    specs = [mix_spec.with_values(mix_spec.values * m) for m in masks.masks]
    return SeparationResult(specs, [istft(s) for s in specs])
