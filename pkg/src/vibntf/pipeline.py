"""End-to-end separation: analysis, factorization, masking, resynthesis."""

from __future__ import annotations

from dataclasses import dataclass

from .audio import AudioBuffer
from .config import ExperimentConfig
from .ddm import FsfrField, QuantizedFsfr, ddm_estimate, postprocess_fsfr, quantize_fsfr
from .factorize import FactorSet, NmfFactorSet, klnmf_fit, vibntf_fit
from .separate import SeparationResult, apply_masks, wiener_masks_klnmf, wiener_masks_vibntf
from .stft import ProbGrid, Spectrogram, normalize_spectrogram, stft_forward
from .tensor import ObservationTensor, build_observation

__all__ = ["Analysis", "analyze", "separate_vibntf", "separate_klnmf"]


@dataclass(frozen=True, eq=False)
class Analysis:
    spectrogram: Spectrogram
    energy: ProbGrid
    fsfr: FsfrField
    quantized: QuantizedFsfr
    observation: ObservationTensor


def analyze(mixture: AudioBuffer, config: ExperimentConfig = ExperimentConfig()) -> Analysis:
    spec = stft_forward(mixture, config.stft)
    energy = normalize_spectrogram(spec)
    raw = ddm_estimate(mixture, config.stft, config.ddm)
    field = postprocess_fsfr(raw, energy, config.postprocess, mixture.sample_rate)
    quant = quantize_fsfr(field, config.r_bins)
    return Analysis(spec, energy, field, quant, build_observation(energy, quant))


def separate_vibntf(
    mixture: AudioBuffer, config: ExperimentConfig = ExperimentConfig(), seed: int = 0, analysis: Analysis | None = None
) -> tuple[SeparationResult, FactorSet, Analysis]:
    analysis = analysis or analyze(mixture, config)
    fs = vibntf_fit(analysis.observation, config.sources, config.components, config.fit_options(seed))
    masks = wiener_masks_vibntf(fs, analysis.observation)
    return apply_masks(analysis.spectrogram, masks), fs, analysis


def separate_klnmf(
    mixture: AudioBuffer, config: ExperimentConfig = ExperimentConfig(), seed: int = 0, spec: Spectrogram | None = None
) -> tuple[SeparationResult, NmfFactorSet]:
    spec = spec if spec is not None else stft_forward(mixture, config.stft)
    nmf = klnmf_fit(normalize_spectrogram(spec), config.nmf_components, config.nmf_options(seed))
    return apply_masks(spec, wiener_masks_klnmf(nmf)), nmf
