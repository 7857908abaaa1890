"""Single-channel source separation with vibrato nonnegative tensor factorization."""

from .audio import AudioBuffer, mix_at_0db, read_wav, write_wav
from .bss_eval import BssMetrics, bss_eval_sources
from .config import ExperimentConfig, load_config
from .ddm import DdmConfig, FsfrField, PostprocessConfig, QuantizedFsfr, ddm_estimate, postprocess_fsfr, quantize_fsfr
from .errors import DegenerateInputError, FormatError, InputError, NumericalError, ShapeError, VibNTFError
from .factorize import (
    FactorSet,
    FitOptions,
    NmfFactorSet,
    init_factors,
    klnmf_fit,
    vibntf_fit,
    vibntf_iterate,
    vibntf_objective,
)
from .separate import MaskSet, SeparationResult, apply_masks, wiener_masks_klnmf, wiener_masks_vibntf
from .stft import ProbGrid, Spectrogram, StftConfig, istft, normalize_spectrogram, stft_forward
from .synth import SynthRanges, VibratoParams, render_vibrato_square, sample_vibrato_params
from .tensor import ObservationTensor, build_observation

__version__ = "0.1.0"
