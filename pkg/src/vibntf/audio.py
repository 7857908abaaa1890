"""Mono WAV input/output and 0 dB mixing."""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import DegenerateInputError, FormatError, ShapeError

__all__ = ["AudioBuffer", "read_wav", "write_wav", "mix_at_0db", "rms"]


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """A mono signal with its sample rate.

    ``samples`` is stored as a read-only float64 array.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain NaN or Inf")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(x * x)))


def read_wav(path) -> AudioBuffer:
    """Read a PCM16 or float32 WAV file, averaging channels to mono."""
    path = Path(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            sample_rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except wavfile.WavFileWarning as exc:
        raise OSError(f"{path}: malformed or truncated WAV ({exc})") from exc
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported bit depth" in msg:
            raise FormatError(f"{path}: {msg}") from exc
        raise OSError(f"{path}: unreadable WAV ({msg})") from exc
    except (EOFError, struct.error) as exc:
        raise OSError(f"{path}: truncated WAV") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise FormatError(f"{path}: unsupported sample type {data.dtype}; need PCM16 or float32")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioBuffer(samples, sample_rate)


def write_wav(path, buffer: AudioBuffer) -> None:
    """Write ``buffer`` as a mono IEEE float32 WAV (no clipping)."""
    wavfile.write(Path(path), buffer.sample_rate, buffer.samples.astype(np.float32))


def mix_at_0db(sources: list[AudioBuffer]) -> tuple[AudioBuffer, list[AudioBuffer]]:
    """Scale sources to a common RMS and sum them.

    Sources are zero-padded to the longest one first. The common RMS is the
    mean of the input RMS values, so the overall level stays comparable to the
    inputs. Returns the mixture and the scaled sources, which serve as the
    ground-truth references for evaluation.
    """
    if len(sources) < 2:
        raise DegenerateInputError("need at least two sources to mix")
    rate = sources[0].sample_rate
    if any(s.sample_rate != rate for s in sources):
        raise ShapeError("sources have different sample rates")

    n = max(len(s) for s in sources)
    padded = [np.pad(s.samples, (0, n - len(s))) for s in sources]
    levels = [rms(x) for x in padded]
    if min(levels) == 0.0:
        raise DegenerateInputError("cannot mix a silent source at 0 dB")
    target = float(np.mean(levels))

    scaled = [x * (target / lvl) for x, lvl in zip(padded, levels)]
    mixture = np.zeros(n)
    for x in scaled:
        mixture = mixture + x
    return AudioBuffer(mixture, rate), [AudioBuffer(x, rate) for x in scaled]
