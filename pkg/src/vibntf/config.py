"""Flat experiment/pipeline configuration.

Keys mirror the CLI flags (``r_bins`` <-> ``--r-bins``), so a JSON config file
and command-line overrides share one namespace.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .ddm import DdmConfig, PostprocessConfig
from .errors import InputError
from .factorize import FitOptions
from .stft import StftConfig

__all__ = ["ExperimentConfig", "load_config"]


@dataclass(frozen=True)
class ExperimentConfig:
    trials: int = 500
    seed: int = 0
    duration_s: float = 2.0
    sample_rate: int = 44100
    fft_len: int = 1024
    hop: int = 256
    num_atoms: int = 5
    min_freq_eps: float = 2 * math.pi
    energy_percentile: float = 0.10
    clip_mult: float = 4.0
    r_bins: int = 50
    sources: int = 2
    components: int = 3
    iterations: int = 100
    nmf_components: int = 2
    nmf_iterations: int = 100
    strict_mm: bool = False
    filter_len: int = 512
    workers: int = 1

    def __post_init__(self):
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        if self.r_bins < 2 or self.sources < 1 or self.components < 1 or self.nmf_components < 1:
            raise ValueError("r_bins >= 2 and sources, components, nmf_components >= 1 required")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        # constructing the sub-configs validates them
        self.stft, self.ddm, self.postprocess  # noqa: B018

    @property
    def stft(self) -> StftConfig:
        return StftConfig(self.fft_len, self.hop)

    @property
    def ddm(self) -> DdmConfig:
        return DdmConfig(self.num_atoms, self.min_freq_eps)

    @property
    def postprocess(self) -> PostprocessConfig:
        return PostprocessConfig(self.energy_percentile, self.clip_mult)

    def fit_options(self, seed: int) -> FitOptions:
        return FitOptions(self.iterations, seed, self.strict_mm)

    def nmf_options(self, seed: int) -> FitOptions:
        return FitOptions(self.nmf_iterations, seed, self.strict_mm)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def updated(self, **overrides) -> "ExperimentConfig":
        known = {f.name: f for f in fields(self)}
        clean = {}
        for key, value in overrides.items():
            key = key.replace("-", "_")
            if key not in known:
                raise InputError(f"unknown config key {key!r}")
            if value is None:
                continue
            clean[key] = _coerce(known[key].type, value, key)
        try:
            return dataclasses.replace(self, **clean)
        except ValueError as exc:
            raise InputError(str(exc)) from exc


def _coerce(kind, value, key):
    kind = kind if isinstance(kind, str) else kind.__name__
    try:
        if kind == "bool":
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes", "on")
            return bool(value)
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise InputError(f"config key {key!r} expects {kind}, got {value!r}") from None


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``."""
    cfg = ExperimentConfig()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config file must hold a flat JSON object")
        cfg = cfg.updated(**data)
    return cfg.updated(**overrides)
