"""Probabilistic factorization engines.

``vibntf_*`` fit the vibrato tensor model

    q(f, t, r) = sum_s q(s) q(r | t, s) sum_z q(f | z, s) q(z, t | s)

to a sparse observation tensor by minorization-maximization, and ``klnmf_*``
fit the plain two-factor model ``q(f, t) = sum_z q(f | z) q(z, t)`` (KL-NMF,
equivalently PLCA) used as a baseline.

Every update sets a factor to the normalized marginal of the posterior-weighted
observation ``rho = p_obs * q(z, s | f, t, r)``. Factor updates are applied in
the order mix, spectra, activations, fm. With ``strict_mm`` the posterior is
recomputed after each of them; otherwise all four share one posterior.

Random initialization uses numpy's PCG64 bit generator seeded with the
64-bit ``FitOptions.seed``; draws happen in the order mix, spectra,
activations, fm, each uniform on [0, 1) and then normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ShapeError
from .stft import ProbGrid
from .tensor import ObservationTensor

__all__ = [
    "FactorSet",
    "NmfFactorSet",
    "FitOptions",
    "LOG_FLOOR",
    "normalize",
    "init_factors",
    "init_nmf_factors",
    "source_reconstructions",
    "model_at_observed",
    "vibntf_objective",
    "vibntf_iterate",
    "vibntf_fit",
    "klnmf_objective",
    "klnmf_iterate",
    "klnmf_fit",
    "export_factors_csv",
]

LOG_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class FactorSet:
    mix: np.ndarray  # (S,)            q(s)
    spectra: np.ndarray  # (F, Z, S)   q(f | z, s)
    activations: np.ndarray  # (Z, T, S)  q(z, t | s)
    fm: np.ndarray  # (R, T, S)        q(r | t, s)

    @property
    def dims(self) -> dict:
        n_f, n_z, n_s = self.spectra.shape
        n_r, n_t, _ = self.fm.shape
        return {"F": n_f, "T": n_t, "R": n_r, "S": n_s, "Z": n_z}

    def check(self, atol: float = 1e-9) -> None:
        """Raise ``AssertionError`` if a normalization invariant is broken."""
        for name, arr, axes in (
            ("mix", self.mix, (0,)),
            ("spectra", self.spectra, (0,)),
            ("activations", self.activations, (0, 1)),
            ("fm", self.fm, (0,)),
        ):
            assert np.all(np.isfinite(arr)), f"{name} has non-finite entries"
            assert np.all(arr >= 0), f"{name} has negative entries"
            err = np.max(np.abs(arr.sum(axis=axes) - 1.0))
            assert err <= atol, f"{name} sums deviate from 1 by {err:g}"


@dataclass(frozen=True, eq=False)
class NmfFactorSet:
    spectra: np.ndarray  # (F, Z)  q(f | z)
    activations: np.ndarray  # (Z, T)  q(z, t)

    def reconstruction(self) -> np.ndarray:
        return self.spectra @ self.activations

    def check(self, atol: float = 1e-9) -> None:
        for name, arr in (("spectra", self.spectra), ("activations", self.activations)):
            assert np.all(np.isfinite(arr)) and np.all(arr >= 0), f"{name} invalid"
        assert np.max(np.abs(self.spectra.sum(axis=0) - 1)) <= atol
        assert abs(self.activations.sum() - 1) <= atol


@dataclass(frozen=True)
class FitOptions:
    iterations: int = 100
    seed: int = 0
    strict_mm: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def normalize(x: np.ndarray, axes) -> np.ndarray:
    """Normalize ``x`` to sum to one over ``axes``; all-zero slices become uniform."""
    x = np.asarray(x, dtype=np.float64)
    total = x.sum(axis=axes, keepdims=True)
    bad = ~(total > 0) | ~np.isfinite(total)
    out = x / np.where(bad, 1.0, total)
    if bad.any():
        size = np.prod([x.shape[a] for a in np.atleast_1d(axes)])
        out = np.where(np.broadcast_to(bad, x.shape), 1.0 / size, out)
    return out


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_factors(n_f: int, n_t: int, n_r: int, n_s: int, n_z: int, seed: int) -> FactorSet:
    if min(n_f, n_t, n_r, n_s, n_z) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = _rng(seed)
    mix = normalize(rng.random(n_s), 0)
    spectra = normalize(rng.random((n_f, n_z, n_s)), 0)
    activations = normalize(rng.random((n_z, n_t, n_s)), (0, 1))
    fm = normalize(rng.random((n_r, n_t, n_s)), 0)
    return FactorSet(mix, spectra, activations, fm)


def init_nmf_factors(n_f: int, n_t: int, n_z: int, seed: int) -> NmfFactorSet:
    if min(n_f, n_t, n_z) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = _rng(seed)
    return NmfFactorSet(normalize(rng.random((n_f, n_z)), 0), normalize(rng.random((n_z, n_t)), (0, 1)))


def _check_dims(obs: ObservationTensor, fs: FactorSet) -> None:
    n_f, n_t, n_r = obs.dims
    d = fs.dims
    if (d["F"], d["T"], d["R"]) != (n_f, n_t, n_r) or fs.activations.shape[1] != n_t:
        raise ShapeError(f"factor dims {d} do not match observation dims {obs.dims}")


def source_reconstructions(fs: FactorSet) -> np.ndarray:
    """``sum_z q(f|z,s) q(z,t|s)`` for every source, shape (F, T, S)."""
    n_s = fs.mix.shape[0]
    n_f, n_t = fs.spectra.shape[0], fs.activations.shape[1]
    wh = np.empty((n_f, n_t, n_s))
    for s in range(n_s):
        wh[:, :, s] = fs.spectra[:, :, s] @ fs.activations[:, :, s]
    return wh


def _estep(obs: ObservationTensor, fs: FactorSet):
    wh = source_reconstructions(fs)
    v, fm_num, mix_num, q = _kernels.vibntf_estep(obs.p, obs.r_index, wh, fs.fm, fs.mix)
    return v, fm_num, mix_num, q


def model_at_observed(obs: ObservationTensor, fs: FactorSet) -> np.ndarray:
    """Model value ``q(f, t, r(f,t))`` at the occupied slot of every bin."""
    _check_dims(obs, fs)
    return _estep(obs, fs)[3]


def _cross_entropy(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(np.maximum(q[mask], LOG_FLOOR))))


def vibntf_objective(obs: ObservationTensor, fs: FactorSet) -> float:
    """``sum p_obs log q`` over the nonzero observations."""
    return _cross_entropy(obs.p, model_at_observed(obs, fs))


def _new_mix(fs, v, fm_num, mix_num):
    return normalize(mix_num, 0)


def _new_spectra(fs, v, fm_num, mix_num):
    num = np.empty_like(fs.spectra)
    for s in range(fs.mix.shape[0]):
        num[:, :, s] = fs.spectra[:, :, s] * (v[:, :, s] @ fs.activations[:, :, s].T)
    return normalize(num, 0)


def _new_activations(fs, v, fm_num, mix_num):
    num = np.empty_like(fs.activations)
    for s in range(fs.mix.shape[0]):
        num[:, :, s] = fs.activations[:, :, s] * (fs.spectra[:, :, s].T @ v[:, :, s])
    return normalize(num, (0, 1))


def _new_fm(fs, v, fm_num, mix_num):
    return normalize(fm_num, 0)


_UPDATES = (
    ("mix", _new_mix),
    ("spectra", _new_spectra),
    ("activations", _new_activations),
    ("fm", _new_fm),
)


def vibntf_iterate(obs: ObservationTensor, fs: FactorSet, opts: FitOptions = FitOptions()) -> FactorSet:
    """One MM iteration updating all four factors."""
    _check_dims(obs, fs)
    if not opts.strict_mm:
        stats = _estep(obs, fs)[:3]
        return FactorSet(**{name: update(fs, *stats) for name, update in _UPDATES})
    for name, update in _UPDATES:
        stats = _estep(obs, fs)[:3]
        fs = replace(fs, **{name: update(fs, *stats)})
    return fs


def vibntf_fit(
    obs: ObservationTensor,
    n_sources: int = 2,
    n_components: int = 3,
    opts: FitOptions = FitOptions(),
    trace: list | None = None,
) -> FactorSet:
    """Random init followed by ``opts.iterations`` MM iterations.

    If ``trace`` is a list, the objective before the first and after every
    iteration is appended to it.
    """
    n_f, n_t, n_r = obs.dims
    fs = init_factors(n_f, n_t, n_r, n_sources, n_components, opts.seed)
    if trace is not None:
        trace.append(vibntf_objective(obs, fs))
    for _ in range(opts.iterations):
        fs = vibntf_iterate(obs, fs, opts)
        if trace is not None:
            trace.append(vibntf_objective(obs, fs))
    return fs


def klnmf_objective(p: ProbGrid, nmf: NmfFactorSet) -> float:
    return _cross_entropy(p.values, nmf.reconstruction())


def _nmf_ratio(p: np.ndarray, w: np.ndarray, h: np.ndarray) -> np.ndarray:
    q = w @ h
    return np.divide(p, q, out=np.zeros_like(p), where=(p > 0) & (q > 0))


def klnmf_iterate(p: ProbGrid, nmf: NmfFactorSet, opts: FitOptions = FitOptions()) -> NmfFactorSet:
    pv = p.values
    w, h = nmf.spectra, nmf.activations
    ratio = _nmf_ratio(pv, w, h)
    w_new = normalize(w * (ratio @ h.T), 0)
    if opts.strict_mm:
        ratio = _nmf_ratio(pv, w_new, h)
        h_new = normalize(h * (w_new.T @ ratio), (0, 1))
    else:
        h_new = normalize(h * (w.T @ ratio), (0, 1))
    return NmfFactorSet(w_new, h_new)


def klnmf_fit(
    p: ProbGrid,
    n_components: int = 2,
    opts: FitOptions = FitOptions(),
    trace: list | None = None,
) -> NmfFactorSet:
    n_f, n_t = p.shape
    nmf = init_nmf_factors(n_f, n_t, n_components, opts.seed)
    if trace is not None:
        trace.append(klnmf_objective(p, nmf))
    for _ in range(opts.iterations):
        nmf = klnmf_iterate(p, nmf, opts)
        if trace is not None:
            trace.append(klnmf_objective(p, nmf))
    return nmf


def export_factors_csv(fs: FactorSet, out_dir, prefix: str = "") -> list[Path]:
    """One CSV per factor and source.

    ``fm`` files hold the R x T grid of q(r | t, s); the first column is the
    zero-centred FSFR index ``r - R // 2``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    def save(name, arr, fmt="%.9g", header=""):
        path = out_dir / f"{prefix}{name}.csv"
        np.savetxt(path, arr, delimiter=",", fmt=fmt, header=header, comments="")
        paths.append(path)

    save("mix", fs.mix[None, :])
    n_r = fs.fm.shape[0]
    centred = (np.arange(n_r) - n_r // 2)[:, None]
    for s in range(fs.mix.shape[0]):
        save(f"spectra_s{s}", fs.spectra[:, :, s])
        save(f"activations_s{s}", fs.activations[:, :, s])
        save(f"fm_s{s}", np.hstack([centred, fs.fm[:, :, s]]))
    return paths
