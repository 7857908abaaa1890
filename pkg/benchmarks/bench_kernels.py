"""Compare the numba and numpy kernel backends on Experiment A sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports the best-of-N wall time per backend for the DDM solve, one E-step and
a 100-iteration VibNTF fit, plus the max relative difference of their outputs.
"""

import argparse
import time

import numpy as np

from vibntf import _kernels
from vibntf.audio import mix_at_0db
from vibntf.config import ExperimentConfig
from vibntf.ddm import atom_transforms
from vibntf.factorize import FitOptions, init_factors, source_reconstructions, vibntf_fit
from vibntf.pipeline import analyze
from vibntf.synth import render_vibrato_square, sample_vibrato_params


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def max_rel_diff(name, ref, other):
    if name == "ddm_solve":
        # compare only where both backends found a well-posed solve
        keep = ref[2] & other[2]
        ref, other = [x[keep] for x in ref[:2]], [x[keep] for x in other[:2]]
    return max(float(np.max(np.abs(x - y) / np.maximum(np.abs(x), 1e-300))) for x, y in zip(ref, other))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    config = ExperimentConfig()
    mixture, _ = mix_at_0db([render_vibrato_square(sample_vibrato_params(rng), 2.0) for _ in range(2)])
    analysis = analyze(mixture, config)
    obs = analysis.observation
    a, b, c = (np.ascontiguousarray(g) for g in atom_transforms(mixture, config.stft))
    n_f, n_t, n_r = obs.dims
    fs = init_factors(n_f, n_t, n_r, 2, 3, seed=0)
    wh = source_reconstructions(fs)

    cases = {
        "ddm_solve": (
            lambda: _kernels.ddm_solve_numpy(a, b, c, 5),
            lambda: _kernels.ddm_solve_numba(a, b, c, 5),
        ),
        "vibntf_estep": (
            lambda: _kernels.vibntf_estep_numpy(obs.p, obs.r_index, wh, fs.fm, fs.mix),
            lambda: _kernels.vibntf_estep_numba(obs.p, obs.r_index, wh, fs.fm, fs.mix),
        ),
    }
    # warm up the JIT so compile time is not counted
    for _, jit in cases.values():
        jit()

    print(f"inputs: F={n_f} T={n_t} R={n_r}, best of {args.repeat}")
    print(f"{'kernel':<16}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}{'max rel':>12}")
    for name, (ref, jit) in cases.items():
        t_np, out_np = best_time(ref, args.repeat)
        t_nb, out_nb = best_time(jit, args.repeat)
        diff = max_rel_diff(name, out_np, out_nb)
        print(f"{name:<16}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.2e}")

    fit_times = {}
    for backend in (False, True):
        _kernels.USE_NUMBA = backend
        fit_times[backend], _ = best_time(lambda: vibntf_fit(obs, 2, 3, FitOptions(100, 0)), max(1, args.repeat // 2))
    print(f"{'fit (100 it)':<16}{1e3 * fit_times[False]:>12.1f}{1e3 * fit_times[True]:>12.1f}{fit_times[False] / fit_times[True]:>10.1f}")


if __name__ == "__main__":
    main()
