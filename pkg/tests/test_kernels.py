import os
import subprocess
import sys

import numpy as np
import pytest

from vibntf import _kernels
from vibntf.factorize import init_factors, source_reconstructions


def estep_inputs(rng, n_f=40, n_t=30, n_r=7, n_s=2, n_z=3):
    p = rng.random((n_f, n_t))
    p[rng.random((n_f, n_t)) < 0.3] = 0
    p /= p.sum()
    r = rng.integers(0, n_r, size=(n_f, n_t)).astype(np.int64)
    fs = init_factors(n_f, n_t, n_r, n_s, n_z, seed=1)
    return p, r, source_reconstructions(fs), fs.fm, fs.mix


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_estep_numba_matches_numpy(rng):
    args = estep_inputs(rng)
    for got, want in zip(_kernels.vibntf_estep_numba(*args), _kernels.vibntf_estep_numpy(*args)):
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-300)


def test_estep_zero_model_gives_zero_ratio(rng):
    p, r, wh, fm, mix = estep_inputs(rng, 5, 4, 2, 2, 1)
    wh[0, 0, :] = 0.0
    v, _, _, q = _kernels.vibntf_estep_numpy(p, r, wh, fm, mix)
    assert q[0, 0] == 0 and np.all(v[0, 0] == 0)
    assert np.all(np.isfinite(v))


def test_env_flag_selects_numpy_backend():
    code = "from vibntf import _kernels; print(_kernels.USE_NUMBA)"
    env = dict(os.environ, VIBNTF_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


def test_dispatch_uses_selected_backend(rng, monkeypatch):
    args = estep_inputs(rng, 6, 5, 3)
    monkeypatch.setattr(_kernels, "USE_NUMBA", False)
    calls = []
    monkeypatch.setattr(_kernels, "vibntf_estep_numpy", lambda *a: calls.append(a) or "numpy")
    assert _kernels.vibntf_estep(*args) == "numpy" and len(calls) == 1
