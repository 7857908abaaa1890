"""Hot inner loops, each with a numba and a pure-numpy implementation.

The numba versions are used when numba imports and the environment variable
``VIBNTF_DISABLE_NUMBA`` is unset or ``0``. Both variants are always importable
as ``<name>_numpy`` / ``<name>_numba`` so they can be compared directly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and os.environ.get("VIBNTF_DISABLE_NUMBA", "0").lower() in ("", "0", "false", "no")

# |corr(a, b)|^2 above 1 - RANK_RTOL marks a 2x2 system as rank deficient.
RANK_RTOL = 1e-10


# ---------------------------------------------------------------------------
# DDM: per-bin 2-unknown complex least squares
# ---------------------------------------------------------------------------


def neighborhood_start(num_bins: int, num_atoms: int) -> np.ndarray:
    """First atom bin for each centre bin; windows are shifted to stay in range."""
    half = (num_atoms - 1) // 2
    return np.clip(np.arange(num_bins) - half, 0, num_bins - num_atoms)


def ddm_solve_numpy(a, b, c, num_atoms):
    """Solve ``[a b] @ (eta1, eta2) = -c`` per bin over neighboring atoms.

    ``a``, ``b``, ``c`` are F x T complex grids of atom inner products, where
    ``b`` already carries the factor 2 of the quadratic phase term. Returns
    ``(eta1, eta2, ok)``.
    """
    n_bins = a.shape[0]
    starts = neighborhood_start(n_bins, num_atoms)

    def window_sum(g):
        out = g[starts].copy()
        for k in range(1, num_atoms):
            out += g[starts + k]
        return out

    ac = np.conj(a)
    bc = np.conj(b)
    m00 = window_sum((ac * a).real)
    m11 = window_sum((bc * b).real)
    m01 = window_sum(ac * b)
    v0 = -window_sum(ac * c)
    v1 = -window_sum(bc * c)

    det = m00 * m11 - (m01 * np.conj(m01)).real
    scale = m00 * m11
    ok = (scale > 0) & (det > RANK_RTOL * scale) & np.isfinite(det)
    safe = np.where(ok, det, 1.0)
    eta1 = np.where(ok, (m11 * v0 - m01 * v1) / safe, 0.0)
    eta2 = np.where(ok, (m00 * v1 - np.conj(m01) * v0) / safe, 0.0)
    return eta1, eta2, ok


@njit(cache=True)
def ddm_solve_numba(a, b, c, num_atoms):
    n_bins, n_frames = a.shape
    half = (num_atoms - 1) // 2
    eta1 = np.zeros((n_bins, n_frames), dtype=np.complex128)
    eta2 = np.zeros((n_bins, n_frames), dtype=np.complex128)
    ok = np.zeros((n_bins, n_frames), dtype=np.bool_)
    for f0 in range(n_bins):
        lo = min(max(f0 - half, 0), n_bins - num_atoms)
        for t in range(n_frames):
            m00 = 0.0
            m11 = 0.0
            m01 = 0j
            v0 = 0j
            v1 = 0j
            for k in range(lo, lo + num_atoms):
                ak = a[k, t]
                bk = b[k, t]
                ck = c[k, t]
                ac = ak.conjugate()
                bc = bk.conjugate()
                m00 += (ac * ak).real
                m11 += (bc * bk).real
                m01 += ac * bk
                v0 -= ac * ck
                v1 -= bc * ck
            det = m00 * m11 - (m01 * m01.conjugate()).real
            scale = m00 * m11
            if scale > 0.0 and det > RANK_RTOL * scale and np.isfinite(det):
                eta1[f0, t] = (m11 * v0 - m01 * v1) / det
                eta2[f0, t] = (m00 * v1 - m01.conjugate() * v0) / det
                ok[f0, t] = True
    return eta1, eta2, ok


# ---------------------------------------------------------------------------
# Vibrato NTF E-step over the sparse observation tensor
# ---------------------------------------------------------------------------


def vibntf_estep_numpy(p, r_index, wh, fm, mix):
    """Posterior-weighted statistics for one MM step.

    Parameters are the observed energy ``p`` (F x T), the observed FM bin
    ``r_index`` (F x T), the per-source NMF reconstructions ``wh`` (F x T x S),
    the FM factor ``fm`` (R x T x S) and the mixing weights ``mix`` (S).

    Returns ``(v, fm_num, mix_num, q)`` where ``v[f,t,s] = p/q * mix_s *
    fm[r(f,t),t,s]``, ``fm_num`` and ``mix_num`` are the unnormalized FM and
    mixing updates, and ``q`` is the model value at the observed cells.
    """
    n_frames = p.shape[1]
    n_r = fm.shape[0]
    gathered = fm[r_index, np.arange(n_frames)[None, :], :] * mix
    joint = gathered * wh
    q = joint.sum(axis=2)
    ratio = np.divide(p, q, out=np.zeros_like(p), where=(p > 0) & (q > 0))
    v = gathered * ratio[:, :, None]
    rho = v * wh

    n_src = mix.shape[0]
    flat = (r_index * n_frames + np.arange(n_frames)[None, :]).ravel()
    fm_num = np.empty((n_r, n_frames, n_src))
    for s in range(n_src):
        fm_num[:, :, s] = np.bincount(flat, weights=rho[:, :, s].ravel(), minlength=n_r * n_frames).reshape(
            n_r, n_frames
        )
    mix_num = rho.sum(axis=(0, 1))
    return v, fm_num, mix_num, q


@njit(cache=True)
def vibntf_estep_numba(p, r_index, wh, fm, mix):
    n_bins, n_frames = p.shape
    n_r, _, n_src = fm.shape
    v = np.zeros((n_bins, n_frames, n_src))
    fm_num = np.zeros((n_r, n_frames, n_src))
    mix_num = np.zeros(n_src)
    q = np.zeros((n_bins, n_frames))
    g = np.empty(n_src)
    for f in range(n_bins):
        for t in range(n_frames):
            r = r_index[f, t]
            total = 0.0
            for s in range(n_src):
                g[s] = fm[r, t, s] * mix[s]
                total += g[s] * wh[f, t, s]
            q[f, t] = total
            pft = p[f, t]
            if pft > 0.0 and total > 0.0:
                ratio = pft / total
                for s in range(n_src):
                    vs = g[s] * ratio
                    v[f, t, s] = vs
                    rho = vs * wh[f, t, s]
                    fm_num[r, t, s] += rho
                    mix_num[s] += rho
    return v, fm_num, mix_num, q


def ddm_solve(a, b, c, num_atoms):
    return (ddm_solve_numba if USE_NUMBA else ddm_solve_numpy)(a, b, c, num_atoms)


def vibntf_estep(p, r_index, wh, fm, mix):
    return (vibntf_estep_numba if USE_NUMBA else vibntf_estep_numpy)(p, r_index, wh, fm, mix)
