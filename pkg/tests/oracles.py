"""Dense brute-force references, independent of the sparse production paths."""

import itertools

import numpy as np


def dense_joint(mix, spectra, activations, fm):
    """q(f, t, r, z, s) materialized, shape (F, T, R, Z, S)."""
    return np.einsum("s,fzs,zts,rts->ftrzs", mix, spectra, activations, fm)


def dense_vibntf_step(p_dense, mix, spectra, activations, fm):
    """One non-strict MM step: all factors from one posterior."""
    q = dense_joint(mix, spectra, activations, fm)
    marg = q.sum(axis=(3, 4), keepdims=True)
    rho = np.where(marg > 0, p_dense[..., None, None] * q / np.where(marg > 0, marg, 1), 0.0)
    new_mix = rho.sum(axis=(0, 1, 2, 3))
    new_mix /= new_mix.sum()
    new_spec = rho.sum(axis=(1, 2))  # f, z, s
    new_spec /= new_spec.sum(axis=0, keepdims=True)
    new_act = rho.sum(axis=(0, 2)).transpose(1, 0, 2)  # (t, z, s) -> (z, t, s)
    new_act /= new_act.sum(axis=(0, 1), keepdims=True)
    new_fm = rho.sum(axis=(0, 3)).transpose(1, 0, 2)  # (t, r, s) -> (r, t, s)
    new_fm /= new_fm.sum(axis=0, keepdims=True)
    return new_mix, new_spec, new_act, new_fm


def dense_objective(p_dense, mix, spectra, activations, fm):
    q = dense_joint(mix, spectra, activations, fm).sum(axis=(3, 4))
    nz = p_dense > 0
    return float(np.sum(p_dense[nz] * np.log(q[nz])))


def dense_posterior_masks(r_index, mix, spectra, activations, fm):
    """q(s | f, t, r(f,t)) by brute-force loops."""
    n_f, n_t = r_index.shape
    n_s = mix.shape[0]
    out = np.zeros((n_s, n_f, n_t))
    for f, t in itertools.product(range(n_f), range(n_t)):
        r = r_index[f, t]
        joint = [
            sum(mix[s] * fm[r, t, s] * spectra[f, z, s] * activations[z, t, s] for z in range(spectra.shape[1]))
            for s in range(n_s)
        ]
        out[:, f, t] = np.array(joint) / sum(joint)
    return out


def delayed_basis(refs, filter_len):
    """Columns are references delayed by 0..filter_len-1, zero-padded to n + L - 1."""
    refs = np.atleast_2d(refs)
    n = refs.shape[1]
    cols = []
    for r in refs:
        for d in range(filter_len):
            col = np.zeros(n + filter_len - 1)
            col[d : d + n] = r
            cols.append(col)
    return np.array(cols).T


def lstsq_bss(estimate, refs, target, filter_len):
    """SDR/SIR/SAR by explicit least squares on the delayed basis."""
    n = estimate.shape[0]
    e = np.concatenate([estimate, np.zeros(filter_len - 1)])
    a_all = delayed_basis(refs, filter_len)
    a_tgt = delayed_basis(refs[target], filter_len)
    p_all = a_all @ np.linalg.lstsq(a_all, e, rcond=None)[0]
    s_t = a_tgt @ np.linalg.lstsq(a_tgt, e, rcond=None)[0]
    e_i = p_all - s_t
    e_a = e - p_all
    db = lambda a, b: 10 * np.log10(np.dot(a, a) / np.dot(b, b))  # noqa: E731
    return db(s_t, e_i + e_a), db(s_t, e_i), db(s_t + e_i, e_a)
