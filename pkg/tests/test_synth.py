import math

import numpy as np
import pytest

from vibntf.ddm import ddm_estimate
from vibntf.stft import StftConfig, stft_forward
from vibntf.synth import (
    SynthRanges,
    VibratoParams,
    fsfr_trajectory,
    max_partials,
    note_frequency,
    render_vibrato_square,
    sample_vibrato_params,
)

from .conftest import FS


def test_note_grid_anchor():
    assert note_frequency(0) == 220.0
    assert note_frequency(12) == pytest.approx(440.0)
    assert note_frequency(23) == pytest.approx(830.609, abs=1e-3)


def test_partial_limit_for_top_note():
    assert max_partials(830.6, 0.2, FS) == 11
    assert (2 * 11 - 1) * 830.6 * 1.2 < FS / 2 <= (2 * 12 - 1) * 830.6 * 1.2


def test_sampler_deterministic_and_in_range():
    a = sample_vibrato_params(np.random.default_rng(7))
    b = sample_vibrato_params(np.random.default_rng(7))
    assert a == b
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = sample_vibrato_params(rng)
        k = round(12 * math.log2(p.f0 / 220.0))
        assert 0 <= k <= 23 and p.f0 == pytest.approx(note_frequency(k))
        assert 1 <= p.num_partials <= 30
        assert p.harmonic(p.num_partials) * p.f0 * (1 + p.depth) < FS / 2
        assert 0.05 <= p.depth <= 0.2
        assert 0.5 <= p.rate <= 10
        assert len(p.phase0) == p.num_partials


def test_ranges_validation():
    with pytest.raises(ValueError):
        SynthRanges(depth_range=(0.3, 0.1))
    with pytest.raises(ValueError):
        VibratoParams(220.0, 3, 1.0, 2.0)


def test_render_peak_and_finite():
    p = VibratoParams(330.0, 12, 0.15, 5.0, tuple(np.linspace(0, 3, 12)))
    x = render_vibrato_square(p, 0.5).samples
    assert np.all(np.isfinite(x))
    assert np.max(np.abs(x)) == pytest.approx(0.9, abs=1e-12)


def test_aliasing_partial_rejected():
    with pytest.raises(ValueError):
        render_vibrato_square(VibratoParams(830.6, 12, 0.2, 2.0), 0.1)


def test_stationary_peaks_at_odd_harmonics():
    f0 = 440.0
    x = render_vibrato_square(VibratoParams(f0, 6, 0.0, 1.0), 1.0).samples
    mag = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(len(x), 1 / FS)
    top = np.sort(freqs[np.argsort(mag)[-6:]])
    np.testing.assert_allclose(top, f0 * np.arange(1, 12, 2), atol=1.0)
    even = mag[np.argmin(np.abs(freqs - 2 * f0))]
    assert even < 1e-6 * mag.max()


def test_instantaneous_fundamental_span():
    p = VibratoParams(220.0, 1, 0.1, 3.0)
    tau = np.arange(FS * 2) / FS
    # instantaneous frequency from the warped phase derivative
    inst = 220.0 * (1 + p.depth * np.sin(2 * np.pi * p.rate * tau))
    assert inst.min() == pytest.approx(198.0, abs=1e-3)
    assert inst.max() == pytest.approx(242.0, abs=1e-3)
    x = render_vibrato_square(p, 2.0).samples
    phase = np.unwrap(np.angle(_analytic(x)))
    measured = np.diff(phase) * FS / (2 * np.pi)
    core = measured[2000:-2000]
    assert core.min() == pytest.approx(198.0, abs=0.5)
    assert core.max() == pytest.approx(242.0, abs=0.5)


def _analytic(x):
    spec = np.fft.fft(x)
    h = np.zeros(len(x))
    h[0] = 1
    h[1 : (len(x) + 1) // 2] = 2
    if len(x) % 2 == 0:
        h[len(x) // 2] = 1
    return np.fft.ifft(spec * h)


def _ddm_at_partials(params, n_partials):
    buf = render_vibrato_square(params, 2.0)
    cfg = StftConfig()
    field = ddm_estimate(buf, cfg)
    mag = np.abs(stft_forward(buf, cfg).values)
    tau = np.arange(field.shape[1]) * cfg.hop / FS
    truth = fsfr_trajectory(params, tau)
    # frames at the FSFR extrema (kappa crosses zero) away from the edges
    extrema = np.where(np.abs(np.cos(2 * np.pi * params.rate * tau)) > 0.995)[0]
    extrema = extrema[(extrema > 4) & (extrema < field.shape[1] - 5)]
    out = []
    for p in range(1, n_partials + 1):
        k = 2 * p - 1
        rows = []
        for t in extrema:
            centre = k * params.f0 * (1 + params.depth * math.sin(2 * math.pi * params.rate * tau[t]))
            b0 = int(round(centre * cfg.fft_len / FS))
            lo, hi = b0 - 3, b0 + 4
            f = lo + int(np.argmax(mag[lo:hi, t]))
            rows.append(field.fsfr[f, t])
        out.append(np.array(rows))
    return np.array(out), truth[extrema]


def test_ddm_tracks_closed_form_fsfr_at_extrema():
    params = VibratoParams(440.0, 10, 0.1, 2.0)
    est, truth = _ddm_at_partials(params, 1)
    assert len(truth) >= 4
    rel = np.abs(est[0] - truth) / np.abs(truth)
    assert rel.max() < 0.10, rel


def test_three_strongest_partials_share_fsfr():
    params = VibratoParams(440.0, 10, 0.1, 2.0)
    est, truth = _ddm_at_partials(params, 3)
    rel = np.abs(est - truth[None, :]) / np.abs(truth)[None, :]
    assert rel.max() < 0.10, rel
