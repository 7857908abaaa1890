import csv
import json

import numpy as np
import pytest

from vibntf.audio import AudioBuffer, mix_at_0db, read_wav, write_wav
from vibntf.bss_eval import bss_eval_sources
from vibntf.config import ExperimentConfig, load_config
from vibntf.errors import InputError
from vibntf.experiment import CSV_COLUMNS, aggregate, run_experiment_a, run_trial, separate_file, trial_seed
from vibntf.stft import istft, stft_forward
from vibntf.synth import render_vibrato_square

from .conftest import FS
from .fixtures import TWO_NOTE_CONFIG, TWO_NOTE_DURATION_S, TWO_NOTE_SLOW_FAST

SMALL = ExperimentConfig(trials=2, duration_s=0.5, iterations=5, nmf_iterations=5, filter_len=32)


def strip_volatile(report):
    report = json.loads(json.dumps(report))
    report.pop("created")
    report.pop("wall_time_s")
    for t in report["trials"]:
        t.pop("wall_time_s")
    return report


def test_zero_trials(tmp_path):
    report = run_experiment_a(SMALL.updated(trials=0), tmp_path)
    assert report["trials"] == []
    assert report["aggregate"]["completed"] == 0
    assert report["aggregate"]["vibntf"]["sdr"]["mean"] is None
    rows = list(csv.reader((tmp_path / "trials.csv").open()))
    assert rows == [list(CSV_COLUMNS)]


def test_runs_are_deterministic_and_worker_independent(tmp_path):
    a = run_experiment_a(SMALL, tmp_path / "a")
    b = run_experiment_a(SMALL, tmp_path / "b")
    c = run_experiment_a(SMALL.updated(workers=2), tmp_path / "c")
    assert strip_volatile(a) == strip_volatile(b)
    assert strip_volatile(a)["trials"] == strip_volatile(c)["trials"]
    assert (tmp_path / "a" / "trials.csv").read_text() == (tmp_path / "b" / "trials.csv").read_text()


def test_trial_report_contents():
    rep = run_trial(SMALL, 1)
    assert rep["status"] == "ok"
    assert rep["seed"] == trial_seed(SMALL.seed, 1)
    assert len(rep["sources"]) == 2
    for algo in ("vibntf", "klnmf"):
        m = rep["metrics"][algo]
        assert sorted(m["permutation"]) == [0, 1]
        assert all(np.isfinite(m[k]).all() for k in ("sdr", "sir", "sar"))


def test_trial_seeds_differ():
    seeds = {trial_seed(0, i) for i in range(100)}
    assert len(seeds) == 100
    assert trial_seed(0, 5) != trial_seed(1, 5)


def test_aggregate_recomputable_from_csv(tmp_path):
    report = run_experiment_a(SMALL.updated(trials=3), tmp_path)
    rows = list(csv.DictReader((tmp_path / "trials.csv").open()))
    sdr = np.array([float(r["sdr"]) for r in rows if r["algorithm"] == "vibntf"])
    agg = report["aggregate"]["vibntf"]["sdr"]
    assert agg["n"] == sdr.size == 6
    assert agg["mean"] == pytest.approx(sdr.mean(), abs=1e-12)
    assert agg["ci95"] == pytest.approx(1.96 * sdr.std(ddof=1) / np.sqrt(sdr.size), abs=1e-12)


def test_failed_trials_excluded():
    ok = {"status": "ok", "metrics": {a: {"sdr": [1.0, 3.0], "sir": [0, 0], "sar": [0, 0]} for a in ("vibntf", "klnmf")}}
    agg = aggregate([ok, {"status": "failed"}])
    assert agg["completed"] == 1 and agg["failed"] == 1
    assert agg["vibntf"]["sdr"]["mean"] == 2.0


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"trials": 7, "r_bins": 20, "strict_mm": True}))
    cfg = load_config(path, r_bins=30, iterations=None)
    assert (cfg.trials, cfg.r_bins, cfg.strict_mm, cfg.iterations) == (7, 30, True, 100)
    path.write_text(json.dumps({"nope": 1}))
    with pytest.raises(InputError):
        load_config(path)


@pytest.fixture
def two_source_wav(tmp_path, rng):
    a = AudioBuffer(0.3 * rng.standard_normal(FS // 2), FS)
    b = AudioBuffer(0.3 * np.sin(2 * np.pi * 440 * np.arange(FS // 2) / FS), FS)
    mixture, _ = mix_at_0db([a, b])
    path = tmp_path / "mix.wav"
    write_wav(path, mixture)
    return path


def test_separate_single_source_is_identity(tmp_path, two_source_wav):
    out = tmp_path / "out"
    separate_file(two_source_wav, out, ExperimentConfig(sources=1, iterations=3))
    mixture = read_wav(two_source_wav)
    want = istft(stft_forward(mixture)).samples
    got = read_wav(out / "source_0.wav").samples
    assert np.max(np.abs(got - want)) < 1e-6


def test_separate_outputs_conserve_mixture(tmp_path, two_source_wav):
    out = tmp_path / "out"
    paths = separate_file(two_source_wav, out, ExperimentConfig(iterations=10))
    names = {p.name for p in paths}
    assert {"source_0.wav", "source_1.wav", "spectrogram.csv", "fsfr.csv", "r_index.csv", "mix.csv", "fm_s0.csv"} <= names
    mixture = read_wav(two_source_wav).samples
    total = read_wav(out / "source_0.wav").samples + read_wav(out / "source_1.wav").samples
    assert np.sqrt(np.mean((total - mixture) ** 2)) < 1e-5
    r_index = np.loadtxt(out / "r_index.csv", delimiter=",", dtype=int)
    assert r_index.min() >= 0 and r_index.max() < 50


def _two_note_sir(config):
    notes = [render_vibrato_square(p, TWO_NOTE_DURATION_S) for p in TWO_NOTE_SLOW_FAST]
    mixture, refs = mix_at_0db(notes)
    from vibntf.pipeline import separate_vibntf

    result, _, _ = separate_vibntf(mixture, config, seed=config.seed)
    return bss_eval_sources(result.source_signals, refs).sir


@pytest.mark.slow
def test_two_note_fixture_separates():
    sir = _two_note_sir(ExperimentConfig().updated(**TWO_NOTE_CONFIG))
    assert np.all(sir > 10), sir


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="default FSFR clip lets outliers set the quantizer range; see README")
def test_two_note_fixture_with_default_clip():
    sir = _two_note_sir(ExperimentConfig(seed=TWO_NOTE_CONFIG["seed"]))
    assert np.all(sir > 10), sir
