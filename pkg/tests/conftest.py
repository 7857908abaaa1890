import numpy as np
import pytest

from vibntf.audio import AudioBuffer

FS = 44100


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tone(freq, duration=2.0, fs=FS, phase=0.0):
    t = np.arange(int(round(duration * fs))) / fs
    return AudioBuffer(np.sin(2 * np.pi * freq * t + phase), fs)


def chirp(f_start, f_end, duration=1.0, fs=FS):
    t = np.arange(int(round(duration * fs))) / fs
    slope = (f_end - f_start) / duration
    return AudioBuffer(np.sin(2 * np.pi * (f_start * t + 0.5 * slope * t * t)), fs)


# Acceptance verdicts, collected by tests/test_acceptance.py and echoed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
