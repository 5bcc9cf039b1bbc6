import numpy as np
import pytest

from vqspk.audio import AudioClip


def tone(freq_hz, duration_s=1.0, fs=16000, amp=0.5, phase=0.0):
    t = np.arange(int(round(duration_s * fs))) / fs
    return AudioClip(amp * np.sin(2 * np.pi * freq_hz * t + phase), fs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Four synthetic speakers, 1.5 s clips: (train_dir, test_dir)."""
    from vqspk.signal import generate_corpus

    root = tmp_path_factory.mktemp("small") / "corpus"
    return generate_corpus(root, count=4, duration_s=1.5)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
