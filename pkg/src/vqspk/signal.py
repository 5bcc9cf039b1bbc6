"""Frequency-domain notch filtering and a deterministic synthetic speaker corpus."""

from dataclasses import dataclass
import math
from pathlib import Path

import numpy as np

from .audio import AudioClip, peak_normalize, write_wav
from .errors import ConfigError


@dataclass(frozen=True)
class NotchSpec:
    """Band-stop around ``center_hz``.

    The total stop width is ``width_factor * fs / 2``, so the stopband
    half-width is ``width_factor * fs / 4``. A raised-cosine ramp of
    ``transition_hz`` joins the stopband to the passband on both sides.
    """

    center_hz: float = 1000.0
    width_factor: float = 0.1
    transition_hz: float = 50.0

    def __post_init__(self):
        if not self.center_hz > 0:
            raise ConfigError("center_hz must be positive")
        if not 0.0 <= self.width_factor < 1.0:
            raise ConfigError("width_factor must lie in [0, 1)")
        if not self.transition_hz > 0:
            raise ConfigError("transition_hz must be positive")

    def half_width_hz(self, sample_rate_hz):
        return self.width_factor * sample_rate_hz / 4.0


def notch_gain(freqs_hz, spec, sample_rate_hz):
    """Magnitude response of the notch at ``freqs_hz``."""
    if spec.center_hz > sample_rate_hz / 2.0:
        raise ConfigError(
            f"notch center {spec.center_hz} Hz lies above Nyquist ({sample_rate_hz / 2} Hz)"
        )
    freqs_hz = np.asarray(freqs_hz, dtype=np.float64)
    if spec.width_factor == 0.0:
        return np.ones_like(freqs_hz)
    half = spec.half_width_hz(sample_rate_hz)
    dist = np.abs(freqs_hz - spec.center_hz)
    ramp = np.clip((dist - half) / spec.transition_hz, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * ramp))


def notch_filter(clip, spec):
    """Zero the band around ``spec.center_hz`` via a full-length real FFT."""
    n = len(clip)
    if n == 0:
        raise ValueError("clip has no samples")
    spectrum = np.fft.rfft(clip.samples)
    freqs = np.fft.rfftfreq(n, d=1.0 / clip.sample_rate_hz)
    gain = notch_gain(freqs, spec, clip.sample_rate_hz)
    if np.all(gain == 1.0):
        return clip
    out = np.fft.irfft(spectrum * gain, n=n)
    # masking cannot raise the peak by more than rounding, but keep the clip valid
    np.clip(out, -1.0, 1.0, out=out)
    return AudioClip(out, clip.sample_rate_hz)


@dataclass(frozen=True)
class SpeakerProfile:
    """Formant layout of one synthetic speaker.

    ``formants`` is a tuple of ``(frequency_hz, relative_amplitude)`` pairs.
    ``noise_snr_db = math.inf`` disables the additive noise.
    """

    formants: tuple
    jitter_seed: int
    noise_snr_db: float = 25.0

    def __post_init__(self):
        freqs = [f for f, _ in self.formants]
        if not 3 <= len(freqs) <= 4:
            raise ConfigError("a profile needs 3 or 4 formants")
        if len(set(freqs)) != len(freqs):
            raise ConfigError("formant frequencies must be distinct")
        if any(f <= 0 for f in freqs):
            raise ConfigError("formant frequencies must be positive")
        if math.isnan(self.noise_snr_db) or self.noise_snr_db == -math.inf:
            raise ConfigError("noise_snr_db must be finite or +inf")


JITTER = 0.02


def _smooth_track(rng, n, fs, rate_lo, rate_hi, parts=3):
    """Slowly varying random signal in [-1, 1]."""
    t = np.arange(n) / fs
    track = np.zeros(n)
    for _ in range(parts):
        rate = rng.uniform(rate_lo, rate_hi)
        track += np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    return track / parts


def synth_speaker_clip(profile, duration_s=2.0, fs=16000, utterance_seed=0):
    """Deterministic speech-like clip for ``profile``.

    Each formant is a sinusoid whose frequency wanders within +-2% of its
    nominal value and whose amplitude follows its own syllable-rate envelope,
    so successive frames mix the formants in varying proportions. White
    Gaussian noise is added at ``profile.noise_snr_db`` and the result is
    peak normalized.
    """
    if not duration_s > 0:
        raise ValueError("duration_s must be positive")
    n = int(round(duration_s * fs))
    if n < 1:
        raise ValueError("duration too short for one sample")
    if any(f >= fs / 2 for f, _ in profile.formants):
        raise ConfigError("formant frequencies must lie below fs/2")
    rng = np.random.default_rng([profile.jitter_seed, utterance_seed])

    voiced = np.zeros(n)
    for freq, amp in profile.formants:
        wander = _smooth_track(rng, n, fs, 0.5, 3.0)
        inst = freq * (1.0 + JITTER * wander)
        phase = 2 * np.pi * np.cumsum(inst) / fs + rng.uniform(0, 2 * np.pi)
        env = 0.5 * (1.0 + _smooth_track(rng, n, fs, 3.0, 9.0, parts=2))
        voiced += amp * env**3 * np.sin(phase)

    signal = voiced
    if profile.noise_snr_db != math.inf:
        p_sig = np.mean(voiced**2)
        p_noise = p_sig / 10.0 ** (profile.noise_snr_db / 10.0)
        signal = voiced + rng.normal(0.0, math.sqrt(p_noise), n)
    peak = np.max(np.abs(signal))
    if peak > 0:
        signal = signal / peak
    return peak_normalize(AudioClip(np.clip(signal, -1.0, 1.0), fs))


# formant search ranges, Hz
_F_RANGES = ((300.0, 900.0), (900.0, 2200.0), (2200.0, 3400.0))
_MIN_SPACING = 150.0


def default_profiles(count=11, seed=2024, noise_snr_db=25.0):
    """Deterministic formant triples; the first ``k`` profiles do not depend on ``count``.

    Formants within a triple are at least 150 Hz apart, and each new
    profile differs from every earlier one by at least 120 Hz in some formant.
    """
    rng = np.random.default_rng(seed)
    profiles = []
    while len(profiles) < count:
        freqs = [round(rng.uniform(lo, hi), 1) for lo, hi in _F_RANGES]
        if min(np.diff(freqs)) < _MIN_SPACING:
            continue
        if any(max(abs(a - b) for a, b in zip(freqs, [f for f, _ in p.formants])) < 120.0
               for p in profiles):
            continue
        amps = [1.0, round(rng.uniform(0.4, 0.9), 3), round(rng.uniform(0.2, 0.6), 3)]
        profiles.append(
            SpeakerProfile(tuple(zip(freqs, amps)), jitter_seed=seed + 7919 * (len(profiles) + 1),
                           noise_snr_db=noise_snr_db)
        )
    return profiles


def heldout_dir_for(train_dir):
    """``<dir>-test`` sibling that holds the held-out utterances."""
    train_dir = Path(train_dir)
    return train_dir.with_name(train_dir.name + "-test")


def generate_corpus(out_dir, count=11, duration_s=2.0, fs=16000, train_seed=1, test_seed=2,
                    profiles=None):
    """Write ``<out_dir>/s<k>.wav`` training clips and ``<out_dir>-test/s<k>.wav`` test clips.

    Returns the pair of directories.
    """
    if train_seed == test_seed:
        raise ValueError("train and test utterance seeds must differ")
    profiles = default_profiles(count) if profiles is None else profiles
    train_dir = Path(out_dir)
    test_dir = heldout_dir_for(train_dir)
    train_dir.mkdir(parents=True, exist_ok=True)
    test_dir.mkdir(parents=True, exist_ok=True)
    for k, profile in enumerate(profiles, start=1):
        write_wav(synth_speaker_clip(profile, duration_s, fs, train_seed), train_dir / f"s{k}.wav")
        write_wav(synth_speaker_clip(profile, duration_s, fs, test_seed), test_dir / f"s{k}.wav")
    return train_dir, test_dir
