"""MFCC feature extraction.

The pipeline per clip is::

    peak normalize -> pre-emphasis -> framing -> Hamming window -> PSD
    -> mel filterbank -> log -> orthonormal DCT-II -> keep c2..c13
    -> per-utterance mean/variance normalization
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from .audio import peak_normalize
from .errors import (
    ConfigError,
    EmptyInputError,
    InvalidGeometryError,
    TooFewFramesError,
)


@dataclass(frozen=True)
class MfccConfig:
    frame_len: int = 256
    overlap: int = 100
    preemphasis_alpha: float = 0.99
    preemphasis_enabled: bool = True
    num_filters: int = 26
    coeff_lo: int = 2
    coeff_hi: int = 13
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.frame_len < 2 or self.frame_len & (self.frame_len - 1):
            raise ConfigError("frame_len must be a power of two >= 2")
        if not 0 < self.overlap < self.frame_len:
            raise ConfigError("overlap must satisfy 0 < overlap < frame_len")
        if not 0.0 <= self.preemphasis_alpha < 1.0:
            raise ConfigError("preemphasis_alpha must lie in [0, 1)")
        if not 1 < self.coeff_lo <= self.coeff_hi <= self.num_filters:
            raise ConfigError("need 1 < coeff_lo <= coeff_hi <= num_filters")
        if not self.log_floor > 0:
            raise ConfigError("log_floor must be positive")

    @property
    def hop(self):
        return self.frame_len - self.overlap

    @property
    def dim(self):
        return self.coeff_hi - self.coeff_lo + 1


def pre_emphasize(samples, alpha):
    """First-order high-pass ``y[t] = x[t] - alpha * x[t-1]`` with ``y[0] = x[0]``."""
    x = np.asarray(samples, dtype=np.float64)
    y = x.copy()
    y[1:] -= alpha * x[:-1]
    return y


def frame_count(n_samples, frame_len, overlap):
    hop = frame_len - overlap
    if n_samples <= frame_len:
        return 1
    return -(-(n_samples - frame_len) // hop) + 1


def frame_signal(samples, frame_len, overlap):
    """Split into overlapping frames; the last frame is zero padded.

    Returns an array of shape ``(n_frames, frame_len)``.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptyInputError("cannot frame an empty signal")
    hop = frame_len - overlap
    n = frame_count(x.size, frame_len, overlap)
    padded = np.zeros((n - 1) * hop + frame_len)
    padded[: x.size] = x
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n)[:, None]
    return padded[idx]


def hamming_window(frame_len):
    n = np.arange(frame_len)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (frame_len - 1))


def power_spectrum(frames):
    """One-sided ``|FFT|^2 / N`` of each frame (last axis)."""
    frames = np.asarray(frames, dtype=np.float64)
    n = frames.shape[-1]
    spec = np.fft.rfft(frames, n=n, axis=-1)
    return (spec.real**2 + spec.imag**2) / n


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def filter_edge_bins(num_filters, fft_size, sample_rate_hz):
    """FFT bin of each of the ``num_filters + 2`` mel-spaced edge points."""
    mels = np.linspace(0.0, hz_to_mel(sample_rate_hz / 2.0), num_filters + 2)
    return np.round(mel_to_hz(mels) * fft_size / sample_rate_hz).astype(int)


@lru_cache(maxsize=32)
def _filterbank_cached(num_filters, fft_size, sample_rate_hz):
    bins = filter_edge_bins(num_filters, fft_size, sample_rate_hz)
    if np.any(np.diff(bins) <= 0):
        raise InvalidGeometryError(
            f"{num_filters} filters do not fit on distinct bins "
            f"(fft_size={fft_size}, sample_rate={sample_rate_hz})"
        )
    fb = np.zeros((num_filters, fft_size // 2 + 1))
    k = np.arange(fft_size // 2 + 1)
    for i in range(num_filters):
        left, center, right = bins[i], bins[i + 1], bins[i + 2]
        rise = (k - left) / (center - left)
        fall = (right - k) / (right - center)
        fb[i] = np.clip(np.minimum(rise, fall), 0.0, None)
    fb.setflags(write=False)
    return fb


def mel_filterbank(num_filters, fft_size, sample_rate_hz):
    """Triangular unit-peak filters, shape ``(num_filters, fft_size // 2 + 1)``."""
    if num_filters < 1:
        raise InvalidGeometryError("num_filters must be >= 1")
    if fft_size < 2 or fft_size & (fft_size - 1):
        raise InvalidGeometryError("fft_size must be a power of two")
    return _filterbank_cached(int(num_filters), int(fft_size), int(sample_rate_hz))


def raw_cepstra(clip, config=MfccConfig()):
    """Kept cepstral coefficients per frame, before normalization."""
    if len(clip) == 0:
        raise EmptyInputError("clip has no samples")
    x = peak_normalize(clip).samples
    if config.preemphasis_enabled:
        x = pre_emphasize(x, config.preemphasis_alpha)
    frames = frame_signal(x, config.frame_len, config.overlap)
    frames = frames * hamming_window(config.frame_len)
    psd = power_spectrum(frames)
    fb = mel_filterbank(config.num_filters, config.frame_len, clip.sample_rate_hz)
    energies = psd @ fb.T
    log_e = np.log(np.maximum(energies, config.log_floor))
    cep = dct(log_e, type=2, norm="ortho", axis=1)
    return cep[:, config.coeff_lo - 1 : config.coeff_hi]


def normalize_features(raw, sigma_floor=1e-12):
    """Standardize each coefficient over frames (population std).

    Coefficients whose spread is below ``sigma_floor`` become all zero.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] < 2:
        raise TooFewFramesError("normalization needs at least two frames")
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    centered = raw - mean
    out = np.zeros_like(raw)
    ok = std >= sigma_floor
    out[:, ok] = centered[:, ok] / std[ok]
    return out


def extract_mfcc(clip, config=MfccConfig()):
    """Normalized MFCC matrix of shape ``(n_frames, config.dim)``."""
    return normalize_features(raw_cepstra(clip, config))


def features_to_csv(features, path, coeff_lo=2):
    """Write one row per frame with header ``frame,c<lo>,...,c<hi>``."""
    features = np.asarray(features)
    names = [f"c{i}" for i in range(coeff_lo, coeff_lo + features.shape[1])]
    lines = ["frame," + ",".join(names)]
    for i, row in enumerate(features):
        lines.append(str(i) + "," + ",".join(format(v, ".12g") for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
