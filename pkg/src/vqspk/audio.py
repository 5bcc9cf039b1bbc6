"""Reading and writing PCM WAV files as normalized mono clips."""

from dataclasses import dataclass
import struct

import numpy as np

from .errors import IoFailure, NotWavError, TruncatedError, UnsupportedEncodingError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono samples in [-1, 1] together with their sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples must lie in [-1, 1]")
        if int(self.sample_rate_hz) <= 0 or int(self.sample_rate_hz) != self.sample_rate_hz:
            raise ValueError("sample_rate_hz must be a positive integer")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz

    def scaled(self, gain):
        """Copy with every sample multiplied by ``gain`` (clipped to [-1, 1])."""
        return AudioClip(np.clip(self.samples * gain, -1.0, 1.0), self.sample_rate_hz)


def _parse_fmt(body):
    if len(body) < 16:
        raise NotWavError("fmt chunk too short")
    fmt_code, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if fmt_code == WAVE_FORMAT_EXTENSIBLE and len(body) >= 40:
        # first two bytes of the SubFormat GUID carry the real format code
        (fmt_code,) = struct.unpack("<H", body[24:26])
    if fmt_code != WAVE_FORMAT_PCM:
        raise UnsupportedEncodingError(f"format code {fmt_code:#06x} is not PCM")
    if bits not in (8, 16):
        raise UnsupportedEncodingError(f"{bits}-bit PCM is not supported")
    if channels not in (1, 2):
        raise UnsupportedEncodingError(f"{channels} channels are not supported")
    if rate == 0:
        raise UnsupportedEncodingError("sample rate is zero")
    return channels, rate, bits


def decode_wav(data):
    """Decode a RIFF/WAVE byte string into an :class:`AudioClip`."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWavError("missing RIFF/WAVE header")
    pos = 12
    fmt = None
    pcm = None
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body)
        elif chunk_id == b"data":
            if len(body) < size:
                raise TruncatedError(f"data chunk declares {size} bytes, found {len(body)}")
            pcm = body
            break
        # chunks are word aligned
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise NotWavError("no fmt chunk")
    if pcm is None:
        raise NotWavError("no data chunk")

    channels, rate, bits = fmt
    frame_bytes = channels * bits // 8
    usable = len(pcm) - len(pcm) % frame_bytes
    if bits == 16:
        raw = np.frombuffer(pcm[:usable], dtype="<i2").astype(np.float64) / 32768.0
    else:
        raw = (np.frombuffer(pcm[:usable], dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    return AudioClip(raw, rate)


def read_wav(path):
    """Read an 8- or 16-bit PCM WAV file, downmixing stereo to mono."""
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_wav(data)


def encode_wav(clip):
    """Encode ``clip`` as 16-bit mono PCM WAV bytes."""
    quant = np.clip(np.round(clip.samples * 32767.0), -32768, 32767).astype("<i2")
    pcm = quant.tobytes()
    fmt = struct.pack("<HHIIHH", WAVE_FORMAT_PCM, 1, clip.sample_rate_hz,
                      clip.sample_rate_hz * 2, 2, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(pcm)) + pcm
    if len(pcm) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def write_wav(clip, path):
    try:
        with open(path, "wb") as fh:
            fh.write(encode_wav(clip))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def peak_normalize(clip):
    """Scale ``clip`` so its largest absolute sample is 1.

    An all-zero clip is returned unchanged.
    """
    peak = np.max(np.abs(clip.samples)) if len(clip) else 0.0
    if peak == 0.0:
        return clip
    out = clip.samples / peak
    # division can overshoot by an ulp
    np.clip(out, -1.0, 1.0, out=out)
    return AudioClip(out, clip.sample_rate_hz)
