import struct

from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
import numpy as np
import pytest

from vqspk.audio import (
    AudioClip,
    decode_wav,
    encode_wav,
    peak_normalize,
    read_wav,
    write_wav,
)
from vqspk.errors import NotWavError, TruncatedError, UnsupportedEncodingError

from conftest import tone


def make_wav(pcm, channels=1, bits=16, rate=8000, fmt_code=1, extra_chunks=b"", declared=None):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_code, channels, rate, rate * block, block, bits)
    data_len = len(pcm) if declared is None else declared
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + extra_chunks
    body += b"data" + struct.pack("<I", data_len) + pcm
    return b"RIFF" + struct.pack("<I", len(body)) + body


def test_16bit_full_scale_positive():
    clip = decode_wav(make_wav(np.array([32767], "<i2").tobytes()))
    assert clip.samples[0] == 32767 / 32768


def test_16bit_zero_chunk():
    clip = decode_wav(make_wav(np.zeros(50, "<i2").tobytes()))
    assert np.all(clip.samples == 0.0)
    assert len(clip) == 50


def test_8bit_mapping():
    clip = decode_wav(make_wav(bytes([0, 128, 255]), bits=8))
    np.testing.assert_array_equal(clip.samples, [-1.0, 0.0, 127 / 128])


def test_stereo_downmix_averages_channels():
    pcm = np.array([1000, 3000, -2000, 0], "<i2").tobytes()
    clip = decode_wav(make_wav(pcm, channels=2))
    np.testing.assert_array_equal(clip.samples, [2000 / 32768, -1000 / 32768])


def test_sample_rate_from_header():
    assert decode_wav(make_wav(b"\x00\x00", rate=12500)).sample_rate_hz == 12500


def test_skips_list_chunk():
    junk = b"LIST" + struct.pack("<I", 5) + b"abcde" + b"\x00"
    clip = decode_wav(make_wav(np.array([16384], "<i2").tobytes(), extra_chunks=junk))
    assert clip.samples[0] == 0.5


@pytest.mark.parametrize("data", [b"", b"RIFX" + b"\x00" * 40, b"RIFF\x00\x00\x00\x00WAVX"])
def test_bad_magic(data):
    with pytest.raises(NotWavError):
        decode_wav(data)


def test_non_pcm_rejected():
    with pytest.raises(UnsupportedEncodingError):
        decode_wav(make_wav(b"\x00" * 4, fmt_code=3, bits=32))


def test_24bit_rejected():
    with pytest.raises(UnsupportedEncodingError):
        decode_wav(make_wav(b"\x00" * 6, bits=24))


def test_truncated_data_chunk():
    with pytest.raises(TruncatedError):
        decode_wav(make_wav(b"\x00" * 10, declared=100))


@pytest.mark.parametrize("amp,stored", [(1.0, 32767), (0.0, 0), (-1.0, -32767)])
def test_write_quantization(amp, stored):
    raw = encode_wav(AudioClip([amp], 8000))
    assert struct.unpack("<h", raw[-2:])[0] == stored


def test_written_header_is_mono_16bit(tmp_path):
    path = tmp_path / "a.wav"
    write_wav(AudioClip([0.0, 0.5], 22050), path)
    raw = path.read_bytes()
    fmt_code, channels, rate, _, _, bits = struct.unpack("<HHIIHH", raw[20:36])
    assert (fmt_code, channels, rate, bits) == (1, 1, 22050, 16)


def test_tone_round_trip_within_one_lsb(tmp_path):
    first = tmp_path / "first.wav"
    second = tmp_path / "second.wav"
    write_wav(tone(440.0, 0.25, 16000, amp=0.9), first)
    a = read_wav(first)
    write_wav(a, second)
    b = read_wav(second)
    assert np.max(np.abs(a.samples - b.samples)) <= 1 / 32768


@settings(max_examples=50, deadline=None)
@given(arrays(np.int16, st.integers(1, 64)))
def test_read_write_read_on_grid(values):
    a = decode_wav(make_wav(values.astype("<i2").tobytes()))
    assert np.all(np.abs(a.samples) <= 1.0)
    b = decode_wav(encode_wav(a))
    assert np.max(np.abs(a.samples - b.samples)) <= 1 / 32768


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=1, max_size=200), st.sampled_from([8, 16]), st.sampled_from([1, 2]))
def test_decoded_samples_always_in_range(pcm, bits, channels):
    clip = decode_wav(make_wav(pcm, channels=channels, bits=bits))
    assert np.all(np.abs(clip.samples) <= 1.0)


@pytest.mark.parametrize(
    "samples,expected",
    [([0.5, -0.25], [1.0, -0.5]), ([0.1, 0.2, -0.4], [0.25, 0.5, -1.0])],
)
def test_peak_normalize(samples, expected):
    np.testing.assert_allclose(peak_normalize(AudioClip(samples, 8000)).samples, expected, rtol=1e-15)


def test_peak_normalize_silence_unchanged():
    clip = AudioClip(np.zeros(10), 8000)
    assert peak_normalize(clip) is clip


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(-1, 1)))
def test_peak_normalize_idempotent(x):
    once = peak_normalize(AudioClip(x, 8000))
    twice = peak_normalize(once)
    np.testing.assert_array_equal(once.samples, twice.samples)


def test_clip_rejects_out_of_range():
    with pytest.raises(ValueError):
        AudioClip([1.5], 8000)
    with pytest.raises(ValueError):
        AudioClip([0.0], 0)
