"""PCM16 WAV container: round-trips and malformed-file diagnostics."""

import struct

import numpy as np
import pytest

import glotfit as g
from glotfit.errors import FormatError, InvalidParams

FS = 16000.0


def test_lattice_round_trip_exact(tmp_path):
    # values on the int16/32768 lattice survive a round trip bit-exactly
    rng = np.random.default_rng(0)
    q = rng.integers(-32768, 32768, size=997)
    x = q.astype(np.float64) / 32768.0
    p = tmp_path / "t.wav"
    g.write_wav(p, g.Waveform(x, FS))
    back = g.read_wav(p)
    assert back.fs_hz == FS
    assert np.array_equal(back.samples, x)


def test_rewrite_is_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.uniform(-0.9, 0.9, size=500)
    p1, p2 = tmp_path / "a.wav", tmp_path / "b.wav"
    g.write_wav(p1, g.Waveform(x, FS))
    g.write_wav(p2, g.read_wav(p1))
    assert p1.read_bytes() == p2.read_bytes()


def test_quantization_error_bounded(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.uniform(-0.99, 0.99, size=400)
    p = tmp_path / "t.wav"
    g.write_wav(p, g.Waveform(x, FS))
    back = g.read_wav(p)
    assert np.max(np.abs(back.samples - x)) <= 0.5 / 32768.0 + 1e-12


def test_out_of_range_samples_rejected(tmp_path):
    with pytest.raises(InvalidParams):
        g.write_wav(tmp_path / "t.wav", g.Waveform(np.array([0.0, 1.5]), FS))


def test_bad_magic_offset(tmp_path):
    p = tmp_path / "t.wav"
    p.write_bytes(b"JUNKJUNKJUNKJUNK")
    with pytest.raises(FormatError) as ei:
        g.read_wav(p)
    assert ei.value.offset == 0


def test_bad_wave_tag_offset(tmp_path):
    p = tmp_path / "t.wav"
    p.write_bytes(b"RIFF" + struct.pack("<I", 8) + b"AIFF" + b"\0" * 8)
    with pytest.raises(FormatError) as ei:
        g.read_wav(p)
    assert ei.value.offset == 8


def test_truncated_chunk_reports_size_field(tmp_path):
    p = tmp_path / "t.wav"
    good = tmp_path / "good.wav"
    g.write_wav(good, g.Waveform(np.zeros(100), FS))
    blob = good.read_bytes()
    p.write_bytes(blob[:-10])
    with pytest.raises(FormatError) as ei:
        g.read_wav(p)
    assert "ends early" in str(ei.value)


def test_stereo_rejected(tmp_path):
    p = tmp_path / "t.wav"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, 2, 16000, 64000, 4, 16)
    data = b"data" + struct.pack("<I", 4) + b"\0" * 4
    body = fmt + data
    p.write_bytes(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)
    with pytest.raises(FormatError) as ei:
        g.read_wav(p)
    assert "channel" in str(ei.value)


def test_float_format_rejected(tmp_path):
    p = tmp_path / "t.wav"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 3, 1, 16000, 64000, 4, 32)
    body = fmt + b"data" + struct.pack("<I", 0)
    p.write_bytes(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)
    with pytest.raises(FormatError) as ei:
        g.read_wav(p)
    assert "format tag" in str(ei.value)


def test_unknown_chunks_skipped(tmp_path):
    # a LIST chunk between fmt and data must not break parsing
    good = tmp_path / "good.wav"
    x = np.array([0.25, -0.5, 0.125])
    g.write_wav(good, g.Waveform(x, FS))
    blob = good.read_bytes()
    fmt_end = 12 + 8 + 16
    extra = b"LIST" + struct.pack("<I", 6) + b"INFOab"
    patched = blob[:fmt_end] + extra + blob[fmt_end:]
    patched = patched[:4] + struct.pack("<I", len(patched) - 8) + patched[8:]
    p = tmp_path / "t.wav"
    p.write_bytes(patched)
    back = g.read_wav(p)
    assert np.array_equal(back.samples, x)


def test_missing_data_chunk(tmp_path):
    p = tmp_path / "t.wav"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 16000, 32000, 2, 16)
    p.write_bytes(b"RIFF" + struct.pack("<I", 4 + len(fmt)) + b"WAVE" + fmt)
    with pytest.raises(FormatError) as ei:
        g.read_wav(p)
    assert "data chunk" in str(ei.value)
