"""Minimal PCM16 mono WAV reader/writer.

Hand-rolled instead of the stdlib module because parse failures must
report the byte offset of the offending field, and because the accepted
subset is deliberately narrow: RIFF/WAVE, format tag 1 (integer PCM),
one channel, 16 bits. Unknown chunks are skipped (word-aligned), so
files with LIST/INFO metadata still load.

Sample convention: int16 k maps to float k/32768, so every written file
reloads to exactly the stored lattice values and a second write/read
round-trip is bit-identical.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, InvalidParams
from .waveform import Waveform

__all__ = ["read_wav", "write_wav"]

_SCALE = 32768.0


def write_wav(path, wave: Waveform):
    """Write a Waveform as PCM16 mono; samples must lie in [-1, 1]."""
    x = wave.samples
    if x.size and (np.min(x) < -1.0 or np.max(x) > 1.0):
        raise InvalidParams(
            f"samples outside [-1, 1] (min {np.min(x):.4g}, max {np.max(x):.4g}); "
            "rescale before writing")
    q = np.clip(np.rint(x * _SCALE), -32768, 32767).astype("<i2")
    fs = int(round(wave.fs_hz))
    data = q.tobytes()
    hdr = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, fs, fs * 2, 2, 16)
    with open(path, "wb") as f:
        f.write(hdr)
        f.write(fmt)
        f.write(b"data" + struct.pack("<I", len(data)))
        f.write(data)


def read_wav(path) -> Waveform:
    """Read a PCM16 mono WAV; raises FormatError with a byte offset."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 12:
        raise FormatError(f"file too short for a RIFF header ({len(blob)} bytes)",
                          offset=0)
    if blob[0:4] != b"RIFF":
        raise FormatError(f"bad RIFF magic {blob[0:4]!r}", offset=0)
    if blob[8:12] != b"WAVE":
        raise FormatError(f"bad WAVE tag {blob[8:12]!r}", offset=8)

    pos = 12
    fs = None
    samples = None
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        (size,) = struct.unpack("<I", blob[pos + 4:pos + 8])
        body = pos + 8
        if body + size > len(blob):
            raise FormatError(
                f"chunk {cid!r} claims {size} bytes but file ends early",
                offset=pos + 4)
        if cid == b"fmt ":
            if size < 16:
                raise FormatError(f"fmt chunk too small ({size} bytes)",
                                  offset=pos + 4)
            tag, nchan, rate, _, _, bits = struct.unpack(
                "<HHIIHH", blob[body:body + 16])
            if tag != 1:
                raise FormatError(f"unsupported format tag {tag} (want PCM=1)",
                                  offset=body)
            if nchan != 1:
                raise FormatError(f"unsupported channel count {nchan} (want mono)",
                                  offset=body + 2)
            if bits != 16:
                raise FormatError(f"unsupported bit depth {bits} (want 16)",
                                  offset=body + 14)
            fs = float(rate)
        elif cid == b"data":
            if fs is None:
                raise FormatError("data chunk before fmt chunk", offset=pos)
            if size % 2 != 0:
                raise FormatError(f"odd data size {size} for 16-bit samples",
                                  offset=pos + 4)
            raw = np.frombuffer(blob[body:body + size], dtype="<i2")
            samples = raw.astype(np.float64) / _SCALE
        # chunks are word-aligned; odd sizes carry one pad byte
        pos = body + size + (size % 2)
    if fs is None:
        raise FormatError("no fmt chunk found", offset=len(blob))
    if samples is None:
        raise FormatError("no data chunk found", offset=len(blob))
    return Waveform(samples, fs)
