"""Waveform ingestion: WAV files, resampling, and fixed-length chunking.

The WAV reader is a small RIFF parser kept deliberately explicit so that
malformed files fail with the offending field named. Only the two codecs
we produce and consume are supported: 16-bit PCM and 32-bit IEEE float.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, FormatError

CANONICAL_RATE = 16000

_FMT_PCM = 1
_FMT_FLOAT = 3


@dataclass
class Waveform:
    """Mono PCM signal with samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.sample_rate <= 0:
            raise FormatError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def load_wav(path, target_rate: int = CANONICAL_RATE) -> Waveform:
    """Read a RIFF/WAVE file, average to mono, and resample to 16 kHz."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated RIFF header ({len(raw)} bytes)")
    if raw[0:4] != b"RIFF":
        raise FormatError(f"{path}: bad chunk id {raw[0:4]!r}, expected b'RIFF'")
    if raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: bad format tag {raw[8:12]!r}, expected b'WAVE'")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if size < 16:
                raise FormatError(f"{path}: fmt chunk too small ({size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)     # chunks are word-aligned

    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")

    audio_format, channels, rate, _, _, bits = fmt
    if channels < 1:
        raise FormatError(f"{path}: channel count {channels} invalid")
    if audio_format == _FMT_PCM and bits == 16:
        ints = np.frombuffer(data, dtype="<i2")
        samples = ints.astype(np.float32) / 32768.0
    elif audio_format == _FMT_FLOAT and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float32)
    else:
        raise FormatError(
            f"{path}: unsupported codec (audio_format={audio_format}, "
            f"bits_per_sample={bits}); expected PCM16 or float32")

    if channels > 1:
        usable = (len(samples) // channels) * channels
        samples = samples[:usable].reshape(-1, channels).mean(axis=1)
    samples = samples.astype(np.float32)

    w = Waveform(samples, rate)
    if rate != target_rate:
        w = resample(w, target_rate)
    return w


def save_wav(path, w: Waveform):
    """Write 16-bit PCM, clipping to [-1, 1)."""
    clipped = np.clip(w.samples, -1.0, 32767.0 / 32768.0)
    ints = np.round(clipped * 32768.0).astype("<i2")
    data = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, _FMT_PCM, 1, w.sample_rate,
                                w.sample_rate * 2, 2, 16)
    with open(path, "wb") as f:
        f.write(header + fmt + b"data" + struct.pack("<I", len(data)) + data)


def resample(w: Waveform, rate: int) -> Waveform:
    """Linear-interpolation resampling."""
    if rate == w.sample_rate:
        return w
    n_out = int(round(len(w.samples) * rate / w.sample_rate))
    if n_out == 0:
        return Waveform(np.zeros(0, dtype=np.float32), rate)
    t_in = np.arange(len(w.samples)) / w.sample_rate
    t_out = np.arange(n_out) / rate
    out = np.interp(t_out, t_in, w.samples.astype(np.float64))
    return Waveform(out.astype(np.float32), rate)


def chunk(w: Waveform, chunk_seconds: float) -> list:
    """Split into non-overlapping fixed-length pieces.

    Full pieces are emitted in order; a trailing partial piece is
    zero-padded to full length and kept only if it covers at least half a
    chunk. Every returned chunk has exactly chunk_seconds * sample_rate
    samples.
    """
    if len(w.samples) == 0:
        raise EmptyInputError("cannot chunk an empty waveform")
    if chunk_seconds <= 0:
        raise EmptyInputError(f"chunk_seconds must be positive, got {chunk_seconds}")
    size = int(round(chunk_seconds * w.sample_rate))
    full = len(w.samples) // size
    chunks = [Waveform(w.samples[i * size:(i + 1) * size], w.sample_rate)
              for i in range(full)]
    rest = len(w.samples) - full * size
    if rest * 2 >= size:
        tail = np.zeros(size, dtype=np.float32)
        tail[:rest] = w.samples[full * size:]
        chunks.append(Waveform(tail, w.sample_rate))
    return chunks
