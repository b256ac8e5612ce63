"""Mono WAV reading/writing and the time-domain Signal container.

Accepted input formats: RIFF/WAVE, little-endian, exactly one channel,
fmt code 1 with 16 bits per sample or fmt code 3 with 32-bit floats.
Output is always float32 (fmt code 3), which keeps write/read round
trips quantization-free.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptHeaderError, UnsupportedFormatError

_FMT_PCM = 1
_FMT_FLOAT = 3


@dataclass(frozen=True)
class Signal:
    """Mono sample sequence with its sample rate.

    Samples are stored as float64 and are nominally in [-1, 1], but
    out-of-range values are allowed (write_wav does not clip).
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("Signal samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("Signal samples must be finite")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def _iter_chunks(data: bytes):
    """Yield (chunk_id, payload) pairs from a RIFF body, validating sizes."""
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise CorruptHeaderError(f"truncated chunk header at byte {pos}")
        cid, size = struct.unpack_from("<4sI", data, pos)
        start = pos + 8
        if start + size > len(data):
            raise CorruptHeaderError(
                f"chunk {cid!r} claims {size} bytes but only "
                f"{len(data) - start} remain"
            )
        yield cid, data[start : start + size]
        pos = start + size + (size & 1)  # chunks are word-aligned


def read_wav(path: str | Path) -> Signal:
    """Read a mono WAV file into a Signal with samples scaled to [-1, 1].

    16-bit PCM samples are divided by 32768; float32 samples are taken
    as stored.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")
    declared = struct.unpack_from("<I", data, 4)[0]
    if declared + 8 > len(data):
        raise CorruptHeaderError(
            f"{path}: RIFF size {declared} exceeds file length {len(data)}"
        )

    fmt = None
    payload = None
    for cid, chunk in _iter_chunks(data):
        if cid == b"fmt " and fmt is None:
            if len(chunk) < 16:
                raise CorruptHeaderError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", chunk, 0)
        elif cid == b"data" and payload is None:
            payload = chunk
    if fmt is None or payload is None:
        raise CorruptHeaderError(f"{path}: missing fmt or data chunk")

    code, channels, rate, _byte_rate, _block_align, bits = fmt
    if channels != 1:
        raise UnsupportedFormatError(f"{path}: {channels} channels, need mono")
    if code == _FMT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif code == _FMT_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedFormatError(
            f"{path}: fmt code {code} with {bits} bits is not supported"
        )
    if samples.size and not np.all(np.isfinite(samples)):
        raise CorruptHeaderError(f"{path}: non-finite sample values")
    return Signal(samples, rate)


def write_wav(path: str | Path, signal: Signal) -> None:
    """Write a Signal as a mono float32 WAV file (fmt code 3)."""
    frames = np.asarray(signal.samples, dtype="<f4").tobytes()
    rate = signal.sample_rate_hz
    fmt_chunk = struct.pack("<HHIIHH", _FMT_FLOAT, 1, rate, rate * 4, 4, 32)
    fact_chunk = struct.pack("<I", len(signal))
    body = (
        b"WAVE"
        + b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
        + b"fact" + struct.pack("<I", len(fact_chunk)) + fact_chunk
        + b"data" + struct.pack("<I", len(frames)) + frames
    )
    blob = b"RIFF" + struct.pack("<I", len(body)) + body
    Path(path).write_bytes(blob)
