"""STFT analysis, magnitude spectrograms, and overlap-add inverse.

Frames start at multiples of the hop; the tail is zero-padded so every
input sample falls inside at least one frame. The inverse divides the
overlap-added output by the per-sample sum of squared window values,
which reconstructs the input exactly wherever that sum is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio_io import Signal
from .errors import EmptySignalError, InvalidConfigError



@dataclass(frozen=True)
class StftConfig:
    window_len: int = 1024
    hop: int = 512
    fft_len: int = 1024
    window: str = "hann"

    def __post_init__(self) -> None:
        if self.window_len < 2:
            raise InvalidConfigError("window_len must be at least 2")
        if self.hop <= 0 or self.hop > self.window_len:
            raise InvalidConfigError("hop must be in [1, window_len]")
        if self.fft_len < self.window_len:
            raise InvalidConfigError("fft_len must be >= window_len")
        if self.window != "hann":
            raise InvalidConfigError(f"unknown window {self.window!r}")

    @property
    def num_bins(self) -> int:
        return self.fft_len // 2 + 1

    def bin_freqs_hz(self, sample_rate_hz: int) -> np.ndarray:
        return np.arange(self.num_bins) * sample_rate_hz / self.fft_len


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window: 0.5*(1 - cos(2*pi*k/n))."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def cola_deviation(config: StftConfig) -> float:
    """Relative deviation of the overlap-added window from a constant.

    Sums window values over each residue class mod hop (the steady-state
    overlap-add sum) and returns (max - min) / mean.
    """
    w = hann_window(config.window_len)
    acc = np.zeros(config.hop)
    for i in range(config.window_len):
        acc[i % config.hop] += w[i]
    mean = acc.mean()
    if mean <= 0:
        return np.inf
    return float((acc.max() - acc.min()) / mean)


@dataclass(frozen=True)
class ComplexSpectrogram:
    """STFT output: complex bins plus the bookkeeping needed to invert it."""

    bins: np.ndarray
    config: StftConfig
    sample_rate_hz: int
    num_samples: int  # original signal length, for exact istft truncation

    def __post_init__(self) -> None:
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 2 or bins.shape[0] != self.config.num_bins:
            raise InvalidConfigError(
                f"bins shape {bins.shape} does not match fft_len "
                f"{self.config.fft_len}"
            )
        if bins.size and not np.all(np.isfinite(bins)):
            raise ValueError("spectrogram bins must be finite")
        object.__setattr__(self, "bins", bins)

    @property
    def num_frames(self) -> int:
        return self.bins.shape[1]


@dataclass(frozen=True)
class Spectrogram:
    """Non-negative magnitude matrix, frequency bins by time frames."""

    values: np.ndarray
    config: StftConfig
    sample_rate_hz: int
    num_samples: int = field(default=0)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidConfigError(f"bad spectrogram shape {values.shape}")
        if not np.all(np.isfinite(values)) or values.min() < 0:
            raise ValueError("spectrogram values must be finite and >= 0")
        object.__setattr__(self, "values", values)


def num_frames_for(n: int, config: StftConfig) -> int:
    """Frame count covering n samples with zero-padding at the tail."""
    if n <= config.window_len:
        return 1
    return int(np.ceil((n - config.window_len) / config.hop)) + 1


def stft(signal: Signal, config: StftConfig | None = None) -> ComplexSpectrogram:
    """Short-time Fourier transform with hann analysis window.

    Frame t covers samples [t*hop, t*hop + window_len); the last frame
    is zero-padded.
    """
    if config is None:
        config = StftConfig()
    n = len(signal)
    if n == 0:
        raise EmptySignalError("cannot transform an empty signal")
    frames = num_frames_for(n, config)
    padded_len = (frames - 1) * config.hop + config.window_len
    padded = np.zeros(padded_len)
    padded[:n] = signal.samples
    w = hann_window(config.window_len)
    idx = (
        np.arange(config.window_len)[None, :]
        + config.hop * np.arange(frames)[:, None]
    )
    windowed = padded[idx] * w[None, :]
    bins = np.fft.rfft(windowed, n=config.fft_len, axis=1).T
    return ComplexSpectrogram(bins, config, signal.sample_rate_hz, n)


def magnitude(cs: ComplexSpectrogram) -> Spectrogram:
    """Entrywise magnitude of a complex spectrogram."""
    return Spectrogram(
        np.abs(cs.bins), cs.config, cs.sample_rate_hz, cs.num_samples
    )


def istft(cs: ComplexSpectrogram) -> Signal:
    """Overlap-add inverse with window-squared normalization.

    Requires the config to satisfy constant overlap-add within 1e-8.
    The output is exact wherever the summed squared window is positive;
    for the periodic hann window only sample 0 has zero weight.
    """
    config = cs.config
    if cola_deviation(config) > 1e-8:
        raise InvalidConfigError(
            f"window/hop {config.window_len}/{config.hop} violates "
            "constant overlap-add"
        )
    frames = cs.num_frames
    total = (frames - 1) * config.hop + config.window_len
    w = hann_window(config.window_len)
    out = np.zeros(total)
    wsq = np.zeros(total)
    time_frames = np.fft.irfft(cs.bins.T, n=config.fft_len, axis=1)
    for t in range(frames):
        lo = t * config.hop
        out[lo : lo + config.window_len] += time_frames[t, : config.window_len] * w
        wsq[lo : lo + config.window_len] += w * w
    # Normalize every sample with any window coverage: near-edge weights
    # can be ~1e-11 but dividing there only amplifies FFT round-off to
    # ~1e-16/w, far below the reconstruction tolerance. Only samples with
    # exactly zero weight (sample 0 for periodic hann) are unrecoverable.
    covered = wsq > 0.0
    out[covered] /= wsq[covered]
    out[~covered] = 0.0
    n = cs.num_samples if cs.num_samples > 0 else total
    return Signal(out[:n], cs.sample_rate_hz)
