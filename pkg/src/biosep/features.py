"""Structured feature extraction from separated sources.

The numeric schema is fixed at 8 fields (see NUMERIC_FIELDS); the raw
RR interval sequence rides along for reporting. The serialized forms
carry a schema_version so downstream consumers can detect changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, peak_prominences

from .audio_io import Signal
from .errors import EmptySignalError, ZeroEnergyError
from .timefreq import Spectrogram

SCHEMA_VERSION = "1"

# Order is the contract for prompts and CSV columns.
NUMERIC_FIELDS = (
    "dominant_freq_hz",
    "spectral_centroid_hz",
    "envelope_period_s",
    "periodicity_strength",
    "rr_mean_s",
    "rr_cv",
    "burst_rate_per_s",
    "rms_level",
)

# Physiological periodicity search band, in seconds (about 30-210 BPM).
PERIOD_BAND_S = (0.29, 2.0)

# Minimum autocorrelation peak prominence to call an envelope periodic.
# White-noise envelope autocorrelations reach ~0.19 prominence by chance
# at typical envelope lengths; real heartbeat envelopes sit above 0.5.
MIN_PEAK_PROMINENCE = 0.3

# Refractory interval between detected envelope peaks.
PEAK_MIN_DISTANCE_S = 0.25


@dataclass(frozen=True)
class FeatureVector:
    source_label: str
    dominant_freq_hz: float
    spectral_centroid_hz: float
    envelope_period_s: float
    periodicity_strength: float
    rr_intervals_s: tuple[float, ...]
    rr_mean_s: float
    rr_cv: float
    burst_rate_per_s: float
    rms_level: float
    d: int = len(NUMERIC_FIELDS)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self) -> None:
        values = [getattr(self, name) for name in NUMERIC_FIELDS]
        if not all(np.isfinite(v) for v in values):
            raise ValueError("feature values must be finite")
        if min(values) < 0:
            raise ValueError("feature values must be >= 0")
        if not 0.0 <= self.periodicity_strength <= 1.0:
            raise ValueError("periodicity_strength must be in [0, 1]")

    @property
    def is_periodic(self) -> bool:
        return self.envelope_period_s > 0

    def to_json_dict(self) -> dict:
        doc = {"source_label": self.source_label, "schema_version": self.schema_version, "d": self.d}
        for name in NUMERIC_FIELDS:
            doc[name] = getattr(self, name)
        doc["rr_intervals_s"] = list(self.rr_intervals_s)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @staticmethod
    def csv_header() -> str:
        return ",".join(("source_label", "schema_version", "d") + NUMERIC_FIELDS + ("rr_intervals_s",))

    def to_csv_row(self) -> str:
        cells = [self.source_label, self.schema_version, str(self.d)]
        cells += [repr(float(getattr(self, name))) for name in NUMERIC_FIELDS]
        cells.append(";".join(repr(float(v)) for v in self.rr_intervals_s))
        return ",".join(cells)


def spectral_centroid(spec: Spectrogram) -> float:
    """Magnitude-weighted mean frequency of the time-averaged spectrum."""
    profile = spec.values.mean(axis=1)
    total = profile.sum()
    if total <= 0:
        raise ZeroEnergyError("spectrogram has no energy")
    freqs = spec.config.bin_freqs_hz(spec.sample_rate_hz)
    return float((freqs * profile).sum() / total)


def envelope(signal: Signal, frame_ms: float = 10.0) -> Signal:
    """RMS over non-overlapping frames; a partial tail frame is kept.

    The output rate is sample_rate / frame_len, rounded to an integer
    (exact for the default 10 ms frame at common audio rates).
    """
    if len(signal) == 0:
        raise EmptySignalError("cannot compute the envelope of an empty signal")
    if frame_ms <= 0:
        raise ValueError("frame_ms must be > 0")
    frame_len = max(1, int(round(signal.sample_rate_hz * frame_ms / 1000.0)))
    x = signal.samples
    whole = x.size // frame_len
    env = np.sqrt(np.mean(x[: whole * frame_len].reshape(whole, frame_len) ** 2, axis=1)) if whole else np.empty(0)
    if x.size > whole * frame_len:
        tail = np.sqrt(np.mean(x[whole * frame_len :] ** 2))
        env = np.append(env, tail)
    rate = max(1, int(round(signal.sample_rate_hz / frame_len)))
    return Signal(env, rate)


def periodicity_array(
    x: np.ndarray,
    rate_hz: float,
    band_s: tuple[float, float] = PERIOD_BAND_S,
    min_prominence: float = MIN_PEAK_PROMINENCE,
) -> tuple[float, float]:
    """periodicity() on a raw array with a possibly fractional rate.

    Used directly on NMF activation rows, whose frame rate
    (sample_rate / hop) is rarely an integer.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 4:
        return 0.0, 0.0
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom <= 0:
        return 0.0, 0.0  # constant input
    ac = np.correlate(x, x, mode="full")[n - 1 :] / denom
    lo = max(1, int(np.ceil(band_s[0] * rate_hz)))
    hi = min(n - 2, int(np.floor(band_s[1] * rate_hz)))
    if hi <= lo:
        return 0.0, 0.0
    peaks, _ = find_peaks(ac)
    peaks = peaks[(peaks >= lo) & (peaks <= hi)]
    if peaks.size == 0:
        return 0.0, 0.0
    prominences = peak_prominences(ac, peaks)[0]
    peaks = peaks[prominences >= min_prominence]
    if peaks.size == 0:
        return 0.0, 0.0
    best = peaks[np.argmax(ac[peaks])]
    return float(best / rate_hz), float(np.clip(ac[best], 0.0, 1.0))


def periodicity(
    env: Signal,
    band_s: tuple[float, float] = PERIOD_BAND_S,
    min_prominence: float = MIN_PEAK_PROMINENCE,
) -> tuple[float, float]:
    """Dominant envelope period and its strength, or (0, 0) if aperiodic.

    Uses the biased normalized autocorrelation of the mean-removed
    envelope. Candidate lags are autocorrelation local maxima inside
    band_s whose prominence reaches min_prominence; the returned period
    is the candidate with the highest autocorrelation value and the
    strength is that value clamped to [0, 1].
    """
    if len(env) == 0:
        raise EmptySignalError("cannot measure periodicity of an empty envelope")
    return periodicity_array(env.samples, env.sample_rate_hz, band_s, min_prominence)


def detect_peaks(env: Signal) -> list[float]:
    """Times (s) of envelope maxima above mean + 1 std, 0.25 s apart."""
    if len(env) == 0:
        raise EmptySignalError("cannot detect peaks in an empty envelope")
    x = env.samples
    threshold = float(x.mean() + x.std())
    rate = env.sample_rate_hz
    distance = max(1, int(round(PEAK_MIN_DISTANCE_S * rate)))
    # Pad below the minimum so maxima at the ends are still local maxima;
    # nextafter makes the mean+std threshold strict (constant input -> none).
    padded = np.concatenate(([x.min() - 1.0], x, [x.min() - 1.0]))
    idx, _ = find_peaks(
        padded, height=np.nextafter(threshold, np.inf), distance=distance
    )
    return [float((i - 1) / rate) for i in idx]


def rr_cv(intervals: tuple[float, ...] | list[float]) -> float:
    """Population coefficient of variation; 0 with fewer than 2 intervals."""
    arr = np.asarray(intervals, dtype=np.float64)
    if arr.size < 2:
        return 0.0
    mean = arr.mean()
    if mean <= 0:
        return 0.0
    return float(arr.std() / mean)


def extract_features(
    source: Signal, spec: Spectrogram, label: str, frame_ms: float = 10.0
) -> FeatureVector:
    """Populate the full feature schema for one separated source.

    A silent source is legal (e.g. an empty residual group): spectral
    fields fall back to 0 instead of raising ZeroEnergy.
    """
    if len(source) == 0:
        raise EmptySignalError("cannot extract features from an empty signal")
    env = envelope(source, frame_ms)
    period, strength = periodicity(env)
    peak_times = detect_peaks(env)
    intervals = tuple(float(b - a) for a, b in zip(peak_times, peak_times[1:]))
    profile = spec.values.mean(axis=1)
    if profile.sum() > 0:
        freqs = spec.config.bin_freqs_hz(spec.sample_rate_hz)
        dominant = float(freqs[int(np.argmax(profile))])
        centroid = spectral_centroid(spec)
    else:
        dominant = 0.0
        centroid = 0.0
    return FeatureVector(
        source_label=label,
        dominant_freq_hz=dominant,
        spectral_centroid_hz=centroid,
        envelope_period_s=period,
        periodicity_strength=strength,
        rr_intervals_s=intervals,
        rr_mean_s=float(np.mean(intervals)) if intervals else 0.0,
        rr_cv=rr_cv(intervals),
        burst_rate_per_s=len(peak_times) / source.duration_s,
        rms_level=float(np.sqrt(np.mean(source.samples**2))),
    )
