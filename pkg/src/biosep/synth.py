"""Synthetic heart/lung signal generators and mixing helpers.

These stand in for recorded data in every test. The heart model sums
decaying-sinusoid S1/S2 pulse pairs at beat times; rhythm irregularity
follows a disruption model: most intervals equal rr_mean_s exactly and
a random minority are redrawn with a wide spread, sized so the overall
coefficient of variation comes out near rr_jitter_cv. (Plain Gaussian
jitter at the same CV smears the envelope autocorrelation so much that
the rhythm stops being detectable, which defeats the point of the
fixture: rhythmic peaks disrupted by irregular intervals.)

The lung model gates band-limited noise with bursts at exponentially
distributed onsets and randomized lengths, so burst trains stay
aperiodic under envelope autocorrelation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Signal
from .errors import InvalidParamsError, SampleRateMismatchError

# Fraction of RR intervals redrawn from the wide distribution.
DISRUPT_PROB = 0.3


@dataclass(frozen=True)
class HeartParams:
    rr_mean_s: float = 0.8
    rr_jitter_cv: float = 0.0
    s1_freq_hz: float = 60.0
    s2_freq_hz: float = 120.0
    pulse_decay_s: float = 0.04
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.29 <= self.rr_mean_s <= 2.0:
            raise InvalidParamsError("rr_mean_s must lie in [0.29, 2.0]")
        if self.rr_jitter_cv < 0:
            raise InvalidParamsError("rr_jitter_cv must be >= 0")
        if self.s1_freq_hz <= 0 or self.s2_freq_hz <= 0:
            raise InvalidParamsError("pulse frequencies must be > 0")
        if self.pulse_decay_s <= 0:
            raise InvalidParamsError("pulse_decay_s must be > 0")


@dataclass(frozen=True)
class LungParams:
    center_freq_hz: float = 400.0
    bandwidth_hz: float = 100.0
    burst_rate_per_s: float = 1.2
    burst_duty: float = 0.4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.center_freq_hz <= 0 or self.bandwidth_hz <= 0:
            raise InvalidParamsError("band parameters must be > 0")
        if self.burst_rate_per_s < 0:
            raise InvalidParamsError("burst_rate_per_s must be >= 0")
        if not 0 < self.burst_duty <= 1:
            raise InvalidParamsError("burst_duty must be in (0, 1]")


def _normalize_peak(x: np.ndarray, peak: float = 0.9) -> np.ndarray:
    top = np.max(np.abs(x)) if x.size else 0.0
    return x * (peak / top) if top > 0 else x


def heart_beat_times(
    params: HeartParams, duration_s: float
) -> tuple[list[float], list[float]]:
    """Beat onset times and the RR interval following each beat."""
    rng = np.random.default_rng(params.seed)
    sigma = (
        params.rr_jitter_cv / np.sqrt(DISRUPT_PROB) * params.rr_mean_s
        if params.rr_jitter_cv > 0
        else 0.0
    )
    beats: list[float] = []
    intervals: list[float] = []
    t = 0.0
    while t < duration_s:
        beats.append(t)
        if sigma > 0 and rng.random() < DISRUPT_PROB:
            rr = 0.0
            while rr <= 0.05 * params.rr_mean_s:  # keep intervals positive
                rr = rng.normal(params.rr_mean_s, sigma)
        else:
            rr = params.rr_mean_s
        intervals.append(rr)
        t += rr
    return beats, intervals


def synth_heart(
    params: HeartParams, duration_s: float, sample_rate_hz: int
) -> Signal:
    """Decaying-sinusoid S1/S2 pulse train, peak-normalized to 0.9."""
    if duration_s < 0:
        raise InvalidParamsError("duration_s must be >= 0")
    if max(params.s1_freq_hz, params.s2_freq_hz) >= sample_rate_hz / 2:
        raise InvalidParamsError("pulse frequencies must be below Nyquist")
    n = int(round(duration_s * sample_rate_hz))
    x = np.zeros(n)
    if n == 0:
        return Signal(x, sample_rate_hz)
    pulse_len = max(1, int(round(5 * params.pulse_decay_s * sample_rate_hz)))
    tt = np.arange(pulse_len) / sample_rate_hz
    decay = np.exp(-tt / params.pulse_decay_s)
    s1 = decay * np.sin(2 * np.pi * params.s1_freq_hz * tt)
    s2 = 0.7 * decay * np.sin(2 * np.pi * params.s2_freq_hz * tt)
    beats, intervals = heart_beat_times(params, duration_s)
    for onset, rr in zip(beats, intervals):
        for pulse, offset in ((s1, 0.0), (s2, 0.3 * rr)):  # S2 in systole
            start = int(round((onset + offset) * sample_rate_hz))
            stop = min(n, start + pulse_len)
            if 0 <= start < stop:
                x[start:stop] += pulse[: stop - start]
    return Signal(_normalize_peak(x), sample_rate_hz)


def synth_lung(
    params: LungParams, duration_s: float, sample_rate_hz: int
) -> Signal:
    """Burst-gated band-limited noise, peak-normalized to 0.9.

    Band-limiting is a brick-wall mask in the frequency domain; with
    burst_rate_per_s = 0 the noise is left ungated.
    """
    if duration_s < 0:
        raise InvalidParamsError("duration_s must be >= 0")
    lo = params.center_freq_hz - params.bandwidth_hz / 2
    hi = params.center_freq_hz + params.bandwidth_hz / 2
    if lo <= 0 or hi >= sample_rate_hz / 2:
        raise InvalidParamsError(
            f"band [{lo}, {hi}] Hz does not fit under Nyquist"
        )
    n = int(round(duration_s * sample_rate_hz))
    if n == 0:
        return Signal(np.zeros(0), sample_rate_hz)
    rng = np.random.default_rng(params.seed)
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate_hz)
    spectrum[(freqs < lo) | (freqs > hi)] = 0.0
    band = np.fft.irfft(spectrum, n)
    if params.burst_rate_per_s > 0:
        gate = np.zeros(n)
        mean_gap = 1.0 / params.burst_rate_per_s
        mean_len = params.burst_duty / params.burst_rate_per_s
        t = rng.exponential(mean_gap)
        while t < duration_s:
            length = mean_len * rng.uniform(0.5, 1.5)
            start = int(t * sample_rate_hz)
            stop = min(n, int((t + length) * sample_rate_hz))
            if stop > start:
                # Raised-cosine onset/offset ramps: hard gate edges leak
                # energy far outside the noise band and drag the spectral
                # centroid away from center_freq_hz.
                seg = np.ones(stop - start)
                ramp = min(int(round(0.01 * sample_rate_hz)), seg.size // 2)
                if ramp > 0:
                    edge = 0.5 - 0.5 * np.cos(
                        np.pi * (np.arange(ramp) + 1) / (ramp + 1)
                    )
                    seg[:ramp] = edge
                    seg[-ramp:] = edge[::-1]
                gate[start:stop] = np.maximum(gate[start:stop], seg)
            t += rng.exponential(mean_gap)
        band = band * gate
    return Signal(_normalize_peak(band), sample_rate_hz)


def mix(signals: list[Signal], gains: list[float]) -> Signal:
    """Sample-wise weighted sum; shorter signals are zero-padded."""
    if len(signals) != len(gains) or not signals:
        raise InvalidParamsError("need one gain per signal")
    rate = signals[0].sample_rate_hz
    for s in signals[1:]:
        if s.sample_rate_hz != rate:
            raise SampleRateMismatchError(
                f"{s.sample_rate_hz} Hz vs {rate} Hz"
            )
    longest = max(len(s) for s in signals)
    out = np.zeros(longest)
    for s, g in zip(signals, gains):
        out[: len(s)] += g * s.samples
    return Signal(out, rate)


def gain_for_snr_db(target: Signal, interferer: Signal, snr_db: float) -> float:
    """Gain for the interferer so that rms(target)/rms(gain*interferer)
    hits the requested SNR."""
    target_rms = np.sqrt(np.mean(target.samples**2)) if len(target) else 0.0
    other_rms = np.sqrt(np.mean(interferer.samples**2)) if len(interferer) else 0.0
    if target_rms == 0 or other_rms == 0:
        raise InvalidParamsError("SNR is undefined for silent signals")
    return float(target_rms / (other_rms * 10.0 ** (snr_db / 20.0)))
