"""Synthetic heart/lung generators, mixing, and SNR gain computation."""

import numpy as np
import pytest

from biosep import (
    HeartParams,
    InvalidParamsError,
    LungParams,
    SampleRateMismatchError,
    Signal,
    detect_peaks,
    envelope,
    extract_features,
    gain_for_snr_db,
    heart_beat_times,
    magnitude,
    mix,
    spectral_centroid,
    stft,
    synth_heart,
    synth_lung,
)

FS = 8000


def test_heart_params_validation():
    with pytest.raises(InvalidParamsError):
        HeartParams(rr_mean_s=0.2)
    with pytest.raises(InvalidParamsError):
        HeartParams(rr_mean_s=2.5)
    with pytest.raises(InvalidParamsError):
        HeartParams(rr_jitter_cv=-0.1)
    with pytest.raises(InvalidParamsError):
        HeartParams(pulse_decay_s=0.0)


def test_heart_zero_duration_is_empty():
    sig = synth_heart(HeartParams(), 0.0, FS)
    assert len(sig) == 0
    assert sig.sample_rate_hz == FS


def test_heart_rejects_pulse_freq_at_nyquist():
    with pytest.raises(InvalidParamsError):
        synth_heart(HeartParams(s2_freq_hz=4000.0), 1.0, FS)


def test_heart_regular_beats_closed_loop():
    sig = synth_heart(HeartParams(), 4.0, FS)
    times = detect_peaks(envelope(sig))
    assert len(times) == 5
    np.testing.assert_allclose(times, [0.0, 0.8, 1.6, 2.4, 3.2], atol=0.02)


def test_heart_beat_times_regular():
    beats, intervals = heart_beat_times(HeartParams(), 4.0)
    np.testing.assert_allclose(beats, [0.0, 0.8, 1.6, 2.4, 3.2], atol=1e-12)
    assert all(rr == 0.8 for rr in intervals)


def test_heart_beat_times_jitter_keeps_intervals_positive():
    for seed in range(10):
        _, intervals = heart_beat_times(
            HeartParams(rr_jitter_cv=0.6, seed=seed), 60.0
        )
        assert min(intervals) > 0


def test_heart_jitter_drives_measured_rr_cv():
    sig = synth_heart(HeartParams(rr_jitter_cv=0.3, seed=0), 12.0, FS)
    fv = extract_features(sig, magnitude(stft(sig)), "heart")
    assert fv.rr_cv > 0.15
    assert fv.is_periodic


def test_heart_peak_normalization():
    sig = synth_heart(HeartParams(seed=3), 5.0, FS)
    assert np.max(np.abs(sig.samples)) == pytest.approx(0.9, rel=1e-12)


def test_heart_deterministic():
    a = synth_heart(HeartParams(rr_jitter_cv=0.2, seed=9), 3.0, FS)
    b = synth_heart(HeartParams(rr_jitter_cv=0.2, seed=9), 3.0, FS)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_lung_params_validation():
    with pytest.raises(InvalidParamsError):
        LungParams(center_freq_hz=0.0)
    with pytest.raises(InvalidParamsError):
        LungParams(burst_rate_per_s=-1.0)
    with pytest.raises(InvalidParamsError):
        LungParams(burst_duty=0.0)
    assert LungParams(burst_duty=1.0).burst_duty == 1.0


def test_lung_rejects_band_outside_nyquist():
    with pytest.raises(InvalidParamsError):
        synth_lung(LungParams(center_freq_hz=3900.0, bandwidth_hz=400.0), 1.0, FS)
    with pytest.raises(InvalidParamsError):
        synth_lung(LungParams(center_freq_hz=30.0, bandwidth_hz=80.0), 1.0, FS)


def test_lung_centroid_tracks_band():
    sig = synth_lung(LungParams(), 10.0, FS)
    centroid = spectral_centroid(magnitude(stft(sig)))
    assert abs(centroid - 400.0) <= 50.0


def test_lung_dominant_freq_in_band():
    sig = synth_lung(LungParams(seed=1), 10.0, FS)
    fv = extract_features(sig, magnitude(stft(sig)), "lung")
    bin_width = FS / 1024
    assert 350.0 - bin_width <= fv.dominant_freq_hz <= 450.0 + bin_width


def test_lung_gating_leaves_silent_gaps():
    gated = envelope(synth_lung(LungParams(seed=0), 10.0, FS))
    ungated = envelope(synth_lung(LungParams(burst_rate_per_s=0.0, seed=0), 10.0, FS))
    assert np.min(gated.samples) == 0.0  # between-burst frames are silent
    assert np.min(ungated.samples) > 0.0  # continuous noise never is


def test_lung_peak_normalization():
    sig = synth_lung(LungParams(seed=2), 5.0, FS)
    assert np.max(np.abs(sig.samples)) == pytest.approx(0.9, rel=1e-12)


def test_lung_deterministic():
    a = synth_lung(LungParams(seed=7), 4.0, FS)
    b = synth_lung(LungParams(seed=7), 4.0, FS)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_lung_zero_duration_is_empty():
    assert len(synth_lung(LungParams(), 0.0, FS)) == 0


def test_mix_identity_gain():
    a = synth_heart(HeartParams(), 2.0, FS)
    b = synth_lung(LungParams(), 2.0, FS)
    out = mix([a, b], [1.0, 0.0])
    np.testing.assert_array_equal(out.samples, a.samples)


def test_mix_is_exactly_linear():
    a = synth_heart(HeartParams(seed=1), 2.0, FS)
    b = synth_lung(LungParams(seed=1), 2.0, FS)
    out = mix([a, b], [0.3, 1.7])
    np.testing.assert_array_equal(out.samples, 0.3 * a.samples + 1.7 * b.samples)


def test_mix_averaging_identical_signals_is_identity():
    s = synth_lung(LungParams(seed=5), 2.0, FS)
    out = mix([s, s], [0.5, 0.5])
    np.testing.assert_array_equal(out.samples, s.samples)


def test_mix_zero_pads_shorter_signal():
    a = Signal(np.ones(100), FS)
    b = Signal(np.ones(60), FS)
    out = mix([a, b], [1.0, 1.0])
    assert len(out) == 100
    np.testing.assert_array_equal(out.samples[:60], 2.0)
    np.testing.assert_array_equal(out.samples[60:], 1.0)


def test_mix_rejects_rate_mismatch():
    with pytest.raises(SampleRateMismatchError):
        mix([Signal(np.ones(10), 8000), Signal(np.ones(10), 4000)], [1.0, 1.0])


def test_mix_rejects_bad_gain_count():
    with pytest.raises(InvalidParamsError):
        mix([Signal(np.ones(10), 8000)], [1.0, 2.0])
    with pytest.raises(InvalidParamsError):
        mix([], [])


def test_zero_db_gain_equalizes_energy():
    heart = synth_heart(HeartParams(), 6.0, FS)
    lung = synth_lung(LungParams(), 6.0, FS)
    g = gain_for_snr_db(heart, lung, 0.0)
    heart_energy = np.mean(heart.samples**2)
    lung_energy = np.mean((g * lung.samples) ** 2)
    assert heart_energy / lung_energy == pytest.approx(1.0, abs=0.01)


def test_snr_gain_follows_decades():
    heart = synth_heart(HeartParams(), 4.0, FS)
    lung = synth_lung(LungParams(), 4.0, FS)
    g0 = gain_for_snr_db(heart, lung, 0.0)
    g20 = gain_for_snr_db(heart, lung, 20.0)
    assert g0 / g20 == pytest.approx(10.0, rel=1e-9)


def test_snr_gain_rejects_silence():
    with pytest.raises(InvalidParamsError):
        gain_for_snr_db(Signal(np.zeros(100), FS), synth_lung(LungParams(), 1.0, FS), 0.0)
