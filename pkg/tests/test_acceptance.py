"""Acceptance gate: one printed PASS/FAIL line per criterion.

Each test computes its criterion (including any runtime bound), prints a
single summary line, then asserts. Fixtures are frozen: factorization
seeds, synthesis seeds, and tolerances are pinned so reruns are
bit-for-bit comparable.
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from biosep import (
    DEFAULT_TERMS,
    FeatureVector,
    HeartParams,
    LabelSet,
    LungParams,
    MockBackend,
    NmfConfig,
    Signal,
    StftConfig,
    extract_features,
    factorize,
    format_prompt,
    gain_for_snr_db,
    group_components,
    interpret,
    istft,
    kl_divergence,
    magnitude,
    mix,
    mu_step,
    rr_cv,
    separate,
    soft_mask,
    stft,
    synth_heart,
    synth_lung,
)

FS = 8000
DURATION_S = 12.0


def report(name: str, ok: bool) -> bool:
    print(f"{name}: {'PASS' if ok else 'FAIL'}")
    return ok


def make_mixture(seed: int, jitter_cv: float = 0.0):
    """Frozen 0 dB heart+lung mixture; lung stream offset by 100."""
    heart = synth_heart(
        HeartParams(rr_jitter_cv=jitter_cv, seed=seed), DURATION_S, FS
    )
    lung = synth_lung(LungParams(seed=seed + 100), DURATION_S, FS)
    gain = gain_for_snr_db(heart, lung, 0.0)
    lung = Signal(gain * lung.samples, FS)
    return heart, lung, mix([heart, lung], [1.0, 1.0])


def projection_sir_db(est, target, interference):
    """Reference-projection SIR of an estimate, in dB."""

    def proj_energy(x, ref):
        return float(np.dot(x, ref)) ** 2 / float(np.dot(ref, ref))

    return 10.0 * np.log10(
        proj_energy(est, target) / proj_energy(est, interference)
    )


def test_criterion_1_kl_monotone_updates():
    start = time.perf_counter()
    ok = True
    for seed in range(20):
        V = np.random.default_rng(seed).random((50, 100))
        model = factorize(
            V, NmfConfig(rank=4, max_iters=200, rel_tol=0.0, seed=seed)
        )
        steps = np.diff(model.divergence_trace)
        ok = ok and bool(np.all(steps <= 1e-9))
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 30.0
    assert report("criterion 1 (KL divergence non-increasing, 20 seeds)", ok)


def test_criterion_2_rank1_recovery():
    start = time.perf_counter()
    ok = True
    for seed in range(10):
        rng = np.random.default_rng(seed)
        V = np.outer(rng.random(10) + 0.1, rng.random(15) + 0.1)
        model = factorize(
            V, NmfConfig(rank=1, max_iters=500, rel_tol=0.0, seed=seed)
        )
        residual = kl_divergence(V, model.W, model.H) / V.sum()
        ok = ok and residual < 1e-6
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5.0
    assert report("criterion 2 (exact rank-1 recovery, 10 seeds)", ok)


def test_criterion_3_stft_round_trip():
    start = time.perf_counter()
    config = StftConfig(window_len=1024, hop=512, fft_len=1024)
    noise = Signal(np.random.default_rng(0).standard_normal(8000), FS)
    t = np.arange(8000) / 4000
    tone = Signal(0.5 * np.sin(2 * np.pi * 125.0 * t), 4000)
    ok = True
    for signal in (noise, tone):
        rebuilt = istft(stft(signal, config))
        # Sample 0 carries zero analysis weight (periodic Hann w[0] = 0),
        # so the fully-covered region starts at sample 1.
        x, y = signal.samples[1:], rebuilt.samples[1:]
        rel = np.linalg.norm(x - y) / np.linalg.norm(x)
        ok = ok and rel < 1e-6
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 1.0
    assert report("criterion 3 (STFT round-trip rel L2 < 1e-6)", ok)


def test_criterion_4_mask_partition_and_conservation():
    _, _, mixture = make_mixture(0)
    config = StftConfig()
    cs = stft(mixture, config)
    V = magnitude(cs)
    model = factorize(V.values, NmfConfig(rank=4, max_iters=50, rel_tol=0.0))
    groups = group_components(model, FS, config)
    outputs = soft_mask(cs, model, groups)

    wh = model.W @ model.H
    covered = wh > 1e-12
    mask_sum = np.zeros_like(wh)
    for group in groups:
        part = model.W[:, list(group.component_indices)] @ model.H[
            list(group.component_indices), :
        ]
        mask_sum += part / np.maximum(wh, 1e-12)
    ok = bool(np.all(np.abs(mask_sum[covered] - 1.0) <= 1e-9))

    mag_sum = sum(np.abs(out.bins) for out in outputs.values())
    mix_mag = np.abs(cs.bins)
    ok = ok and bool(
        np.all(np.abs(mag_sum[covered] - mix_mag[covered]) <= 1e-9)
    )
    assert report("criterion 4 (mask partition of unity + conservation)", ok)


def test_criterion_5_separation_sir_improvement():
    start = time.perf_counter()
    ok = True
    for seed in (0, 1, 2):
        heart, lung, mixture = make_mixture(seed)
        result = separate(
            mixture,
            StftConfig(),
            NmfConfig(rank=4, max_iters=200, rel_tol=0.0, seed=seed),
        )
        est = result.source("heart").signal.samples
        target, interference = heart.samples, lung.samples
        improvement = projection_sir_db(
            est, target, interference
        ) - projection_sir_db(mixture.samples, target, interference)
        ok = ok and improvement >= 5.0
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60.0
    assert report(
        "criterion 5 (heart SIR improvement >= 5 dB, 3 seeds)", ok
    )


def test_criterion_6_narrative_predictions():
    start = time.perf_counter()
    labels = LabelSet(DEFAULT_TERMS)
    backend = MockBackend(labels)

    def predict(source):
        fv = extract_features(source.signal, source.magnitude, source.label)
        return interpret(format_prompt(fv, labels), backend, labels)

    # (a) irregular-rhythm mixture -> heart flagged as atrial fibrillation
    _, _, mixture = make_mixture(0, jitter_cv=0.3)
    nmf_config = NmfConfig(rank=4, max_iters=200, rel_tol=0.0, seed=0)
    reports = [
        predict(separate(mixture, StftConfig(), nmf_config).source("heart"))
        for _ in range(2)
    ]
    ok = reports[0].prediction == "atrial fibrillation"
    ok = ok and reports[0].to_json() == reports[1].to_json()

    # (b) low-frequency burst-gated lung recording -> wheezing
    lung = synth_lung(LungParams(center_freq_hz=150.0, seed=3), DURATION_S, FS)
    result = separate(
        lung, StftConfig(), NmfConfig(rank=4, max_iters=200, rel_tol=0.0)
    )
    ok = ok and predict(result.source("lung")).prediction == "wheezing"

    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60.0
    assert report(
        "criterion 6 (mock diagnoses: atrial fibrillation + wheezing)", ok
    )


def test_criterion_7_prompt_stability_closed_world():
    labels = LabelSet(DEFAULT_TERMS)
    backend = MockBackend(labels)
    allowed = set(labels.terms) | {"unrecognized"}
    rng = np.random.default_rng(0)
    source_labels = ("heart", "lung", "residual")
    ok = True
    for i in range(1000):
        fv = FeatureVector(
            source_label=source_labels[i % 3],
            dominant_freq_hz=float(2000 * rng.random()),
            spectral_centroid_hz=float(2000 * rng.random()),
            envelope_period_s=float(3 * rng.random()),
            periodicity_strength=float(rng.random()),
            rr_intervals_s=(),
            rr_mean_s=float(2 * rng.random()),
            rr_cv=float(0.5 * rng.random()),
            burst_rate_per_s=float(3 * rng.random()),
            rms_level=float(0.2 * rng.random()),
        )
        prompt = format_prompt(fv, labels)
        ok = ok and prompt.text == format_prompt(fv, labels).text
        ok = ok and interpret(prompt, backend, labels).prediction in allowed
    assert report("criterion 7 (prompt byte-stable, closed-world)", ok)


def test_criterion_8_hand_computed_oracles():
    ok = kl_divergence(
        np.array([[2.0]]), np.array([[1.0]]), np.array([[1.0]])
    ) == pytest.approx(2.0 * np.log(2.0) - 1.0, abs=1e-12)
    W, H = mu_step(np.array([[4.0]]), np.array([[2.0]]), np.array([[1.0]]))
    ok = ok and W[0, 0] == pytest.approx(2.0) and H[0, 0] == pytest.approx(2.0)
    ok = ok and rr_cv([0.6, 1.0, 0.4]) == pytest.approx(0.374, abs=1e-3)
    assert report("criterion 8 (hand-computed spot checks)", ok)


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "biosep", *map(str, args)],
        capture_output=True,
        text=True,
    )


def snapshot(out_dir: Path) -> dict:
    """All output bytes; manifests as dicts minus the timestamp field."""
    state = {}
    for path in sorted(out_dir.iterdir()):
        if path.name.endswith(".manifest.json"):
            manifest = json.loads(path.read_text())
            del manifest["generated_at"]
            state[path.name] = manifest
        else:
            state[path.name] = path.read_bytes()
    return state


def test_criterion_9_cli_determinism(tmp_path):
    fix = tmp_path / "fix"
    proc = run_cli(
        "synth", "--out", fix, "--duration", 6, "--seed", 3,
        "--jitter-cv", 0.3,
    )
    assert proc.returncode == 0, proc.stderr
    mixture = fix / "mixture.wav"

    ok = True
    for command in (
        ("separate", mixture, "--max-iters", 50, "--rel-tol", 0,
         "--seed", 0, "--save-model"),
        ("analyze", mixture, "--backend", "mock", "--max-iters", 50,
         "--rel-tol", 0, "--seed", 0),
    ):
        snapshots = []
        out = tmp_path / f"out_{command[0]}"
        for _ in range(2):
            proc = run_cli(*command, "--out", out)
            ok = ok and proc.returncode == 0
            snapshots.append(snapshot(out))
        ok = ok and snapshots[0] == snapshots[1] and len(snapshots[0]) > 0
    assert report("criterion 9 (CLI byte-level determinism)", ok)
