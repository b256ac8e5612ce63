"""Command-line interface: synth, separate, analyze, plot-data.

Exit codes: 0 success, 1 runtime failure (error name on stderr),
2 usage/configuration error. All outputs are byte-reproducible for
fixed seeds except the manifest's generated_at timestamp.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

from .audio_io import Signal, read_wav, write_wav
from .errors import (
    BiosepError,
    InvalidConfigError,
    InvalidParamsError,
    error_code,
)
from .features import FeatureVector, extract_features
from .interpret import (
    DEFAULT_TERMS,
    LabelSet,
    MockBackend,
    RemoteBackend,
    format_prompt,
    interpret,
)
from .nmf import NmfConfig
from .plotdata import render_svg, spectrogram_csv, waveform_csv
from .separation import GROUP_LABELS, GroupingConfig, SeparatedSources, separate
from .synth import HeartParams, LungParams, gain_for_snr_db, mix, synth_heart, synth_lung
from .timefreq import StftConfig, magnitude, stft


@dataclass(frozen=True)
class RunConfig:
    """Effective settings; flags override the config file, which
    overrides these defaults. Unknown config-file keys are rejected."""

    window_len: int = 1024
    hop: int = 512
    fft_len: int = 1024
    rank: int = 4
    max_iters: int = 500
    rel_tol: float = 1e-5
    epsilon: float = 1e-12
    seed: int = 0
    heart_band_lo_hz: float = 0.5
    heart_band_hi_hz: float = 3.5
    min_heart_strength: float = 0.15
    max_heart_centroid_hz: float = 250.0
    labels: tuple[str, ...] = DEFAULT_TERMS
    backend: str = "mock"
    llm_url: str | None = None
    out_dir: str = "."
    max_inflight: int = 2


_CONFIG_FIELDS = tuple(f.name for f in fields(RunConfig))


def load_config_file(path: str) -> dict:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise InvalidConfigError("config file must hold a JSON object")
    unknown = sorted(set(doc) - set(_CONFIG_FIELDS))
    if unknown:
        raise InvalidConfigError(f"unknown config keys: {', '.join(unknown)}")
    return doc


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = asdict(RunConfig())
    config_path = getattr(args, "config", None)
    if config_path:
        merged.update(load_config_file(config_path))
    for name in _CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    if isinstance(merged["labels"], str):
        merged["labels"] = [t.strip() for t in merged["labels"].split(",") if t.strip()]
    merged["labels"] = tuple(merged["labels"])
    return RunConfig(**merged)


def _pipeline_configs(cfg: RunConfig) -> tuple[StftConfig, NmfConfig, GroupingConfig]:
    return (
        StftConfig(cfg.window_len, cfg.hop, cfg.fft_len),
        NmfConfig(cfg.rank, cfg.max_iters, cfg.rel_tol, cfg.epsilon, cfg.seed),
        GroupingConfig(
            (cfg.heart_band_lo_hz, cfg.heart_band_hi_hz),
            cfg.min_heart_strength,
            cfg.max_heart_centroid_hz,
        ),
    )


def _manifest(command: str, input_path: str, cfg: RunConfig, extra: dict) -> str:
    doc = {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "command": command,
        "input": input_path,
        "config": {**asdict(cfg), "labels": list(cfg.labels)},
    }
    doc.update(extra)
    return json.dumps(doc, indent=2)


def _separation_extra(result: SeparatedSources) -> dict:
    trace = result.model.divergence_trace
    return {
        "divergence": {
            "iterations": len(trace) - 1,
            "initial": trace[0],
            "final": trace[-1],
        },
        "groups": {g.label: list(g.component_indices) for g in result.groups},
    }


def _fail(exc: BaseException) -> int:
    message = str(exc)
    line = error_code(exc) + (f": {message}" if message else "")
    print(line, file=sys.stderr)
    return 1


# ---------------------------------------------------------------- synth


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        if args.duration < 0:
            raise InvalidParamsError("duration must be >= 0")
        heart_params = HeartParams(
            rr_mean_s=args.rr_mean,
            rr_jitter_cv=args.jitter_cv,
            s1_freq_hz=args.s1_freq,
            s2_freq_hz=args.s2_freq,
            pulse_decay_s=args.pulse_decay,
            seed=args.seed if args.seed is not None else 0,
        )
        lung_params = LungParams(
            center_freq_hz=args.lung_center,
            bandwidth_hz=args.lung_bandwidth,
            burst_rate_per_s=args.burst_rate,
            burst_duty=args.burst_duty,
            seed=(args.seed if args.seed is not None else 0) + 1,
        )
        heart = synth_heart(heart_params, args.duration, args.sample_rate)
        lung = synth_lung(lung_params, args.duration, args.sample_rate)
        gain = gain_for_snr_db(heart, lung, args.snr_db) if len(heart) else 1.0
        lung_scaled = Signal(gain * lung.samples, lung.sample_rate_hz)
        mixture = mix([heart, lung_scaled], [1.0, 1.0])
    except (BiosepError, ValueError) as exc:
        args._parser.error(str(exc))  # exits 2
        return 2
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_wav(out / "heart.wav", heart)
        write_wav(out / "lung.wav", lung_scaled)
        write_wav(out / "mixture.wav", mixture)
        sidecar = {
            "duration_s": args.duration,
            "sample_rate_hz": args.sample_rate,
            "snr_db": args.snr_db,
            "lung_gain": gain,
            "heart": asdict(heart_params),
            "lung": asdict(lung_params),
            "files": ["heart.wav", "lung.wav", "mixture.wav"],
        }
        (out / "params.json").write_text(json.dumps(sidecar, indent=2))
    except OSError as exc:
        return _fail(exc)
    return 0


# ------------------------------------------------------------- separate


def _run_separation(
    input_path: Path, cfg: RunConfig
) -> tuple[SeparatedSources, StftConfig]:
    stft_config, nmf_config, grouping = _pipeline_configs(cfg)
    signal = read_wav(input_path)
    return separate(signal, stft_config, nmf_config, grouping), stft_config


def cmd_separate(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args)
        _pipeline_configs(cfg)  # validate early: bad values are usage errors
    except (BiosepError, ValueError, OSError, json.JSONDecodeError) as exc:
        args._parser.error(str(exc))
        return 2
    try:
        input_path = Path(args.input)
        result, _ = _run_separation(input_path, cfg)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = input_path.stem
        for source in result.sources:
            write_wav(out / f"{stem}.{source.label}.wav", source.signal)
        if args.save_model:
            (out / f"{stem}.model.json").write_text(result.model.to_json())
        manifest = _manifest(
            "separate", str(input_path), cfg, _separation_extra(result)
        )
        (out / f"{stem}.manifest.json").write_text(manifest)
    except Exception as exc:  # pipeline failure -> exit 1 with error name
        return _fail(exc)
    return 0


# -------------------------------------------------------------- analyze


_SOURCE_SUFFIXES = {f".{label}": label for label in GROUP_LABELS}


def _analyze_sources(
    args: argparse.Namespace, cfg: RunConfig
) -> tuple[str, list, dict, Path]:
    """Returns (stem, [(label, Signal, Spectrogram)], manifest_extra, input)."""
    paths = [Path(p) for p in args.inputs]
    stft_config, _, _ = _pipeline_configs(cfg)
    suffixed = {p: _SOURCE_SUFFIXES.get(Path(p.stem).suffix) for p in paths}
    if len(paths) == 1 and suffixed[paths[0]] is None:
        result, _ = _run_separation(paths[0], cfg)
        sources = [(s.label, s.signal, s.magnitude) for s in result.sources]
        return paths[0].stem, sources, _separation_extra(result), paths[0]
    if all(suffixed.values()):
        sources = []
        for p in paths:
            signal = read_wav(p)
            spec = magnitude(stft(signal, stft_config))
            sources.append((suffixed[p], signal, spec))
        return Path(paths[0].stem).stem, sources, {}, paths[0]
    raise InvalidParamsError(
        "pass one mixture WAV, or only .heart/.lung/.residual WAVs"
    )


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args)
        _pipeline_configs(cfg)
        label_set = LabelSet(cfg.labels)
        if cfg.backend == "remote":
            if not cfg.llm_url:
                raise InvalidConfigError("--backend remote requires --llm-url")
            backend = RemoteBackend(cfg.llm_url)
        else:
            backend = MockBackend(label_set)
    except (BiosepError, ValueError, OSError, json.JSONDecodeError) as exc:
        args._parser.error(str(exc))
        return 2
    try:
        stem, sources, extra, input_path = _analyze_sources(args, cfg)
        feature_vectors = [
            extract_features(signal, spec, label)
            for label, signal, spec in sources
        ]
        prompts = [format_prompt(fv, label_set) for fv in feature_vectors]
        if cfg.backend == "remote" and len(prompts) > 1:
            with ThreadPoolExecutor(max_workers=cfg.max_inflight) as pool:
                reports = list(
                    pool.map(lambda p: interpret(p, backend, label_set), prompts)
                )
        else:
            reports = [interpret(p, backend, label_set) for p in prompts]

        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if len(args.inputs) == 1 and extra:  # separation ran; keep the WAVs
            for label, signal, _spec in sources:
                write_wav(out / f"{stem}.{label}.wav", signal)
        csv_lines = [FeatureVector.csv_header()]
        csv_lines += [fv.to_csv_row() for fv in feature_vectors]
        (out / f"{stem}.features.csv").write_text("\n".join(csv_lines) + "\n")
        for fv, report in zip(feature_vectors, reports):
            base = f"{stem}.{fv.source_label}"
            (out / f"{base}.features.json").write_text(fv.to_json())
            (out / f"{base}.report.json").write_text(report.to_json())
        extra["predictions"] = {
            r.source_label: r.prediction for r in reports
        }
        extra["backend"] = cfg.backend
        manifest = _manifest("analyze", str(input_path), cfg, extra)
        (out / f"{stem}.manifest.json").write_text(manifest)
        for report in reports:
            print(f"{report.source_label}: {report.prediction}")
    except Exception as exc:
        return _fail(exc)
    return 0


# ------------------------------------------------------------ plot-data


_PLOT_ORDER = {"mixture": 0, "heart": 1, "lung": 2, "residual": 3}


def _plot_sort_key(path: Path) -> tuple[int, str]:
    stem = path.stem
    for token, rank in _PLOT_ORDER.items():
        if stem == token or stem.endswith(f".{token}"):
            return rank, stem
    return len(_PLOT_ORDER), stem


def cmd_plotdata(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args)
        stft_config, _, _ = _pipeline_configs(cfg)
    except (BiosepError, ValueError, OSError, json.JSONDecodeError) as exc:
        args._parser.error(str(exc))
        return 2
    try:
        input_path = Path(args.input)
        if input_path.is_dir():
            wavs = sorted(input_path.glob("*.wav"), key=_plot_sort_key)
            if not wavs:
                raise FileNotFoundError(f"no WAV files in {input_path}")
        else:
            if not input_path.exists():
                raise FileNotFoundError(str(input_path))
            wavs = [input_path]
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        panels = []
        for wav in wavs:
            signal = read_wav(wav)
            spec = magnitude(stft(signal, stft_config))
            stem = wav.stem
            (out / f"{stem}.waveform.csv").write_text(waveform_csv(signal))
            (out / f"{stem}.spectrogram.csv").write_text(spectrogram_csv(spec))
            (out / f"{stem}.svg").write_text(render_svg([(stem, signal, spec)]))
            panels.append((stem, signal, spec))
        if input_path.is_dir():
            (out / "figure.svg").write_text(render_svg(panels))
    except Exception as exc:
        return _fail(exc)
    return 0


# ----------------------------------------------------------------- main


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file (flags take precedence)")
    sub.add_argument("--out", dest="out_dir", help="output directory")
    sub.add_argument("--window-len", dest="window_len", type=int)
    sub.add_argument("--hop", dest="hop", type=int)
    sub.add_argument("--fft-len", dest="fft_len", type=int)
    sub.add_argument("--rank", dest="rank", type=int)
    sub.add_argument("--max-iters", dest="max_iters", type=int)
    sub.add_argument("--rel-tol", dest="rel_tol", type=float)
    sub.add_argument("--epsilon", dest="epsilon", type=float)
    sub.add_argument("--seed", dest="seed", type=int)
    sub.add_argument("--heart-band-lo", dest="heart_band_lo_hz", type=float)
    sub.add_argument("--heart-band-hi", dest="heart_band_hi_hz", type=float)
    sub.add_argument("--min-heart-strength", dest="min_heart_strength", type=float)
    sub.add_argument("--max-heart-centroid", dest="max_heart_centroid_hz", type=float)
    sub.add_argument("--labels", dest="labels", help="comma-separated term list")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biosep",
        description="Separate mixed heart/lung recordings and interpret them.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    synth = subs.add_parser("synth", help="generate synthetic fixtures")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--duration", type=float, default=10.0)
    synth.add_argument("--sample-rate", type=int, default=8000)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--rr-mean", type=float, default=0.8)
    synth.add_argument("--jitter-cv", type=float, default=0.0)
    synth.add_argument("--s1-freq", type=float, default=60.0)
    synth.add_argument("--s2-freq", type=float, default=120.0)
    synth.add_argument("--pulse-decay", type=float, default=0.04)
    synth.add_argument("--lung-center", type=float, default=400.0)
    synth.add_argument("--lung-bandwidth", type=float, default=100.0)
    synth.add_argument("--burst-rate", type=float, default=1.2)
    synth.add_argument("--burst-duty", type=float, default=0.4)
    synth.add_argument("--snr-db", type=float, default=0.0)
    synth.set_defaults(func=cmd_synth, _parser=synth)

    sep = subs.add_parser("separate", help="decompose a mixture into sources")
    sep.add_argument("input", help="mixture WAV file")
    sep.add_argument("--save-model", action="store_true")
    _add_config_flags(sep)
    sep.set_defaults(func=cmd_separate, _parser=sep)

    ana = subs.add_parser("analyze", help="separate, extract features, interpret")
    ana.add_argument("inputs", nargs="+", help="mixture WAV, or separated WAVs")
    ana.add_argument("--backend", choices=("mock", "remote"))
    ana.add_argument("--llm-url", dest="llm_url")
    ana.add_argument("--max-inflight", dest="max_inflight", type=int)
    _add_config_flags(ana)
    ana.set_defaults(func=cmd_analyze, _parser=ana)

    plot = subs.add_parser("plot-data", help="emit waveform/spectrogram CSV+SVG")
    plot.add_argument("input", help="WAV file or directory of WAVs")
    _add_config_flags(plot)
    plot.set_defaults(func=cmd_plotdata, _parser=plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
