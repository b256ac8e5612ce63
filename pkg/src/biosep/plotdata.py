"""CSV and SVG emitters for waveform/spectrogram visualization.

Emits plain-text artifacts so figures can be rebuilt by any plotting
tool: a waveform CSV (time_s, amplitude), a spectrogram CSV
(time_s, freq_hz, magnitude_db, floored at -80 dB), and a small
self-contained SVG with the waveform over a spectrogram heatmap.
All output is deterministic for fixed input.
"""

from __future__ import annotations

import numpy as np

from .audio_io import Signal
from .timefreq import Spectrogram

DB_FLOOR = -80.0

# Heatmap downsampling caps, cells (frequency x time).
_MAX_FREQ_CELLS = 64
_MAX_TIME_CELLS = 192


def magnitude_db(values: np.ndarray) -> np.ndarray:
    """20*log10 magnitude with the -80 dB floor (zeros stay at floor)."""
    floored = np.maximum(values, 10.0 ** (DB_FLOOR / 20.0))
    return np.maximum(20.0 * np.log10(floored), DB_FLOOR)


def waveform_csv(signal: Signal) -> str:
    lines = ["time_s,amplitude"]
    rate = signal.sample_rate_hz
    lines += [
        f"{i / rate!r},{float(v)!r}" for i, v in enumerate(signal.samples)
    ]
    return "\n".join(lines) + "\n"


def spectrogram_csv(spec: Spectrogram) -> str:
    """Long-form rows, frame-major: time_s, freq_hz, magnitude_db."""
    db = magnitude_db(spec.values)
    freqs = spec.config.bin_freqs_hz(spec.sample_rate_hz)
    hop_s = spec.config.hop / spec.sample_rate_hz
    lines = ["time_s,freq_hz,magnitude_db"]
    for t in range(db.shape[1]):
        time_s = t * hop_s
        col = db[:, t]
        lines += [
            f"{time_s!r},{float(freqs[i])!r},{float(col[i])!r}"
            for i in range(db.shape[0])
        ]
    return "\n".join(lines) + "\n"


def _block_reduce_mean(a: np.ndarray, out_rows: int, out_cols: int) -> np.ndarray:
    """Mean-pool a 2D array onto a coarse grid (uneven edges averaged)."""
    rows = min(out_rows, a.shape[0])
    cols = min(out_cols, a.shape[1])
    row_edges = np.linspace(0, a.shape[0], rows + 1).astype(int)
    col_edges = np.linspace(0, a.shape[1], cols + 1).astype(int)
    out = np.empty((rows, cols))
    for i in range(rows):
        band = a[row_edges[i] : max(row_edges[i + 1], row_edges[i] + 1)]
        for j in range(cols):
            cell = band[:, col_edges[j] : max(col_edges[j + 1], col_edges[j] + 1)]
            out[i, j] = cell.mean()
    return out


def _panel_svg(
    title: str,
    signal: Signal,
    spec: Spectrogram,
    x0: float,
    y0: float,
    width: float,
    wave_h: float,
    heat_h: float,
) -> list[str]:
    parts = [
        f'<text x="{x0:.2f}" y="{y0 + 12:.2f}" font-size="12" '
        f'font-family="monospace">{title}</text>'
    ]
    top = y0 + 18

    # waveform polyline, peak-normalized into its strip
    x = signal.samples
    step = max(1, x.size // int(width))  # at most one point per pixel
    pts = x[::step]
    peak = float(np.max(np.abs(pts))) if pts.size else 0.0
    scale = (wave_h / 2 - 2) / peak if peak > 0 else 0.0
    mid = top + wave_h / 2
    coords = " ".join(
        f"{x0 + width * i / max(len(pts) - 1, 1):.2f},{mid - v * scale:.2f}"
        for i, v in enumerate(pts)
    )
    parts.append(
        f'<rect x="{x0:.2f}" y="{top:.2f}" width="{width:.2f}" '
        f'height="{wave_h:.2f}" fill="none" stroke="#888" stroke-width="0.5"/>'
    )
    parts.append(
        f'<polyline points="{coords}" fill="none" stroke="#205080" '
        'stroke-width="0.8"/>'
    )

    # spectrogram heatmap, low frequencies at the bottom
    heat_top = top + wave_h + 4
    db = magnitude_db(spec.values)
    grid = _block_reduce_mean(db, _MAX_FREQ_CELLS, _MAX_TIME_CELLS)
    lo, hi = DB_FLOOR, float(grid.max())
    span = hi - lo if hi > lo else 1.0
    rows, cols = grid.shape
    cell_w = width / cols
    cell_h = heat_h / rows
    for i in range(rows):
        y = heat_top + heat_h - (i + 1) * cell_h
        for j in range(cols):
            level = (grid[i, j] - lo) / span
            shade = int(round(255 * (1.0 - level)))
            parts.append(
                f'<rect x="{x0 + j * cell_w:.2f}" y="{y:.2f}" '
                f'width="{cell_w + 0.5:.2f}" height="{cell_h + 0.5:.2f}" '
                f'fill="rgb({shade},{shade},{shade})"/>'
            )
    parts.append(
        f'<rect x="{x0:.2f}" y="{heat_top:.2f}" width="{width:.2f}" '
        f'height="{heat_h:.2f}" fill="none" stroke="#888" stroke-width="0.5"/>'
    )
    return parts


def render_svg(panels: list[tuple[str, Signal, Spectrogram]]) -> str:
    """Stacked panels (first on top), each waveform over its heatmap."""
    margin, width, wave_h, heat_h = 10.0, 640.0, 70.0, 150.0
    panel_h = 18 + wave_h + 4 + heat_h + 12
    total_h = margin * 2 + panel_h * len(panels)
    total_w = margin * 2 + width
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0f}" '
        f'height="{total_h:.0f}" viewBox="0 0 {total_w:.0f} {total_h:.0f}">',
        f'<rect width="{total_w:.0f}" height="{total_h:.0f}" fill="white"/>',
    ]
    for i, (title, signal, spec) in enumerate(panels):
        parts += _panel_svg(
            title, signal, spec, margin, margin + i * panel_h,
            width, wave_h, heat_h,
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
