"""Self-contained SVG learning-curve charts.

One polyline per series (mean) with a translucent polygon band (mean +- std),
axes with numeric ticks, and a legend labeled from the input file names.
No plotting stack; output bytes are a pure function of the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .harness import read_csv

WIDTH, HEIGHT = 840, 520
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    steps: list[float]
    means: list[float]
    stds: list[float]


def moving_average(values, window: int):
    """Trailing moving average over up to `window` points (window<=1: identity)."""
    if window <= 1:
        return list(values)
    out = []
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        chunk = values[lo:i + 1]
        out.append(sum(chunk) / len(chunk))
    return out


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        pad = 1.0 if lo == 0 else abs(lo) * 0.5
        lo, hi = lo - pad, hi + pad
    step = (hi - lo) / (n - 1)
    return lo, hi, [lo + i * step for i in range(n)]


def render_chart(series: list[Series], title: str = "",
                 xlabel: str = "step", ylabel: str = "return") -> str:
    if not series:
        raise ValueError("nothing to plot")
    xs = [x for s in series for x in s.steps]
    ys = [m + sd for s in series for m, sd in zip(s.means, s.stds)]
    ys += [m - sd for s in series for m, sd in zip(s.means, s.stds)]
    x_lo, x_hi, x_ticks = _ticks(min(xs), max(xs))
    y_lo, y_hi, y_ticks = _ticks(min(ys), max(ys))

    def px(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R)

    def py(y):
        return HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # axes
    x0, y0 = px(x_lo), py(y_lo)
    x1, y1 = px(x_hi), py(y_hi)
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" '
                 f'stroke="black"/>')
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}" '
                 f'stroke="black"/>')
    for t in x_ticks:
        parts.append(f'<line x1="{_fmt(px(t))}" y1="{_fmt(y0)}" x2="{_fmt(px(t))}" '
                     f'y2="{_fmt(y0 + 5)}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(px(t))}" y="{_fmt(y0 + 20)}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{_fmt(t)}</text>')
    for t in y_ticks:
        parts.append(f'<line x1="{_fmt(x0 - 5)}" y1="{_fmt(py(t))}" x2="{_fmt(x0)}" '
                     f'y2="{_fmt(py(t))}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(x0 - 8)}" y="{_fmt(py(t) + 4)}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{_fmt(t)}</text>')
    parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif">{xlabel}</text>')
    parts.append(f'<text x="18" y="{HEIGHT / 2}" text-anchor="middle" font-size="13" '
                 f'font-family="sans-serif" transform="rotate(-90 18 {HEIGHT / 2})">'
                 f'{ylabel}</text>')

    for idx, s in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        upper = [(px(x), py(m + sd)) for x, m, sd in zip(s.steps, s.means, s.stds)]
        lower = [(px(x), py(m - sd)) for x, m, sd in zip(s.steps, s.means, s.stds)]
        band = upper + lower[::-1]
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in band)
        parts.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15" '
                     f'stroke="none"/>')
        line = " ".join(f"{_fmt(px(x))},{_fmt(py(m))}" for x, m in zip(s.steps, s.means))
        parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" '
                     f'stroke-width="1.8"/>')
        for x, m in zip(s.steps, s.means):  # visible even for single-point series
            parts.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(m))}" r="2.2" '
                         f'fill="{color}"/>')
        ly = MARGIN_T + 16 * idx
        parts.append(f'<line x1="{WIDTH - 190}" y1="{ly}" x2="{WIDTH - 165}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="3"/>')
        parts.append(f'<text x="{WIDTH - 158}" y="{ly + 4}" font-size="12" '
                     f'font-family="sans-serif">{s.label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_csvs(csv_paths, out_path, window: int = 0, title: str = "") -> None:
    """Chart the return curves of one or more run/aggregate CSVs.

    All inputs must share the same (step, return_mean, return_std, ...)
    schema prefix; the smoothing window is off by default so the raw data
    stays the source of truth."""
    series = []
    ref_header = None
    for path in csv_paths:
        header, data = read_csv(path)
        if header[:3] != ["step", "return_mean", "return_std"]:
            raise ValueError(f"{path}: unexpected CSV schema {header[:3]}")
        if ref_header is None:
            ref_header = header
        elif header != ref_header:
            raise ValueError(f"{path}: schema differs from {csv_paths[0]}")
        if data.size == 0:
            raise ValueError(f"{path}: no data rows")
        means = moving_average(data[:, 1].tolist(), window)
        stds = moving_average(data[:, 2].tolist(), window)
        series.append(Series(Path(path).stem, data[:, 0].tolist(), means, stds))
    svg = render_chart(series, title=title)
    Path(out_path).write_bytes(svg.encode("utf-8"))
