"""Dependency-free SVG rendering of profile and speed-up curves.

Output is a pure function of the input: fixed palette, fixed number
formatting, no timestamps or ids.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .profiles import ProfileCurve, SpeedupCurve

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
IDEAL_COLOR = "#555555"

WIDTH, HEIGHT = 480, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 36, 48


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass
class _Series:
    label: str
    points: list[tuple[float, float]]
    color: str
    dashed: bool = False


@dataclass
class _Axes:
    x0: float
    x1: float
    y0: float
    y1: float
    log_x: bool

    def tx(self, x: float) -> float:
        if self.log_x:
            x, lo, hi = math.log2(x), math.log2(self.x0), math.log2(self.x1)
        else:
            lo, hi = self.x0, self.x1
        span = hi - lo or 1.0
        return MARGIN_L + (x - lo) / span * (WIDTH - MARGIN_L - MARGIN_R)

    def ty(self, y: float) -> float:
        span = self.y1 - self.y0 or 1.0
        return HEIGHT - MARGIN_B - (y - self.y0) / span * (HEIGHT - MARGIN_T - MARGIN_B)


def _step_points(curve: ProfileCurve, x_start: float, x_end: float) -> list[tuple[float, float]]:
    pts = [(x_start, 0.0)]
    level = 0.0
    for x, frac in curve.points:
        pts.append((x, level))
        pts.append((x, frac))
        level = frac
    pts.append((x_end, level))
    return pts


def _ticks(lo: float, hi: float, log_x: bool) -> list[float]:
    if log_x:
        a, b = math.floor(math.log2(lo)), math.ceil(math.log2(hi))
        step = max(1, math.ceil((b - a) / 8))
        return [2.0 ** k for k in range(a, b + 1, step) if lo <= 2.0 ** k <= hi]
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    out = []
    k = 0
    while first + k * step <= hi + step * 1e-9:
        out.append(first + k * step)
        k += 1
    return out


def _tick_label(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:.3g}"


def _chart(
    series: Sequence[_Series],
    axes: _Axes,
    title: str,
    xlabel: str,
    ylabel: str,
    offset_x: float = 0.0,
) -> list[str]:
    out = [f'<g transform="translate({_f(offset_x)},0)">']
    left, right = MARGIN_L, WIDTH - MARGIN_R
    top, bottom = MARGIN_T, HEIGHT - MARGIN_B
    out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" fill="none" stroke="#000"/>')
    for v in _ticks(axes.x0, axes.x1, axes.log_x):
        x = _f(axes.tx(v))
        out.append(f'<line x1="{x}" y1="{bottom}" x2="{x}" y2="{bottom + 4}" stroke="#000"/>')
        out.append(f'<text x="{x}" y="{bottom + 16}" font-size="10" text-anchor="middle">{_tick_label(v)}</text>')
    for v in _ticks(axes.y0, axes.y1, False):
        y = _f(axes.ty(v))
        out.append(f'<line x1="{left - 4}" y1="{y}" x2="{left}" y2="{y}" stroke="#000"/>')
        out.append(f'<text x="{left - 6}" y="{y}" font-size="10" text-anchor="end" dominant-baseline="middle">{_tick_label(v)}</text>')
    out.append(f'<text x="{(left + right) // 2}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{(top + bottom) // 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {(top + bottom) // 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{(left + right) // 2}" y="20" font-size="13" text-anchor="middle">{escape(title)}</text>')

    for s in series:
        coords = " ".join(f"{_f(axes.tx(x))},{_f(axes.ty(y))}" for x, y in s.points)
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline fill="none" stroke="{s.color}" stroke-width="1.5"{dash} points="{coords}"/>')

    for i, s in enumerate(series):
        y = top + 14 + 14 * i
        out.append(f'<line x1="{right - 110}" y1="{y}" x2="{right - 90}" y2="{y}" stroke="{s.color}" stroke-width="2"/>')
        out.append(f'<text x="{right - 86}" y="{y}" font-size="10" dominant-baseline="middle">{escape(s.label)}</text>')
    out.append("</g>")
    return out


def _document(body: list[str], width: int) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{HEIGHT}" '
        f'viewBox="0 0 {width} {HEIGHT}">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{HEIGHT}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def _profile_layout(
    curves: Sequence[ProfileCurve], log_x: bool, x_min: float | None = None
) -> tuple[_Axes, list[_Series]]:
    xs = [x for c in curves for x, _ in c.points]
    if log_x:
        xs = [x for x in xs if x > 0]
    lo = min(xs) if xs else 1.0
    hi = max(xs) if xs else 1.0
    if x_min is not None:
        lo = min(lo, x_min)
    if log_x:
        hi = max(hi, lo * 2)
    else:
        lo = min(lo, 0.0)
        if hi <= lo:
            hi = lo + 1.0
    hi_plot = hi * 1.1 if log_x else hi + 0.05 * (hi - lo)
    axes = _Axes(lo, hi_plot, 0.0, 1.0, log_x)
    series = [
        _Series(c.label, _step_points(c, lo, hi_plot), PALETTE[i % len(PALETTE)])
        for i, c in enumerate(curves)
    ]
    return axes, series


def render_svg(
    curves: Sequence[ProfileCurve],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "fraction of instances",
    log_x: bool = False,
) -> str:
    """Render step-function curves on one chart, one polyline per curve."""
    if not curves:
        raise ValueError("nothing to render")
    axes, series = _profile_layout(curves, log_x, 1.0 if log_x else None)
    return _document(_chart(series, axes, title, xlabel, ylabel), WIDTH)


def render_combined_svg(
    time_curves: Sequence[ProfileCurve],
    gap_curves: Sequence[ProfileCurve],
    title: str = "",
    time_label: str = "time (s)",
) -> str:
    """Two panels side by side: solved runs over time, unsolved runs over final gap."""
    if not time_curves and not gap_curves:
        raise ValueError("nothing to render")
    t_axes, t_series = _profile_layout(time_curves, False)
    g_axes, g_series = _profile_layout(gap_curves, False)
    g_axes.x1 = max(g_axes.x1, 1.0)
    g_series = [
        _Series(s.label, _step_points(c, 0.0, g_axes.x1), s.color)
        for s, c in zip(g_series, gap_curves)
    ]
    body = _chart(t_series, t_axes, title, time_label, "fraction of instances")
    body += _chart(g_series, g_axes, "", "final gap (unsolved)", "fraction of instances", offset_x=WIDTH)
    return _document(body, 2 * WIDTH)


def render_speedup_svg(curves: Sequence[SpeedupCurve], title: str = "", ylabel: str = "speed-up") -> str:
    """Speed-up against core count with the ideal linear line dashed."""
    if not curves or not any(c.points for c in curves):
        raise ValueError("nothing to render")
    ns = sorted({n for c in curves for n, _ in c.points} | {c.baseline_cores for c in curves})
    base = min(c.baseline_cores for c in curves)
    ys = [y for c in curves for _, y in c.points] + [n / base for n in ns] + [1.0]
    axes = _Axes(min(ns), max(ns), 0.0, max(ys) * 1.05, False)
    series = [
        _Series(c.label, [(c.baseline_cores, 1.0), *c.points], PALETTE[i % len(PALETTE)])
        for i, c in enumerate(curves)
    ]
    series.append(_Series("ideal", [(n, n / base) for n in ns], IDEAL_COLOR, dashed=True))
    return _document(_chart(series, axes, title, "cores", ylabel), WIDTH)
