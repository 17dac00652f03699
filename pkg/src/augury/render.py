"""Static snapshots of analysis results as SVG documents and CSV tables.

Both renderers are pure functions of their input: the same snapshot gives
byte-identical output. Long series are thinned to a min/max envelope per
pixel column before drawing so documents stay small.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .aggregation import AppRanking, MemoryProjection, RuntimeDistribution
from .errors import EmptyInputError, InvalidParameterError
from .forecasting import FORECAST_CSV_HEADER, ForecastComparison
from .ingestion import format_timestamp
from .seasonal import Decomposition, SeasonalProfile
from .series import RegularSeries, from_epoch
from .signal_model import PatternAnalysis, ParamsSummary

KINDS = (
    "trend",
    "seasonal_boxplot",
    "zoom_boxplot",
    "runtime_scatter",
    "cumulative_memory",
    "forecast_overlay",
    "decomposition_panels",
    "pattern_overlay",
)

PROFILE_CSV_HEADER = ("bin", "median", "q1", "q3", "whisker_low", "whisker_high", "n_outliers", "n_entries")
RUNTIME_CSV_HEADER = ("timestamp", "duration_us")
CUMULATIVE_CSV_HEADER = ("day", "timestamp", "cumulative_mb")
DECOMPOSITION_CSV_HEADER = ("timestamp", "observed", "seasonal", "trend", "residual")
PATTERN_CSV_HEADER = ("start_time", "end_time", "beta", "max_memory", "run_time_s")
RANKING_CSV_HEADER = ("app_id", "count", "share")
PARAMS_CSV_HEADER = ("parameter", "mean", "std", "median")

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
MIN_SIZE = 100


@dataclass(frozen=True)
class Snapshot:
    """A renderable view: ``kind`` selects how ``payload`` is drawn.

    ``pattern_overlay`` takes a ``(series, PatternAnalysis)`` pair; the
    other kinds take the module output of the same name (``trend`` a
    mapping of label to RegularSeries).
    """

    kind: str
    title: str
    payload: object

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown snapshot kind {self.kind!r}")
        expected = {
            "seasonal_boxplot": SeasonalProfile,
            "zoom_boxplot": SeasonalProfile,
            "runtime_scatter": RuntimeDistribution,
            "cumulative_memory": MemoryProjection,
            "forecast_overlay": ForecastComparison,
            "decomposition_panels": Decomposition,
        }.get(self.kind)
        if expected is not None and not isinstance(self.payload, expected):
            raise InvalidParameterError(f"{self.kind} snapshots need a {expected.__name__} payload")
        if self.kind == "trend" and not isinstance(self.payload, Mapping):
            raise InvalidParameterError("trend snapshots need a mapping of label to series")
        if self.kind == "pattern_overlay":
            ok = isinstance(self.payload, tuple) and len(self.payload) == 2
            if not ok or not isinstance(self.payload[1], PatternAnalysis):
                raise InvalidParameterError("pattern_overlay needs a (series, PatternAnalysis) pair")


def _check_nonempty(snapshot: Snapshot) -> None:
    p = snapshot.payload
    empty = {
        "trend": lambda: len(p) == 0,
        "seasonal_boxplot": lambda: len(p.bins) == 0,
        "zoom_boxplot": lambda: len(p.bins) == 0,
        "runtime_scatter": lambda: len(p.points) == 0,
        "cumulative_memory": lambda: len(p.days) == 0,
        "forecast_overlay": lambda: len(p.actual) == 0,
        "decomposition_panels": lambda: False,
        "pattern_overlay": lambda: False,
    }[snapshot.kind]
    if empty():
        raise EmptyInputError(f"nothing to render in the {snapshot.kind} snapshot")


# ------------------------------------------------------------------------ CSV


def fmt_number(x) -> str:
    """Shortest round-trip text for a number; empty for missing."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _csv(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def align_series(series: Mapping[str, RegularSeries]):
    """Put several series on one grid spanning all of them.

    Returns ``(epochs, {label: values})`` with NaN where a series has no
    value. All series must share the lag and a common phase.
    """
    items = list(series.items())
    if not items:
        raise EmptyInputError("no series to align")
    lag = items[0][1].lag
    if any(s.lag != lag for _, s in items):
        raise InvalidParameterError("series must share the lag")
    start = min(s.start_epoch for _, s in items)
    stop = max(s.start_epoch + lag * (len(s) - 1) for _, s in items)
    n = int(round((stop - start) / lag)) + 1
    epochs = start + lag * np.arange(n)
    out = {}
    for label, s in items:
        off = (s.start_epoch - start) / lag
        if abs(off - round(off)) > 1e-6:
            raise InvalidParameterError("series grids are out of phase")
        off = int(round(off))
        vals = np.full(n, np.nan)
        vals[off : off + len(s)] = s.values
        out[label] = vals
    return epochs, out


def _ts(epoch: float) -> str:
    return format_timestamp(from_epoch(epoch))


def render_csv(snapshot: Snapshot) -> bytes:
    """The CSV table behind a snapshot; header always first, rows in time/bin order."""
    _check_nonempty(snapshot)
    p = snapshot.payload
    kind = snapshot.kind
    if kind == "trend":
        epochs, cols = align_series(p)
        labels = list(cols)
        rows = ([_ts(e)] + [fmt_number(cols[k][i]) for k in labels] for i, e in enumerate(epochs))
        return _csv(["slot_start", *labels], rows)
    if kind in ("seasonal_boxplot", "zoom_boxplot"):
        return profile_csv(p)
    if kind == "runtime_scatter":
        return _csv(RUNTIME_CSV_HEADER, ((format_timestamp(t), fmt_number(d)) for t, d in p.points))
    if kind == "cumulative_memory":
        rows = (
            (day.isoformat(), format_timestamp(t), fmt_number(mb))
            for day, curve in sorted(p.days.items())
            for t, mb in curve
        )
        return _csv(CUMULATIVE_CSV_HEADER, rows)
    if kind == "forecast_overlay":
        return _csv(
            FORECAST_CSV_HEADER,
            ((format_timestamp(t), fmt_number(a), fmt_number(f), fmt_number(nv)) for t, a, f, nv in p.rows()),
        )
    if kind == "decomposition_panels":
        comps = (p.observed, p.seasonal, p.trend, p.residual)
        epochs = p.observed.epochs()
        rows = ([_ts(e)] + [fmt_number(c.values[i]) for c in comps] for i, e in enumerate(epochs))
        return _csv(DECOMPOSITION_CSV_HEADER, rows)
    series, analysis = p
    return patterns_csv(analysis)


def profile_csv(profile: SeasonalProfile) -> bytes:
    rows = (
        (
            b.bin_index,
            fmt_number(b.median),
            fmt_number(b.q1),
            fmt_number(b.q3),
            fmt_number(b.whisker_low),
            fmt_number(b.whisker_high),
            len(b.outliers),
            b.n_entries,
        )
        for b in profile.bins
    )
    return _csv(PROFILE_CSV_HEADER, rows)


def patterns_csv(analysis: PatternAnalysis) -> bytes:
    rows = (
        (
            format_timestamp(pat.start_time),
            format_timestamp(pat.end_time),
            fmt_number(par.beta),
            fmt_number(par.max_memory),
            fmt_number(par.run_time),
        )
        for pat, par in zip(analysis.patterns, analysis.params)
    )
    return _csv(PATTERN_CSV_HEADER, rows)


def params_summary_csv(summary: ParamsSummary) -> bytes:
    rows = ((name, fmt_number(m), fmt_number(s), fmt_number(md)) for name, m, s, md in summary.rows())
    return _csv(PARAMS_CSV_HEADER, rows)


def ranking_csv(ranking: AppRanking) -> bytes:
    return _csv(RANKING_CSV_HEADER, ((a.app_id, a.request_count, fmt_number(a.share)) for a in ranking))


# ------------------------------------------------------------------------ SVG


def _n(x: float) -> str:
    # fixed precision keeps documents small and byte-stable
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _finite_range(arrays, pad=0.05):
    vals = np.concatenate([np.asarray(a, dtype=np.float64).ravel() for a in arrays] or [np.array([])])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if hi == lo:
        return lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    mag = abs(v)
    if mag >= 1e5 or mag < 1e-3:
        return f"{v:.2e}"
    return f"{v:.4g}"


class _Frame:
    """Plot area with data-to-screen transforms (screen y grows downwards)."""

    def __init__(self, left, top, width, height, xr, yr):
        self.left, self.top, self.width, self.height = left, top, width, height
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1.0, self.x1 + 1.0

    def x(self, v):
        return self.left + (v - self.x0) / (self.x1 - self.x0) * self.width

    def y(self, v):
        return self.top + (self.y1 - v) / (self.y1 - self.y0) * self.height

    def axes(self, out, xlabel="", ylabel="", xticks=None):
        l, t, w, h = self.left, self.top, self.width, self.height
        out.append(
            f'<rect class="frame" x="{_n(l)}" y="{_n(t)}" width="{_n(w)}" height="{_n(h)}" '
            'fill="none" stroke="#444" stroke-width="1"/>'
        )
        for k in range(5):
            v = self.y0 + (self.y1 - self.y0) * k / 4
            yy = self.y(v)
            out.append(f'<line x1="{_n(l - 4)}" y1="{_n(yy)}" x2="{_n(l)}" y2="{_n(yy)}" stroke="#444"/>')
            out.append(
                f'<text x="{_n(l - 6)}" y="{_n(yy + 3)}" font-size="9" text-anchor="end">{escape(_fmt_tick(v))}</text>'
            )
        for pos, label in xticks or ():
            xx = self.x(pos)
            out.append(f'<line x1="{_n(xx)}" y1="{_n(t + h)}" x2="{_n(xx)}" y2="{_n(t + h + 4)}" stroke="#444"/>')
            out.append(
                f'<text x="{_n(xx)}" y="{_n(t + h + 14)}" font-size="9" text-anchor="middle">{escape(label)}</text>'
            )
        if xlabel:
            out.append(
                f'<text x="{_n(l + w / 2)}" y="{_n(t + h + 28)}" font-size="10" text-anchor="middle">{escape(xlabel)}</text>'
            )
        if ylabel:
            cx, cy = l - 44, t + h / 2
            out.append(
                f'<text x="{_n(cx)}" y="{_n(cy)}" font-size="10" text-anchor="middle" '
                f'transform="rotate(-90 {_n(cx)} {_n(cy)})">{escape(ylabel)}</text>'
            )


def _thin(x: np.ndarray, y: np.ndarray, columns: int):
    """Keep first/min/max/last per bucket when there are many more points than pixels."""
    if x.size <= 2 * columns:
        return x, y
    edges = np.linspace(0, x.size, columns + 1).astype(np.int64)
    keep = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        seg = y[a:b]
        idx = {a, b - 1}
        if np.isfinite(seg).any():
            idx.add(a + int(np.nanargmin(seg)))
            idx.add(a + int(np.nanargmax(seg)))
        keep.extend(sorted(idx))
    keep = np.array(keep)
    return x[keep], y[keep]


def _polylines(out, frame, x, y, color, css_class="series", columns=None):
    """One polyline per run of finite values."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x, y = _thin(x, y, int(columns or frame.width))
    ok = np.isfinite(y)
    if not ok.any():
        return
    breaks = np.flatnonzero(np.diff(ok.astype(np.int8)))
    bounds = np.r_[0, breaks + 1, y.size]
    for a, b in zip(bounds[:-1], bounds[1:]):
        if not ok[a]:
            continue
        pts = " ".join(f"{_n(frame.x(xi))},{_n(frame.y(yi))}" for xi, yi in zip(x[a:b], y[a:b]))
        out.append(
            f'<polyline class="{css_class}" points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>'
        )


def _star(cx, cy, r=4.0):
    pts = []
    for k in range(10):
        ang = -math.pi / 2 + k * math.pi / 5
        rr = r if k % 2 == 0 else r * 0.45
        pts.append(f"{_n(cx + rr * math.cos(ang))},{_n(cy + rr * math.sin(ang))}")
    return " ".join(pts)


def _legend(out, labels, x, y):
    for k, label in enumerate(labels):
        color = PALETTE[k % len(PALETTE)]
        yy = y + 12 * k
        out.append(f'<line x1="{_n(x)}" y1="{_n(yy)}" x2="{_n(x + 14)}" y2="{_n(yy)}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_n(x + 18)}" y="{_n(yy + 3)}" font-size="9">{escape(str(label))}</text>')


def _time_ticks(e0: float, e1: float, n: int = 4):
    if e1 <= e0:
        return [(e0, _ts(e0)[:16].replace("T", " "))]
    return [(e0 + (e1 - e0) * k / n, _ts(e0 + (e1 - e0) * k / n)[:16].replace("T", " ")) for k in range(n + 1)]


def _draw_trend(out, frame_box, series: Mapping[str, RegularSeries]):
    epochs, cols = align_series(series)
    f = _Frame(*frame_box, (epochs[0], epochs[-1]), _finite_range(cols.values()))
    f.axes(out, "time (UTC)", "value", _time_ticks(epochs[0], epochs[-1]))
    for k, (label, vals) in enumerate(cols.items()):
        _polylines(out, f, epochs, vals, PALETTE[k % len(PALETTE)])
    _legend(out, list(cols), frame_box[0] + 8, frame_box[1] + 10)


def _draw_boxplot(out, frame_box, profile: SeasonalProfile, xlabel):
    bins = profile.bins
    arrays = [[b.whisker_low, b.whisker_high, b.q1, b.q3] + [v for _, v in b.outliers] for b in bins]
    f = _Frame(*frame_box, (-0.5, len(bins) - 0.5), _finite_range(arrays))
    step = max(1, len(bins) // 12)
    f.axes(out, xlabel, "value", [(b.bin_index, str(b.bin_index)) for b in bins[::step]])
    half = 0.35 * frame_box[2] / max(len(bins), 1)
    for b in bins:
        cx = f.x(b.bin_index)
        y_q1, y_q3, y_med = f.y(b.q1), f.y(b.q3), f.y(b.median)
        out.append(f'<g class="bin" data-bin="{b.bin_index}">')
        out.append(
            f'<line class="whisker" x1="{_n(cx)}" y1="{_n(f.y(b.whisker_low))}" x2="{_n(cx)}" y2="{_n(y_q1)}" stroke="#333"/>'
        )
        out.append(
            f'<line class="whisker" x1="{_n(cx)}" y1="{_n(y_q3)}" x2="{_n(cx)}" y2="{_n(f.y(b.whisker_high))}" stroke="#333"/>'
        )
        for v in (b.whisker_low, b.whisker_high):
            yy = f.y(v)
            out.append(
                f'<line class="cap" x1="{_n(cx - half / 2)}" y1="{_n(yy)}" x2="{_n(cx + half / 2)}" y2="{_n(yy)}" stroke="#333"/>'
            )
        out.append(
            f'<rect class="box" x="{_n(cx - half)}" y="{_n(y_q3)}" width="{_n(2 * half)}" '
            f'height="{_n(y_q1 - y_q3)}" fill="#cfe2f3" stroke="#1f77b4"/>'
        )
        out.append(
            f'<line class="median" x1="{_n(cx - half)}" y1="{_n(y_med)}" x2="{_n(cx + half)}" y2="{_n(y_med)}" '
            'stroke="#d62728" stroke-width="1.5"/>'
        )
        for _, v in b.outliers:
            out.append(f'<polygon class="outlier" points="{_star(cx, f.y(v))}" fill="#ff7f0e" stroke="none"/>')
        out.append("</g>")


def _draw_scatter(out, frame_box, dist: RuntimeDistribution):
    x = np.array([t.timestamp() for t, _ in dist.points])
    y = np.array([float(d) for _, d in dist.points])
    f = _Frame(*frame_box, (float(x.min()), float(x.max())), _finite_range([y]))
    f.axes(out, "time (UTC)", "duration (us)", _time_ticks(float(x.min()), float(x.max())))
    for xi, yi in zip(x, y):
        out.append(f'<circle class="point" cx="{_n(f.x(xi))}" cy="{_n(f.y(yi))}" r="1.5" fill="#1f77b4"/>')


def _draw_cumulative(out, frame_box, proj: MemoryProjection):
    curves = []
    for day, curve in sorted(proj.days.items()):
        # x is seconds since midnight so every day shares the axis
        xs = np.array([t.hour * 3600 + t.minute * 60 + t.second + t.microsecond / 1e6 for t, _ in curve])
        ys = np.array([mb for _, mb in curve])
        curves.append((day, xs, ys))
    allx = np.concatenate([c[1] for c in curves])
    f = _Frame(*frame_box, (float(allx.min()), float(allx.max())), _finite_range([np.r_[0.0, c[2]] for c in curves]))
    x0, x1 = float(allx.min()), float(allx.max())
    ticks = [(x0 + (x1 - x0) * k / 4, _clock(x0 + (x1 - x0) * k / 4)) for k in range(5)]
    f.axes(out, "time of day (UTC)", "accumulated memory (MB)", ticks)
    for k, (day, xs, ys) in enumerate(curves):
        # draw as a step function
        sx = np.repeat(xs, 2)[1:]
        sy = np.repeat(ys, 2)[:-1]
        _polylines(out, f, sx, sy, PALETTE[k % len(PALETTE)], "curve")
    _legend(out, [d.isoformat() for d, _, _ in curves][:10], frame_box[0] + 8, frame_box[1] + 10)


def _clock(sec: float) -> str:
    sec = int(round(sec))
    return f"{sec // 3600:02d}:{(sec % 3600) // 60:02d}"


def _draw_forecast(out, frame_box, cmp: ForecastComparison):
    labels = {"actual": cmp.actual, "ARIMA": cmp.arima, "naive": cmp.naive}
    _draw_trend(out, frame_box, labels)


def _draw_patterns(out, frame_box, series: RegularSeries, analysis: PatternAnalysis):
    epochs = series.epochs()
    f = _Frame(*frame_box, (epochs[0], epochs[-1]), _finite_range([series.values]))
    f.axes(out, "time (UTC)", "memory", _time_ticks(epochs[0], epochs[-1]))
    # shade at most one band per pixel column
    last_px = -1.0
    for pat in analysis.patterns:
        xa, xb = f.x(epochs[pat.start_index]), f.x(epochs[pat.end_index])
        if xa - last_px < 1.0:
            continue
        last_px = xa
        out.append(
            f'<rect class="pattern" x="{_n(xa)}" y="{_n(f.top)}" width="{_n(max(xb - xa, 0.5))}" '
            f'height="{_n(f.height)}" fill="#2ca02c" fill-opacity="0.15"/>'
        )
    _polylines(out, f, epochs, series.values, PALETTE[0])


def render_svg(snapshot: Snapshot, width: int = 800, height: int = 400) -> bytes:
    """Standalone SVG 1.1 document for ``snapshot``."""
    if int(width) != width or int(height) != height or width < MIN_SIZE or height < MIN_SIZE:
        raise InvalidParameterError(f"width and height must be integers >= {MIN_SIZE}")
    _check_nonempty(snapshot)
    width, height = int(width), int(height)
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" data-kind={quoteattr(snapshot.kind)}>',
        f"<title>{escape(snapshot.title)}</title>",
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{_n(width / 2)}" y="16" font-size="12" text-anchor="middle">{escape(snapshot.title)}</text>',
    ]
    left, right, top, bottom = 60.0, 12.0, 26.0, 36.0
    box = (left, top, max(width - left - right, 10.0), max(height - top - bottom, 10.0))
    p = snapshot.payload
    kind = snapshot.kind
    if kind == "trend":
        _draw_trend(out, box, p)
    elif kind == "seasonal_boxplot":
        _draw_boxplot(out, box, p, f"{p.period} bin")
    elif kind == "zoom_boxplot":
        _draw_boxplot(out, box, p, "minute of hour")
    elif kind == "runtime_scatter":
        _draw_scatter(out, box, p)
    elif kind == "cumulative_memory":
        _draw_cumulative(out, box, p)
    elif kind == "forecast_overlay":
        _draw_forecast(out, box, p)
    elif kind == "pattern_overlay":
        _draw_patterns(out, box, *p)
    else:
        # two stacked panels: input with the fitted components on top, residual below
        gap = 30.0
        ph = (box[3] - gap) / 2
        top_box = (box[0], box[1], box[2], ph)
        bot_box = (box[0], box[1] + ph + gap, box[2], ph)
        model = p.seasonal.values + p.trend.values
        out.append('<g class="panel" id="panel-input">')
        _draw_trend(out, top_box, {"input": p.observed, "seasonal+trend": p.observed.with_values(model)})
        out.append("</g>")
        out.append('<g class="panel" id="panel-residual">')
        _draw_trend(out, bot_box, {"residual": p.residual})
        out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")
