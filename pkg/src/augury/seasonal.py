"""Classical additive seasonal decomposition and boxplot seasonal profiles."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import EmptySelectionError, InsufficientDataError, InvalidParameterError
from .series import RegularSeries, centered_filter, from_epoch

PERIOD_SECONDS = {"hourly": 3600, "daily": 86400, "weekly": 7 * 86400}
# 1970-01-05 was a Monday; weekly bins start there, the others at midnight.
_WEEK_ANCHOR = 4 * 86400
WHISKER_IQR = 1.5


@dataclass(frozen=True)
class Period:
    """A seasonal period split into ``bins_per_period`` equal bins."""

    kind: str
    bins_per_period: int

    def __post_init__(self):
        if self.kind not in PERIOD_SECONDS:
            raise InvalidParameterError(f"unknown period kind {self.kind!r}")
        if int(self.bins_per_period) != self.bins_per_period or self.bins_per_period < 2:
            raise InvalidParameterError("a period needs at least two bins")

    @classmethod
    def for_lag(cls, kind: str, lag: float) -> Period:
        """The period whose bins are one series lag wide."""
        if kind not in PERIOD_SECONDS:
            raise InvalidParameterError(f"unknown period kind {kind!r}")
        bins = PERIOD_SECONDS[kind] / lag
        if abs(bins - round(bins)) > 1e-9:
            raise InvalidParameterError(f"a lag of {lag}s does not divide the {kind} period")
        return cls(kind, int(round(bins)))

    @property
    def seconds(self) -> int:
        return PERIOD_SECONDS[self.kind]

    def check(self, series: RegularSeries) -> None:
        if abs(series.lag * self.bins_per_period - self.seconds) > 1e-6:
            raise InvalidParameterError(
                f"{self.bins_per_period} bins of {series.lag}s do not make a {self.kind} period"
            )

    def phases(self, series: RegularSeries) -> np.ndarray:
        """Bin position of every observation, anchored to calendar time."""
        anchor = _WEEK_ANCHOR if self.kind == "weekly" else 0
        offset = (series.start_epoch - anchor) % self.seconds
        # phase of the first point only; stepping by index avoids float drift
        first = int(np.floor(offset / series.lag + 1e-6))
        return (first + np.arange(len(series), dtype=np.int64)) % self.bins_per_period


@dataclass(frozen=True)
class Decomposition:
    observed: RegularSeries
    seasonal: RegularSeries
    trend: RegularSeries
    residual: RegularSeries
    period: Period

    @property
    def seasonal_pattern(self) -> np.ndarray:
        """One period of seasonal values indexed by bin position."""
        phases = self.period.phases(self.seasonal)
        pattern = np.empty(self.period.bins_per_period)
        pattern[phases[: self.period.bins_per_period]] = self.seasonal.values[: self.period.bins_per_period]
        return pattern


@dataclass(frozen=True)
class ProfileBin:
    bin_index: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple  # of (datetime, value)
    n_entries: int


@dataclass(frozen=True)
class SeasonalProfile:
    period: str
    bins: tuple

    def __len__(self):
        return len(self.bins)


def centered_trend(series: RegularSeries, p: int) -> np.ndarray:
    filt = centered_filter(p)
    half = len(filt) // 2
    out = np.full(len(series), np.nan)
    if len(series) >= len(filt):
        out[half : len(series) - half] = np.convolve(series.values, filt, mode="valid")
    return out


def decompose(series: RegularSeries, period: Period) -> Decomposition:
    """Additive decomposition ``observed = seasonal + trend + residual``.

    The trend is a centered moving average over one period (``2 x p`` form
    for even ``p``). Seasonal values are the per-bin means of the detrended
    series, shifted to zero mean over the period and repeated. Trend and
    residual are missing wherever the moving-average window is incomplete or
    touches a missing value.
    """
    period.check(series)
    p = period.bins_per_period
    if np.count_nonzero(~series.missing()) < 2 * p or len(series) < 2 * p:
        raise InsufficientDataError(f"need at least two full periods ({2 * p} values)")

    trend = centered_trend(series, p)
    detrended = series.values - trend
    phases = period.phases(series)
    ok = ~np.isnan(detrended)
    sums = np.bincount(phases[ok], weights=detrended[ok], minlength=p)
    counts = np.bincount(phases[ok], minlength=p)
    if np.any(counts == 0):
        raise InsufficientDataError("some seasonal bins have no detrended observations")
    pattern = sums / counts
    pattern = pattern - pattern.mean()
    seasonal = pattern[phases]
    residual = series.values - trend - seasonal
    return Decomposition(
        series,
        series.with_values(seasonal),
        series.with_values(trend),
        series.with_values(residual),
        period,
    )


def quantile7(sorted_values: np.ndarray, q: float) -> float:
    """Linear interpolation between order statistics (Hyndman-Fan type 7)."""
    n = sorted_values.size
    h = (n - 1) * q
    lo = int(np.floor(h))
    hi = min(lo + 1, n - 1)
    return float(sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo]))


def box_stats(bin_index: int, entries) -> ProfileBin:
    """Boxplot statistics for one bin; ``entries`` is a list of ``(time, value)``."""
    values = np.array([v for _, v in entries], dtype=np.float64)
    if values.size == 0:
        raise InvalidParameterError(f"bin {bin_index} has no entries")
    ordered = np.sort(values)
    q1 = quantile7(ordered, 0.25)
    med = quantile7(ordered, 0.5)
    q3 = quantile7(ordered, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - WHISKER_IQR * iqr
    hi_fence = q3 + WHISKER_IQR * iqr
    inside = ordered[(ordered >= lo_fence) & (ordered <= hi_fence)]
    outliers = tuple(
        sorted(((ts, float(v)) for ts, v in entries if v < lo_fence or v > hi_fence), key=lambda e: e[0])
    )
    return ProfileBin(
        bin_index, med, q1, q3, float(inside[0]), float(inside[-1]), outliers, int(values.size)
    )


def seasonal_profile(series: RegularSeries, period: Period, detrend: bool = True) -> SeasonalProfile:
    """Per-bin boxplot statistics of a series folded over ``period``.

    With ``detrend`` the trend from :func:`decompose` is subtracted first, so
    entries read as deviations from the trend; observations without a trend
    value are then left out.
    """
    period.check(series)
    p = period.bins_per_period
    if len(series) < 2 * p:
        raise InsufficientDataError(f"need at least two full periods ({2 * p} values)")
    values = series.values
    if detrend:
        values = values - decompose(series, period).trend.values
    phases = period.phases(series)
    epochs = series.epochs()
    grouped = [[] for _ in range(p)]
    for i in np.flatnonzero(~np.isnan(values)):
        grouped[phases[i]].append((from_epoch(epochs[i]), float(values[i])))
    if any(not g for g in grouped):
        raise InsufficientDataError("some seasonal bins have no entries")
    return SeasonalProfile(period.kind, tuple(box_stats(b, g) for b, g in enumerate(grouped)))


def zoom_profile(records, app_id: str, hour: int, bin_width: int = 1) -> SeasonalProfile:
    """Minute-level profile of one clock hour across all days.

    Executions of ``app_id`` are counted in ``bin_width``-minute windows; the
    windows of hour ``hour`` (UTC) are grouped by position within the hour.
    Every calendar day from the first to the last record contributes one
    entry per bin, zero when idle.
    """
    if not 0 <= hour <= 23:
        raise InvalidParameterError("hour must be in 0..23")
    if int(bin_width) != bin_width or bin_width < 1 or 60 % bin_width:
        raise InvalidParameterError("bin width must divide 60 minutes")
    epochs = np.array([r.timestamp.timestamp() for r in records if r.app_id == app_id])
    if epochs.size == 0:
        raise EmptySelectionError(f"no records for application {app_id!r}")
    first_day = int(np.floor(epochs.min() / 86400))
    last_day = int(np.floor(epochs.max() / 86400))
    n_bins = 60 // bin_width
    width = bin_width * 60

    days = np.floor(epochs / 86400).astype(np.int64)
    secs = epochs - days * 86400.0
    in_hour = (secs >= hour * 3600) & (secs < (hour + 1) * 3600)
    slot = np.floor((secs[in_hour] - hour * 3600) / width).astype(np.int64)
    counts = np.zeros((last_day - first_day + 1, n_bins), dtype=np.int64)
    np.add.at(counts, (days[in_hour] - first_day, slot), 1)

    bins = []
    for b in range(n_bins):
        entries = [
            (from_epoch((first_day + d) * 86400.0 + hour * 3600 + b * width), float(counts[d, b]))
            for d in range(counts.shape[0])
        ]
        bins.append(box_stats(b, entries))
    return SeasonalProfile("hourly", tuple(bins))


def seasonal_amplitude(decomposition: Decomposition) -> float:
    """Half the peak-to-peak range of the seasonal component."""
    s = decomposition.seasonal_pattern
    return float((s.max() - s.min()) / 2.0)
