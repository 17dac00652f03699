"""Regular-interval series and the moving-average primitives built on them.

Missing observations are stored as NaN. Every operation returns a new
series; inputs are never modified.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from . import kernels
from .errors import InsufficientDataError, InvalidParameterError

UTC = timezone.utc


def as_utc(ts: datetime) -> datetime:
    """Return ``ts`` as an aware UTC datetime; naive values are taken as UTC."""
    if ts.tzinfo is None:
        return ts.replace(tzinfo=UTC)
    return ts.astimezone(UTC)


def to_epoch(ts: datetime) -> float:
    return as_utc(ts).timestamp()


def from_epoch(seconds: float) -> datetime:
    # timedelta arithmetic keeps microseconds exact where fromtimestamp may round
    whole = int(np.floor(seconds))
    micros = int(round((seconds - whole) * 1e6))
    return datetime(1970, 1, 1, tzinfo=UTC) + timedelta(seconds=whole, microseconds=micros)


@dataclass(frozen=True, eq=False)
class RegularSeries:
    """Equally spaced observations starting at ``start``.

    Parameters
    ----------
    start : datetime
        Time of the first observation (stored as UTC).
    lag : float
        Spacing between observations, in seconds.
    values : array-like
        Observations; NaN marks a missing value.
    """

    start: datetime
    lag: float
    values: np.ndarray

    def __post_init__(self):
        lag = float(self.lag)
        if not lag > 0:
            raise InvalidParameterError(f"lag must be positive, got {self.lag!r}")
        values = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if values.size < 1:
            raise InvalidParameterError("a series needs at least one value")
        values.flags.writeable = False
        object.__setattr__(self, "start", as_utc(self.start))
        object.__setattr__(self, "lag", lag)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def start_epoch(self) -> float:
        return self.start.timestamp()

    def epochs(self) -> np.ndarray:
        """Observation times as seconds since the Unix epoch."""
        return self.start_epoch + self.lag * np.arange(len(self))

    def time_at(self, index: int) -> datetime:
        return self.start + timedelta(seconds=self.lag * index)

    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def with_values(self, values) -> RegularSeries:
        """Same indexing, new values."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise InvalidParameterError("replacement values must keep the series length")
        return RegularSeries(self.start, self.lag, values)

    def slice(self, lo: int, hi: int | None = None) -> RegularSeries:
        hi = len(self) if hi is None else hi
        if not 0 <= lo < hi <= len(self):
            raise InvalidParameterError(f"bad slice [{lo}, {hi}) for length {len(self)}")
        return RegularSeries(self.time_at(lo), self.lag, self.values[lo:hi])

    def same_grid(self, other: RegularSeries) -> bool:
        return (
            len(self) == len(other)
            and self.lag == other.lag
            and self.start == other.start
        )


@dataclass(frozen=True)
class WeightScheme:
    """Observation weights for a moving average.

    ``uniform`` gives every lag weight 1. ``exponential`` gives the most
    recent observation weight 1 and each older one ``decay`` times the next;
    ``decay=None`` means ``1 - 2/(N+1)`` for a window of ``N``.
    """

    kind: str = "uniform"
    decay: float | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "exponential"):
            raise InvalidParameterError(f"unknown weight scheme {self.kind!r}")
        if self.kind == "exponential" and self.decay is not None:
            if not 0.0 < self.decay <= 1.0:
                raise InvalidParameterError("exponential decay must lie in (0, 1]")

    @classmethod
    def uniform(cls) -> WeightScheme:
        return cls("uniform")

    @classmethod
    def exponential(cls, decay: float | None = None) -> WeightScheme:
        return cls("exponential", decay)

    def decay_for(self, n: int) -> float:
        if self.kind == "uniform":
            return 1.0
        if self.decay is None:
            return 1.0 - 2.0 / (n + 1)
        return float(self.decay)

    def weights(self, n: int) -> np.ndarray:
        """Weights ordered most recent first."""
        return self.decay_for(n) ** np.arange(n, dtype=np.float64)


def _check_window(series: RegularSeries, n: int) -> None:
    if int(n) != n or n < 2 or n > len(series):
        raise InvalidParameterError(
            f"window N={n} must satisfy 2 <= N <= {len(series)} (series length)"
        )


def centered_filter(n: int) -> np.ndarray:
    """Symmetric uniform filter of window ``n``; ``2 x n`` form for even ``n``."""
    if n % 2:
        return np.full(n, 1.0 / n)
    filt = np.ones(n + 1)
    filt[0] = filt[-1] = 0.5
    return filt / n


def moving_average(
    series: RegularSeries,
    n: int,
    weights: WeightScheme | None = None,
    alignment: str = "trailing",
) -> RegularSeries:
    """Weighted moving average of window ``n``.

    ``trailing`` places the mean of observations ``t, t-1, ..., t-(n-1)`` at
    index ``t`` (so the first ``n-1`` entries are missing). ``centered`` uses a
    symmetric uniform window and leaves ``n // 2`` missing entries at both
    ends; for even ``n`` the window spans ``n + 1`` points with half weight at
    the ends. Any window touching a missing value yields a missing value.
    """
    weights = weights or WeightScheme.uniform()
    _check_window(series, n)
    if alignment == "trailing":
        out = kernels.trailing_ma(series.values, n, weights.decay_for(n))
    elif alignment == "centered":
        if weights.kind != "uniform":
            raise InvalidParameterError("centered alignment supports uniform weights only")
        filt = centered_filter(n)
        half = len(filt) // 2
        if len(series) < len(filt):
            raise InvalidParameterError(f"centered window of {len(filt)} exceeds series length")
        out = np.full(len(series), np.nan)
        vals = series.values
        # NaN propagates through the convolution, which is the desired rule
        out[half : len(series) - half] = np.convolve(vals, filt, mode="valid")
    else:
        raise InvalidParameterError(f"unknown alignment {alignment!r}")
    return series.with_values(out)


def ewma(series: RegularSeries, n: int, decay: float | None = None) -> RegularSeries:
    """Trailing exponentially weighted moving average over ``n`` lags."""
    if decay is not None and not 0.0 < decay < 1.0:
        raise InvalidParameterError("decay must lie strictly between 0 and 1")
    return moving_average(series, n, WeightScheme.exponential(decay), "trailing")


def difference(series: RegularSeries) -> RegularSeries:
    """First differences ``y[t] - y[t-1]``; index 0 is missing."""
    if len(series) < 2:
        raise InvalidParameterError("difference needs at least two values")
    out = np.empty(len(series))
    out[0] = np.nan
    out[1:] = np.diff(series.values)
    return series.with_values(out)


def series_sigma(series: RegularSeries) -> float:
    """Sample standard deviation (n-1 denominator) of the non-missing values."""
    vals = series.values[~series.missing()]
    if vals.size < 2:
        raise InsufficientDataError("need at least two non-missing values for a standard deviation")
    return float(np.std(vals, ddof=1))


def trim_missing(series: RegularSeries) -> RegularSeries:
    """Drop leading and trailing missing values (e.g. moving-average edges)."""
    ok = np.flatnonzero(~series.missing())
    if ok.size == 0:
        raise InsufficientDataError("series has no observed values")
    return series.slice(int(ok[0]), int(ok[-1]) + 1)
