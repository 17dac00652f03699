"""From request records to analysis series: counts, rankings, projections."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import date, time

import numpy as np

from .errors import EmptyInputError, EmptySelectionError, InvalidParameterError
from .series import RegularSeries, from_epoch


@dataclass(frozen=True)
class RankedApp:
    app_id: str
    request_count: int
    share: float


@dataclass(frozen=True)
class AppRanking:
    apps: tuple
    total_requests: int

    def __iter__(self):
        return iter(self.apps)

    def __len__(self):
        return len(self.apps)


@dataclass(frozen=True)
class MemoryProjection:
    """Per-day cumulative memory curves: ``days`` maps a date to ``[(time, mb), ...]``."""

    days: dict
    per_execution_mb: float


@dataclass(frozen=True)
class RuntimeDistribution:
    points: tuple  # of (datetime, duration_us)
    skipped: int

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _select(records, app_id):
    if app_id is None:
        return list(records)
    return [r for r in records if r.app_id == app_id]


def count_executions(records, app_id: str | None, window_minutes: int = 60) -> RegularSeries:
    """Executions of ``app_id`` per ``window_minutes`` window.

    Windows are half-open and aligned to midnight UTC. The grid runs from the
    window holding the first matching record to the one holding the last;
    idle windows count 0. ``app_id=None`` counts every record.
    """
    if int(window_minutes) != window_minutes or window_minutes < 1:
        raise InvalidParameterError("window_minutes must be a positive integer")
    if not records:
        raise EmptyInputError("no records")
    chosen = _select(records, app_id)
    if not chosen:
        raise EmptySelectionError(f"no records for application {app_id!r}")
    width = window_minutes * 60.0
    epochs = np.array([r.timestamp.timestamp() for r in chosen])
    first = epochs.min()
    midnight = np.floor(first / 86400.0) * 86400.0
    start = midnight + np.floor((first - midnight) / width) * width
    slots = np.floor((epochs - start) / width).astype(np.int64)
    counts = np.bincount(slots, minlength=int(slots.max()) + 1).astype(np.float64)
    return RegularSeries(from_epoch(start), width, counts)


def rank_applications(records, top_k: int = 5) -> AppRanking:
    """Most requested applications; shares are relative to all records."""
    if not records:
        raise EmptyInputError("no records")
    if top_k < 1:
        raise InvalidParameterError("top_k must be at least 1")
    counts = Counter(r.app_id for r in records)
    total = sum(counts.values())
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    return AppRanking(tuple(RankedApp(a, c, c / total) for a, c in ordered), total)


def parse_clock(text: str) -> time:
    """``HH:MM`` or ``HH:MM:SS`` to a :class:`datetime.time`."""
    parts = text.strip().split(":")
    if len(parts) not in (2, 3):
        raise InvalidParameterError(f"bad clock time {text!r}")
    try:
        return time(*(int(p) for p in parts))
    except ValueError as exc:
        raise InvalidParameterError(f"bad clock time {text!r}") from exc


def accumulated_memory(records, app_id: str, window: tuple, per_execution_mb: float) -> MemoryProjection:
    """Worst-case memory build-up inside a daily clock window.

    Every execution inside ``[window[0], window[1])`` (UTC clock times) adds
    ``per_execution_mb`` and nothing is released, giving one non-decreasing
    curve per calendar day.
    """
    if not per_execution_mb > 0:
        raise InvalidParameterError("per_execution_mb must be positive")
    lo, hi = (parse_clock(w) if isinstance(w, str) else w for w in window)
    if not lo < hi:
        raise InvalidParameterError("clock window must end after it starts")
    days: dict[date, list] = {}
    for r in sorted(_select(records, app_id), key=lambda r: r.timestamp):
        clock = r.timestamp.time()
        if lo <= clock < hi:
            days.setdefault(r.timestamp.date(), []).append(r.timestamp)
    if not days:
        raise EmptySelectionError(f"no executions of {app_id!r} between {lo} and {hi}")
    curves = {
        day: [(ts, (k + 1) * per_execution_mb) for k, ts in enumerate(stamps)]
        for day, stamps in sorted(days.items())
    }
    return MemoryProjection(curves, float(per_execution_mb))


def runtime_distribution(records, app_id: str) -> RuntimeDistribution:
    """Chronological ``(timestamp, duration_us)`` pairs for one application."""
    chosen = _select(records, app_id)
    points = tuple(sorted((r.timestamp, r.duration_us) for r in chosen if r.duration_us is not None))
    if not points:
        raise EmptySelectionError(f"no records with a duration for {app_id!r}")
    return RuntimeDistribution(points, len(chosen) - len(points))

