"""Readers for apache access logs, metrics CSV and JSON request records.

Everything is converted to UTC on the way in. Malformed rows are counted
and skipped; a parser only gives up when the source as a whole is unusable.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable

import numpy as np

from .errors import EmptyInputError, FormatError, InvalidParameterError, SchemaError
from .series import UTC, RegularSeries, as_utc, from_epoch

RECORD_CSV_HEADER = ("timestamp", "app_id", "client_ip", "duration_us", "bytes", "status")
METRICS_CSV_HEADER = ("timestamp", "mem_percent", "cpu_percent")
DEFAULT_COLUMN_MAP = {name: name for name in METRICS_CSV_HEADER}

_MONTHS = {
    name: i + 1
    for i, name in enumerate(
        ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
    )
}

_LOG_LINE = re.compile(
    r'^(?P<ip>\S+) \S+ \S+ \[(?P<ts>[^\]]+)\] '
    r'"(?P<method>[A-Za-z]+) (?P<target>\S+)(?: [^"\s]+)?" '
    r"(?P<status>\d{3}) (?P<bytes>\d+|-)"
    r'(?: "(?:[^"\\]|\\.)*" "(?:[^"\\]|\\.)*")?'
    r"(?: (?P<duration>\d+))?\s*$"
)
_LOG_TIME = re.compile(r"^(\d{2})/([A-Z][a-z]{2})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-])(\d{2})(\d{2})$")


@dataclass(frozen=True)
class RequestRecord:
    timestamp: datetime
    app_id: str
    client_ip: str
    duration_us: int | None = None
    bytes: int | None = None
    status: int | None = None

    def __post_init__(self):
        if not self.app_id:
            raise InvalidParameterError("app_id must be non-empty")
        if self.duration_us is not None and self.duration_us < 0:
            raise InvalidParameterError("duration must be non-negative")
        if self.bytes is not None and self.bytes < 0:
            raise InvalidParameterError("bytes must be non-negative")


@dataclass(frozen=True)
class MetricsSample:
    timestamp: datetime
    mem_percent: float
    cpu_percent: float
    extra: dict = field(default_factory=dict, compare=True)

    def metric(self, name: str) -> float:
        if name == "mem_percent":
            return self.mem_percent
        if name == "cpu_percent":
            return self.cpu_percent
        return self.extra.get(name, math.nan)


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_rejected: int = 0
    gaps: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)

    def merge(self, other: IngestReport) -> IngestReport:
        return IngestReport(
            self.rows_read + other.rows_read,
            self.rows_rejected + other.rows_rejected,
            self.gaps + other.gaps,
            self.overlaps + other.overlaps,
        )

    def summary(self) -> str:
        return (
            f"rows read: {self.rows_read}, rejected: {self.rows_rejected}, "
            f"gaps: {len(self.gaps)}, overlaps: {len(self.overlaps)}"
        )


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, str):
        return data
    return data.decode("utf-8", errors="replace")


def parse_log_time(text: str) -> datetime:
    """Parse an apache ``%d/%b/%Y:%H:%M:%S %z`` timestamp to UTC."""
    m = _LOG_TIME.match(text)
    if m is None or m.group(2) not in _MONTHS:
        raise ValueError(f"bad log timestamp {text!r}")
    day, mon, year, hh, mm, ss, sign, oh, om = m.groups()
    offset = timedelta(hours=int(oh), minutes=int(om))
    tz = timezone(offset if sign == "+" else -offset)
    local = datetime(int(year), _MONTHS[mon], int(day), int(hh), int(mm), int(ss), tzinfo=tz)
    return local.astimezone(UTC)


def format_log_time(ts: datetime) -> str:
    ts = as_utc(ts)
    month = next(k for k, v in _MONTHS.items() if v == ts.month)
    return f"{ts.day:02d}/{month}/{ts.year:04d}:{ts.hour:02d}:{ts.minute:02d}:{ts.second:02d} +0000"


def parse_timestamp(value) -> datetime:
    """Parse ISO 8601 text (``Z`` or offset, naive means UTC) or epoch seconds."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if not math.isfinite(value):
            raise ValueError("non-finite timestamp")
        return from_epoch(float(value))
    text = str(value).strip()
    if not text:
        raise ValueError("empty timestamp")
    try:
        return from_epoch(float(text))
    except ValueError:
        pass
    if text[-1] in "Zz":
        text = text[:-1] + "+00:00"
    return as_utc(datetime.fromisoformat(text))


def format_timestamp(ts: datetime) -> str:
    ts = as_utc(ts)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_log_line(line: str) -> RequestRecord | None:
    """Parse one Common/Combined Log Format line, or return None if malformed."""
    m = _LOG_LINE.match(line)
    if m is None:
        return None
    try:
        ts = parse_log_time(m.group("ts"))
    except ValueError:
        return None
    app_id = m.group("target").split("?", 1)[0]
    if not app_id:
        return None
    nbytes = m.group("bytes")
    duration = m.group("duration")
    return RequestRecord(
        timestamp=ts,
        app_id=app_id,
        client_ip=m.group("ip"),
        duration_us=int(duration) if duration is not None else None,
        bytes=None if nbytes == "-" else int(nbytes),
        status=int(m.group("status")),
    )


def parse_apache_log(source) -> tuple[list[RequestRecord], IngestReport]:
    """Parse an apache access log (Common or Combined format).

    An optional trailing integer is read as the request duration in
    microseconds. Every line that fails to parse, blank lines included, is
    counted in ``rows_rejected``.
    """
    text = _read_text(source)
    records = []
    report = IngestReport()
    for line in text.splitlines():
        report.rows_read += 1
        rec = parse_log_line(line)
        if rec is None:
            report.rows_rejected += 1
        else:
            records.append(rec)
    if not records:
        raise EmptyInputError("no parseable apache log lines")
    return records, report


def _to_float(text) -> float:
    val = float(text)
    if not math.isfinite(val):
        raise ValueError("non-finite value")
    return val


def read_metrics_csv(source, column_map: dict | None = None) -> tuple[list[MetricsSample], IngestReport]:
    """Read monitoring samples from a CSV file with a header row.

    ``column_map`` maps ``timestamp``, ``mem_percent`` and ``cpu_percent`` to
    the header names used by the file. Rows with an unparseable timestamp or
    a percentage outside [0, 100] are rejected. Other numeric columns land in
    ``MetricsSample.extra``. The result is sorted by timestamp (stable).
    """
    cmap = dict(DEFAULT_COLUMN_MAP)
    cmap.update(column_map or {})
    reader = csv.reader(io.StringIO(_read_text(source)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyInputError("metrics CSV has no header") from None
    pos = {}
    for key in METRICS_CSV_HEADER:
        if cmap[key] not in header:
            raise SchemaError(cmap[key])
        pos[key] = header.index(cmap[key])
    mapped = set(pos.values())
    extra_cols = [(i, name) for i, name in enumerate(header) if i not in mapped]

    samples = []
    report = IngestReport()
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        report.rows_read += 1
        try:
            if len(row) != len(header):
                raise ValueError("field count")
            ts = parse_timestamp(row[pos["timestamp"]])
            mem = _to_float(row[pos["mem_percent"]])
            cpu = _to_float(row[pos["cpu_percent"]])
            if not (0.0 <= mem <= 100.0 and 0.0 <= cpu <= 100.0):
                raise ValueError("percentage out of range")
        except ValueError:
            report.rows_rejected += 1
            continue
        extra = {}
        for i, name in extra_cols:
            try:
                extra[name] = _to_float(row[i])
            except ValueError:
                pass
        samples.append(MetricsSample(ts, mem, cpu, extra))
    samples.sort(key=lambda s: s.timestamp)
    return samples, report


def _record_from_object(obj) -> RequestRecord:
    if not isinstance(obj, dict):
        raise ValueError("not an object")
    app, ip = obj.get("app"), obj.get("ip")
    if not isinstance(app, str) or not app or not isinstance(ip, str):
        raise ValueError("app/ip")
    ts = parse_timestamp(obj["timestamp"])

    def opt_number(key, scale=1):
        val = obj.get(key)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ValueError(key)
        if val < 0:
            raise ValueError(key)
        return int(round(val * scale))

    status = obj.get("status")
    if status is not None and (isinstance(status, bool) or not isinstance(status, int)):
        raise ValueError("status")
    return RequestRecord(ts, app, ip, opt_number("duration_ms", 1000), opt_number("bytes"), status)


def read_records_json(source) -> tuple[list[RequestRecord], IngestReport]:
    """Read request records from a JSON array or newline-delimited JSON.

    Objects need ``timestamp``, ``app`` and ``ip``; ``duration_ms``,
    ``bytes`` and ``status`` are optional.
    """
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except ValueError:
        doc = None
        objects = []
        parsed_any = False
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                parsed_any = parsed_any or isinstance(obj, dict)
            except ValueError:
                obj = None
            objects.append(obj)
        if not parsed_any:
            raise FormatError("input is neither a JSON array nor line-delimited JSON objects") from None
    else:
        if isinstance(doc, list):
            objects = doc
        elif isinstance(doc, dict):
            objects = [doc]
        else:
            raise FormatError("top-level JSON value must be an array or object")

    records = []
    report = IngestReport()
    for obj in objects:
        report.rows_read += 1
        try:
            records.append(_record_from_object(obj))
        except (ValueError, KeyError, TypeError, InvalidParameterError):
            report.rows_rejected += 1
    return records, report


def _intervals(mask: np.ndarray, start: float, lag: float) -> list:
    """Merge runs of True slots into (start, end) datetime pairs."""
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return out
    breaks = np.flatnonzero(np.diff(idx) > 1)
    firsts = np.concatenate(([idx[0]], idx[breaks + 1]))
    lasts = np.concatenate((idx[breaks], [idx[-1]]))
    for a, b in zip(firsts, lasts):
        out.append((from_epoch(start + a * lag), from_epoch(start + (b + 1) * lag)))
    return out


def to_regular_series(
    samples: list[MetricsSample],
    metric: str = "mem_percent",
    lag: float | timedelta = 2.0,
    fill: str = "missing",
) -> tuple[RegularSeries, IngestReport]:
    """Place samples on a regular grid of spacing ``lag`` seconds.

    The grid starts at the first timestamp rounded down to a multiple of
    ``lag`` (epoch based). A slot takes the last sample that falls inside it;
    of several samples sharing one timestamp the later-read one wins, and the
    slot is reported as an overlap. Empty slots are filled according to
    ``fill`` (``missing``, ``previous`` or ``zero``) and reported as gaps.
    """
    if isinstance(lag, timedelta):
        lag = lag.total_seconds()
    lag = float(lag)
    if not lag > 0:
        raise InvalidParameterError("lag must be positive")
    if fill not in ("missing", "previous", "zero"):
        raise InvalidParameterError(f"unknown fill policy {fill!r}")
    if not samples:
        raise EmptyInputError("no samples to regularize")

    ordered = sorted(samples, key=lambda s: s.timestamp)
    values = np.array([s.metric(metric) for s in ordered], dtype=np.float64)
    epochs = np.array([s.timestamp.timestamp() for s in ordered])
    keep = ~np.isnan(values)
    if not keep.any():
        raise EmptyInputError(f"no samples carry metric {metric!r}")
    values, epochs = values[keep], epochs[keep]

    start = math.floor(epochs[0] / lag) * lag
    slots = np.floor((epochs - start) / lag + 1e-9).astype(np.int64)
    size = int(slots[-1]) + 1
    last_in_slot = np.append(slots[1:] != slots[:-1], True)
    grid = np.full(size, np.nan)
    grid[slots[last_in_slot]] = values[last_in_slot]

    dup = np.zeros(size, dtype=bool)
    same_time = epochs[1:] == epochs[:-1]
    dup[slots[1:][same_time]] = True

    empty = np.ones(size, dtype=bool)
    empty[slots] = False
    if fill == "zero":
        grid[empty] = 0.0
    elif fill == "previous":
        pos = np.where(~empty, np.arange(size), 0)
        np.maximum.accumulate(pos, out=pos)
        grid = grid[pos]

    report = IngestReport(
        rows_read=len(samples),
        rows_rejected=0,
        gaps=_intervals(empty, start, lag),
        overlaps=_intervals(dup, start, lag),
    )
    return RegularSeries(from_epoch(start), lag, grid), report


def _fmt_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_records_csv(records: Iterable[RequestRecord], stream) -> None:
    """Write the canonical record CSV to a text stream."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_CSV_HEADER)
    for r in records:
        writer.writerow(
            (
                format_timestamp(r.timestamp),
                r.app_id,
                r.client_ip,
                _fmt_number(r.duration_us),
                _fmt_number(r.bytes),
                _fmt_number(r.status),
            )
        )


def read_records_csv(source) -> tuple[list[RequestRecord], IngestReport]:
    """Read the canonical record CSV written by :func:`write_records_csv`."""
    reader = csv.reader(io.StringIO(_read_text(source)))
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise EmptyInputError("record CSV has no header") from None
    for col in RECORD_CSV_HEADER:
        if col not in header:
            raise SchemaError(col)
    pos = {col: header.index(col) for col in RECORD_CSV_HEADER}

    def opt_int(text):
        return int(text) if text.strip() else None

    records = []
    report = IngestReport()
    for row in reader:
        if not row:
            continue
        report.rows_read += 1
        try:
            records.append(
                RequestRecord(
                    parse_timestamp(row[pos["timestamp"]]),
                    row[pos["app_id"]],
                    row[pos["client_ip"]],
                    opt_int(row[pos["duration_us"]]),
                    opt_int(row[pos["bytes"]]),
                    opt_int(row[pos["status"]]),
                )
            )
        except (ValueError, IndexError, InvalidParameterError):
            report.rows_rejected += 1
    return records, report


def write_metrics_csv(samples: Iterable[MetricsSample], stream) -> None:
    """Write the canonical metrics CSV to a text stream."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(METRICS_CSV_HEADER)
    for s in samples:
        writer.writerow((format_timestamp(s.timestamp), repr(float(s.mem_percent)), repr(float(s.cpu_percent))))
