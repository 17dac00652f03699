"""Synthetic validation workloads with known ground truth.

Two generators: rectangular memory pulses sampled like a monitoring agent
(with a CPU jump marking each start), and a fixed-schedule request log in
Combined Log Format. Both are deterministic given their seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import InvalidParameterError
from .ingestion import MetricsSample, format_log_time
from .series import UTC, as_utc, from_epoch
from .signal_model import ModelParams

DEFAULT_START = datetime(2017, 3, 12, tzinfo=UTC)

# CPU level outside and on top of a running pulse.
CPU_IDLE = 5.0
CPU_JUMP = 40.0


def _is_multiple(value: float, unit: float) -> bool:
    ratio = value / unit
    return abs(ratio - round(ratio)) < 1e-9


@dataclass(frozen=True)
class PulseSpec:
    """Rectangular memory pulses repeated every ``period`` seconds.

    Pulse ``k`` covers ``[k*period + offset, k*period + offset + duration)``
    where ``offset`` defaults to ``period - duration`` so every period opens
    with an idle stretch. Baseline and height are arbitrary defaults.
    """

    baseline_percent: float = 20.0
    height_percent: float = 30.0
    duration: float = 60.0
    period: float = 120.0
    noise_sigma: float = 0.5
    sample_lag: float = 2.0
    total_span: float = 4 * 86400.0
    rng_seed: int = 0
    start: datetime = DEFAULT_START
    offset: float | None = None

    def __post_init__(self):
        if not 0 < self.duration < self.period:
            raise InvalidParameterError("pulse duration must be positive and shorter than the period")
        if self.baseline_percent < 0 or self.height_percent <= 0:
            raise InvalidParameterError("baseline must be >= 0 and height > 0")
        if self.baseline_percent + self.height_percent > 100:
            raise InvalidParameterError("baseline + height exceeds 100%")
        if self.noise_sigma < 0 or self.sample_lag <= 0 or self.total_span <= 0:
            raise InvalidParameterError("noise, lag and span must be non-negative/positive")
        for name in ("duration", "period"):
            if not _is_multiple(getattr(self, name), self.sample_lag):
                raise InvalidParameterError(f"sample_lag must divide {name}")
        off = self.pulse_offset
        if off < 0 or off + self.duration > self.period or not _is_multiple(off, self.sample_lag):
            raise InvalidParameterError("offset must be a lag multiple keeping the pulse inside its period")

    @property
    def pulse_offset(self) -> float:
        return self.period - self.duration if self.offset is None else float(self.offset)


def generate_metrics(spec: PulseSpec) -> tuple[list[MetricsSample], list[tuple[datetime, ModelParams]]]:
    """Sample memory and CPU usage for ``spec``.

    Returns the samples and one ``(start, ModelParams)`` ground-truth entry per
    pulse that fits completely inside the span.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n = int(round(spec.total_span / spec.sample_lag))
    t = np.arange(n) * spec.sample_lag
    phase = np.mod(t, spec.period)
    on = (phase >= spec.pulse_offset - 1e-9) & (phase < spec.pulse_offset + spec.duration - 1e-9)

    mem = spec.baseline_percent + spec.height_percent * on + rng.normal(0.0, spec.noise_sigma, n)
    cpu = CPU_IDLE + CPU_JUMP * on + rng.normal(0.0, spec.noise_sigma, n)
    np.clip(mem, 0.0, 100.0, out=mem)
    np.clip(cpu, 0.0, 100.0, out=cpu)

    t0 = as_utc(spec.start).timestamp()
    samples = [
        MetricsSample(from_epoch(t0 + ti), float(m), float(c))
        for ti, m, c in zip(t.tolist(), mem.tolist(), cpu.tolist())
    ]

    truth = []
    params = ModelParams(spec.height_percent, spec.height_percent, spec.duration)
    k = 0
    while True:
        begin = k * spec.period + spec.pulse_offset
        if begin + spec.duration > n * spec.sample_lag:
            break
        truth.append((from_epoch(t0 + begin), params))
        k += 1
    return samples, truth


@dataclass(frozen=True)
class RequestSchedule:
    """Scripted requests: every ``period`` seconds each app sends a burst.

    ``apps`` pairs a request path with its burst size. ``burst_profile``
    multiplies burst sizes cyclically (burst ``k`` uses entry
    ``k % len(profile)``), which is how a within-hour traffic shape is
    expressed. ``offset`` places bursts inside their period; each request is
    shifted by Gaussian jitter truncated to stay within half a period.
    """

    period: float = 60.0
    jitter_sigma: float = 0.0
    apps: tuple = (("/app1", 1),)
    total_span: float = 2 * 86400.0
    rng_seed: int = 0
    start: datetime = DEFAULT_START
    offset: float = 0.0
    burst_profile: tuple = (1,)
    with_duration: bool = True

    def __post_init__(self):
        if self.period <= 0 or self.total_span <= 0:
            raise InvalidParameterError("period and span must be positive")
        if self.jitter_sigma < 0:
            raise InvalidParameterError("jitter must be non-negative")
        if not self.apps:
            raise InvalidParameterError("at least one app is required")
        for app, weight in self.apps:
            if not app or int(weight) != weight or weight <= 0:
                raise InvalidParameterError("app weights must be positive integers")
        if not self.burst_profile or any(int(m) != m or m < 0 for m in self.burst_profile):
            raise InvalidParameterError("burst profile entries must be non-negative integers")
        if not 0 <= self.offset < self.period:
            raise InvalidParameterError("offset must lie in [0, period)")


def _path(app_id: str) -> str:
    return app_id if app_id.startswith("/") else "/" + app_id


def generate_requests(schedule: RequestSchedule) -> list[str]:
    """Emit the schedule as Combined Log Format lines in time order.

    Each app is served from its own client address. A trailing field carries
    a synthetic duration in microseconds unless ``with_duration`` is off.
    """
    rng = np.random.default_rng(schedule.rng_seed)
    n_bursts = int(math.floor(schedule.total_span / schedule.period + 1e-9))
    t0 = as_utc(schedule.start).timestamp()
    bound = schedule.period / 2 - 1e-3
    events = []
    for k in range(n_bursts):
        mult = int(schedule.burst_profile[k % len(schedule.burst_profile)])
        base = t0 + k * schedule.period + schedule.offset
        for app_index, (app, weight) in enumerate(schedule.apps):
            count = int(weight) * mult
            if count == 0:
                continue
            if schedule.jitter_sigma > 0:
                shifts = np.clip(rng.normal(0.0, schedule.jitter_sigma, count), -bound, bound)
            else:
                shifts = np.zeros(count)
            durations = np.round(rng.lognormal(math.log(40_000.0), 1.0, count)).astype(np.int64)
            for shift, dur in zip(shifts.tolist(), durations.tolist()):
                events.append((base + shift, app_index, app, dur))
    # floor to whole seconds first so the sort matches the logged resolution
    events.sort(key=lambda e: (math.floor(e[0]), e[1]))
    lines = []
    for when, app_index, app, dur in events:
        ts = format_log_time(from_epoch(math.floor(when)))
        line = f'10.0.0.{app_index + 2} - - [{ts}] "GET {_path(app)} HTTP/1.1" 200 512 "-" "augury-sim/1.0"'
        if schedule.with_duration:
            line += f" {dur}"
        lines.append(line)
    return lines


_CORRUPTIONS = (
    lambda line: "",
    lambda line: line[: len(line) // 3],
    lambda line: line.replace("[", "<", 1),
    lambda line: line.replace("/Mar/", "/Foo/", 1) if "/Mar/" in line else line.replace("[", "[xx", 1),
    lambda line: line.replace('"GET ', "GET ", 1),
    lambda line: line.replace(" 200 ", " two-hundred ", 1),
)


def corrupt_lines(lines: list[str], fraction: float, seed: int = 0) -> tuple[list[str], list[int]]:
    """Damage ``round(fraction * len(lines))`` lines so a log parser must reject them.

    Returns the new line list and the sorted indices that were damaged.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidParameterError("fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    count = int(round(fraction * len(lines)))
    picked = sorted(rng.choice(len(lines), size=count, replace=False).tolist())
    out = list(lines)
    for i, idx in enumerate(picked):
        out[idx] = _CORRUPTIONS[i % len(_CORRUPTIONS)](out[idx])
    return out, picked
