"""Memory-usage impulse detection and the three-parameter application model.

The differenced memory series turns each step up into a spike and each step
down into a dip. Points further than five standard deviations of the moving
average from the moving average are significant; isolated maxima and minima
are then paired into impulses, from which ``beta`` (the first rise),
``max_memory`` (peak above the pre-rise level) and ``run_time`` are read.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from . import kernels
from .errors import EmptyInputError, InsufficientDataError, InvalidParameterError
from .series import RegularSeries, WeightScheme, difference

BAND_SIGMAS = 5.0
ISOLATION_LAGS = 3
DEFAULT_MAX_WINDOW = 256

SIGMA_OF_MA = "ma"
SIGMA_OF_RESIDUAL = "residual"


@dataclass(frozen=True)
class Deviation:
    index: int
    kind: str  # "maximum" or "minimum"
    magnitude: float


@dataclass(frozen=True)
class SignalPattern:
    start_index: int
    end_index: int
    start_time: datetime | None = None
    end_time: datetime | None = None

    def __post_init__(self):
        if not self.start_index < self.end_index:
            raise InvalidParameterError("a pattern must end after it starts")


@dataclass(frozen=True)
class ModelParams:
    """``beta`` and ``max_memory`` in memory percent, ``run_time`` in seconds."""

    beta: float
    max_memory: float
    run_time: float

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameterError(f"beta must be positive, got {self.beta}")
        if self.max_memory < self.beta:
            raise InvalidParameterError("max_memory must be at least beta")
        if not self.run_time > 0:
            raise InvalidParameterError("run_time must be positive")


@dataclass(frozen=True)
class WindowCandidate:
    window: int
    sigma: float
    n_outside: int
    discriminant: float


@dataclass(frozen=True)
class ParamStats:
    mean: float
    std: float
    median: float


@dataclass(frozen=True)
class ParamsSummary:
    count: int
    beta: ParamStats
    max_memory: ParamStats
    run_time: ParamStats

    def rows(self):
        for name in ("beta", "max_memory", "run_time"):
            st = getattr(self, name)
            yield name, st.mean, st.std, st.median


def _band_sigma(values: np.ndarray, ma: np.ndarray, mode: str) -> float:
    if mode == SIGMA_OF_MA:
        sample = ma[~np.isnan(ma)]
    elif mode == SIGMA_OF_RESIDUAL:
        resid = values - ma
        sample = resid[~np.isnan(resid)]
    else:
        raise InvalidParameterError(f"unknown sigma mode {mode!r}")
    if sample.size < 2:
        return 0.0
    return float(np.std(sample, ddof=1))


def band(diff: RegularSeries, n: int, weights: WeightScheme, sigma_mode: str = SIGMA_OF_MA):
    """Trailing MA of ``diff`` over ``n`` lags and the scalar band sigma."""
    if int(n) != n or n < 2 or n > len(diff):
        raise InvalidParameterError(f"window N={n} must satisfy 2 <= N <= {len(diff)}")
    ma = kernels.trailing_ma(diff.values, n, weights.decay_for(n))
    return ma, _band_sigma(diff.values, ma, sigma_mode)


def optimize_window(
    diff: RegularSeries,
    candidate_range=None,
    weights: WeightScheme | None = None,
    sigma_mode: str = SIGMA_OF_MA,
    require_detections: bool = False,
) -> tuple[int, list[WindowCandidate]]:
    """Choose the MA window that jointly minimises band width and hit count.

    For every candidate ``i`` the discriminant is
    ``n_outside(i) / max(n_outside) + sigma(i) / max(sigma)``; a term whose
    maximum is zero contributes nothing. The smallest window wins ties.

    Parameters
    ----------
    diff : RegularSeries
        Differenced memory series.
    candidate_range : iterable of int or (lo, hi) tuple, optional
        Windows to try; a tuple is inclusive. Defaults to ``2..min(len, 256)``.
    weights : WeightScheme, optional
        Defaults to exponential weights with span-matched decay.
    require_detections : bool
        Only consider windows that flag at least one point, unless none do.
        On nearly noise-free input the narrowest band can be wide enough to
        flag nothing, which makes it the trivial minimiser.

    Returns
    -------
    best : int
    table : list of WindowCandidate
        One row per candidate, in ascending window order.
    """
    weights = weights or WeightScheme.exponential()
    if np.count_nonzero(~diff.missing()) < 3:
        raise InsufficientDataError("need at least three non-missing differences")
    if candidate_range is None:
        candidates = range(2, min(len(diff), DEFAULT_MAX_WINDOW) + 1)
    elif isinstance(candidate_range, tuple) and len(candidate_range) == 2:
        candidates = range(candidate_range[0], candidate_range[1] + 1)
    else:
        candidates = candidate_range
    candidates = sorted(int(c) for c in candidates)
    if not candidates:
        raise InvalidParameterError("empty candidate range")

    sigmas = np.empty(len(candidates))
    counts = np.empty(len(candidates))
    for k, n in enumerate(candidates):
        ma, sigma = band(diff, n, weights, sigma_mode)
        above, below = kernels.count_outside_band(diff.values, ma, BAND_SIGMAS * sigma)
        sigmas[k] = sigma
        counts[k] = above + below

    score = np.zeros(len(candidates))
    if counts.max() > 0:
        score += counts / counts.max()
    if sigmas.max() > 0:
        score += sigmas / sigmas.max()
    pool = score
    if require_detections and counts.max() > 0:
        pool = np.where(counts > 0, score, np.inf)
    best = int(np.argmin(pool))
    table = [
        WindowCandidate(n, float(s), int(c), float(d))
        for n, s, c, d in zip(candidates, sigmas, counts, score)
    ]
    return candidates[best], table


def significant_deviations(
    diff: RegularSeries,
    n: int,
    weights: WeightScheme | None = None,
    sigma_mode: str = SIGMA_OF_MA,
) -> list[Deviation]:
    """Points of ``diff`` outside ``MA +- 5 sigma`` for a trailing MA of ``n`` lags."""
    weights = weights or WeightScheme.exponential()
    ma, sigma = band(diff, n, weights, sigma_mode)
    vals = diff.values
    ok = ~(np.isnan(vals) | np.isnan(ma))
    width = BAND_SIGMAS * sigma
    upper = ok & (vals > ma + width)
    lower = ok & (vals < ma - width)
    out = [Deviation(int(i), "maximum", float(vals[i])) for i in np.flatnonzero(upper)]
    out += [Deviation(int(i), "minimum", float(vals[i])) for i in np.flatnonzero(lower)]
    out.sort(key=lambda d: d.index)
    return out


def isolated_extrema(deviations: list[Deviation], isolation: int = ISOLATION_LAGS):
    """Split deviations into backwards-isolated maxima and forwards-isolated minima.

    A maximum is kept when no other maximum lies in the ``isolation`` lags
    before it; a minimum when no other minimum lies in the ``isolation`` lags
    after it.
    """
    maxima = [d.index for d in deviations if d.kind == "maximum"]
    minima = [d.index for d in deviations if d.kind == "minimum"]
    back = [m for i, m in enumerate(maxima) if i == 0 or m - maxima[i - 1] > isolation]
    fwd = [m for i, m in enumerate(minima) if i == len(minima) - 1 or minima[i + 1] - m > isolation]
    return back, fwd


def find_patterns(
    series: RegularSeries,
    diff: RegularSeries,
    deviations: list[Deviation],
    isolation: int = ISOLATION_LAGS,
) -> list[SignalPattern]:
    """Pair isolated extrema into signal-like patterns.

    The window is cut at each forwards-isolated minimum; the segment ending at
    a minimum (starting after the previous one, or at the window start) yields
    a pattern when it holds a backwards-isolated maximum, pairing the first
    such maximum with that minimum.
    """
    if not series.same_grid(diff):
        raise InvalidParameterError("series and its difference must share indexing")
    back, fwd = isolated_extrema(deviations, isolation)
    patterns = []
    j = 0
    prev_end = -1
    for end in fwd:
        while j < len(back) and back[j] <= prev_end:
            j += 1
        if j < len(back) and back[j] < end:
            start = back[j]
            patterns.append(SignalPattern(start, end, series.time_at(start), series.time_at(end)))
        prev_end = end
    return patterns


def extract_parameters(
    pattern: SignalPattern,
    series: RegularSeries,
    diff: RegularSeries,
    baseline: float | None = None,
) -> ModelParams:
    """Read ``(beta, max_memory, run_time)`` off one pattern.

    ``baseline`` defaults to the series value just before the rise.
    """
    s, e = pattern.start_index, pattern.end_index
    if s < 0 or e >= len(series) or e >= len(diff):
        raise InvalidParameterError("pattern indices fall outside the series")
    if baseline is None:
        if s < 1:
            raise InvalidParameterError("pattern starts at index 0; no pre-rise baseline")
        baseline = float(series.values[s - 1])
    beta = float(diff.values[s])
    peak = float(np.nanmax(series.values[s : e + 1]))
    if np.isnan(beta) or np.isnan(baseline):
        raise InvalidParameterError("pattern rise or baseline is missing")
    return ModelParams(beta, peak - baseline, (e - s) * series.lag)


def _stats(values) -> ParamStats:
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return ParamStats(float(np.mean(arr)), std, float(np.median(arr)))


def aggregate_params(params: list[ModelParams]) -> ParamsSummary:
    """Per-parameter mean, sample standard deviation and median."""
    if not params:
        raise EmptyInputError("no model parameters to aggregate")
    return ParamsSummary(
        len(params),
        _stats([p.beta for p in params]),
        _stats([p.max_memory for p in params]),
        _stats([p.run_time for p in params]),
    )


@dataclass(frozen=True)
class PatternAnalysis:
    window: int
    candidates: list
    deviations: list
    patterns: list
    params: list
    skipped: int
    diff: RegularSeries


def analyse_memory(
    series: RegularSeries,
    weights: WeightScheme | None = None,
    max_window: int = DEFAULT_MAX_WINDOW,
    sigma_mode: str = SIGMA_OF_MA,
    isolation: int = ISOLATION_LAGS,
) -> PatternAnalysis:
    """Run the whole chain: difference, window search, detection, extraction.

    Patterns whose parameters violate the model invariants (for instance a
    non-positive rise) are dropped and counted in ``skipped``.
    """
    weights = weights or WeightScheme.exponential()
    diff = difference(series)
    hi = min(len(diff), max_window)
    window, table = optimize_window(diff, (2, hi), weights, sigma_mode, require_detections=True)
    devs = significant_deviations(diff, window, weights, sigma_mode)
    patterns = find_patterns(series, diff, devs, isolation)
    params, kept, skipped = [], [], 0
    for pat in patterns:
        try:
            params.append(extract_parameters(pat, series, diff))
            kept.append(pat)
        except InvalidParameterError:
            skipped += 1
    return PatternAnalysis(window, table, devs, kept, params, skipped, diff)


def default_trigger_threshold(cpu: RegularSeries) -> float:
    """Five sample standard deviations of the CPU first differences."""
    d = np.diff(cpu.values)
    d = d[~np.isnan(d)]
    if d.size < 2:
        raise InsufficientDataError("need at least two CPU differences")
    return BAND_SIGMAS * float(np.std(d, ddof=1))


def predict_with_trigger(
    series: RegularSeries,
    cpu: RegularSeries,
    params: ModelParams,
    cpu_jump_threshold: float | None = None,
) -> RegularSeries:
    """One-step memory prediction: naive, except while the impulse model runs.

    A CPU jump above the threshold at ``t0`` hands control to the model:
    the prediction is ``base + beta`` at ``t0`` and ``base + max_memory`` for
    the following ``run_time / lag`` steps, ``base`` being the memory value
    just before ``t0``. A new trigger during a takeover restarts its clock
    (the baseline is kept).
    """
    if not series.same_grid(cpu):
        raise InvalidParameterError("memory and CPU series must share indexing")
    if cpu_jump_threshold is None:
        cpu_jump_threshold = default_trigger_threshold(cpu)
    if not cpu_jump_threshold > 0:
        raise InvalidParameterError("trigger threshold must be positive")

    y = series.values
    jumps = np.empty(len(cpu))
    jumps[0] = np.nan
    jumps[1:] = np.diff(cpu.values)
    run_lags = int(round(params.run_time / series.lag))

    pred = np.full(len(y), np.nan)
    remaining = 0  # plateau steps left in the current takeover
    base = np.nan
    for t in range(1, len(y)):
        fired = jumps[t] > cpu_jump_threshold
        if fired and remaining > 0:
            remaining = run_lags
            pred[t] = base + params.max_memory
        elif fired and not np.isnan(y[t - 1]):
            base = y[t - 1]
            remaining = run_lags
            pred[t] = base + params.beta
        elif remaining > 0:
            pred[t] = base + params.max_memory
            remaining -= 1
        else:
            pred[t] = y[t - 1]
    return series.with_values(pred)
