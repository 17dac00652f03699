"""Command-line entry point: ``augury <subcommand> [options] [inputs]``.

Exit status is 0 on success, 1 for usage errors and 2 for data errors.
Diagnostics go to standard error; data goes to ``--output-dir`` files or,
without one, to standard output.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

import numpy as np

from . import __version__
from .aggregation import (
    accumulated_memory,
    count_executions,
    parse_clock,
    rank_applications,
    runtime_distribution,
)
from .errors import DataError, EmptyInputError, InvalidParameterError, SchemaError
from .forecasting import DEFAULT_ORDER, ArimaOrder, adf_test, compare_forecasts
from .ingestion import (
    IngestReport,
    parse_apache_log,
    parse_timestamp,
    read_metrics_csv,
    read_records_csv,
    read_records_json,
    to_regular_series,
    write_metrics_csv,
    write_records_csv,
)
from .render import (
    Snapshot,
    params_summary_csv,
    patterns_csv,
    ranking_csv,
    render_csv,
    render_svg,
)
from .seasonal import Period, decompose, seasonal_amplitude, seasonal_profile, zoom_profile
from .series import RegularSeries, WeightScheme
from .signal_model import SIGMA_OF_MA, SIGMA_OF_RESIDUAL, DEFAULT_MAX_WINDOW, aggregate_params, analyse_memory
from .workload_sim import PulseSpec, RequestSchedule, corrupt_lines, generate_metrics, generate_requests

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
INPUT_FORMATS = ("auto", "apache", "json", "records-csv", "metrics-csv")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- diagnostics


def _use_color(stream) -> bool:
    if "NO_COLOR" in os.environ:
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def diag(message: str, level: str = "info") -> None:
    color = {"error": "31", "warning": "33", "info": "36"}[level]
    prefix = "augury" if level == "info" else f"augury: {level}"
    if _use_color(sys.stderr):
        prefix = f"\033[{color}m{prefix}\033[0m"
    print(f"{prefix}: {message}", file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        diag(message, "error")
        raise SystemExit(EXIT_USAGE)


# --------------------------------------------------------------------- config


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys may use dashes."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (p.strip() for p in line.split("=", 1))
            if not key:
                raise UsageError(f"{path}:{lineno}: empty key")
            out[key.replace("-", "_")] = value
    return out


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config(sub: argparse.ArgumentParser, config: dict) -> None:
    """Install config values as parser defaults so explicit flags still win."""
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None or key in ("help", "config", "command"):
            raise UsageError(f"unknown config key {key!r} for this subcommand")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            low = value.lower()
            if low not in _TRUE | _FALSE:
                raise UsageError(f"config key {key!r} needs a boolean, got {value!r}")
            defaults[key] = low in _TRUE
            continue
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} is not one of {sorted(action.choices)}")
        if action.type is not None:
            try:
                value = action.type(value)
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        defaults[key] = value
    sub.set_defaults(**defaults)


# --------------------------------------------------------------------- inputs


def _read_source(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read() if hasattr(sys.stdin, "buffer") else sys.stdin.read().encode()
    with open(path, "rb") as fh:
        return fh.read()


def _sniff(data: bytes, path: str) -> str:
    ext = os.path.splitext(path)[1].lower() if path != "-" else ""
    if ext in (".log",):
        return "apache"
    if ext in (".json", ".ndjson", ".jsonl"):
        return "json"
    head = data.lstrip()[:1]
    if head in (b"[", b"{"):
        return "json"
    first = data.split(b"\n", 1)[0].decode("utf-8", "replace").strip().lower()
    cols = [c.strip() for c in first.split(",")]
    if "timestamp" in cols:
        return "records-csv" if "app_id" in cols else "metrics-csv"
    return "apache"


def load_inputs(args):
    """Read every input and return ``(kind, items, report)``; kind is records or metrics."""
    paths = list(args.inputs)
    if args.stdin:
        paths.append("-")
    if not paths:
        raise UsageError("no input given (pass a path, '-' or --stdin)")
    if paths.count("-") > 1:
        raise UsageError("standard input can be read only once")
    kind, items, report = None, [], IngestReport()
    for path in paths:
        data = _read_source(path)
        fmt = args.input_format if args.input_format != "auto" else _sniff(data, path)
        if fmt == "apache":
            got, rep = parse_apache_log(data)
            this = "records"
        elif fmt == "json":
            got, rep = read_records_json(data)
            this = "records"
        elif fmt == "records-csv":
            got, rep = read_records_csv(data)
            this = "records"
        else:
            got, rep = read_metrics_csv(data)
            this = "metrics"
        if kind is not None and this != kind:
            raise UsageError("inputs mix request records and metrics samples")
        kind = this
        items.extend(got)
        report = report.merge(rep)
    if not items:
        raise EmptyInputError("inputs hold no usable rows")
    if kind == "records":
        items.sort(key=lambda r: r.timestamp)
        if getattr(args, "app", None):
            args.app = resolve_app(items, args.app)
    else:
        items.sort(key=lambda s: s.timestamp)
    return kind, items, report


def resolve_app(records, app: str | None) -> str | None:
    """Exact application id, or the unique id whose last path segment is ``app``."""
    if app is None:
        return None
    ids = {r.app_id for r in records}
    if app in ids:
        return app
    hits = sorted(i for i in ids if i.lstrip("/") == app.lstrip("/") or i.rsplit("/", 1)[-1] == app)
    if len(hits) > 1:
        raise UsageError(f"application {app!r} is ambiguous: {', '.join(hits)}")
    return hits[0] if hits else app


def _need(kind, wanted, command):
    if kind != wanted:
        raise UsageError(f"{command} needs {wanted} input, got {kind}")


# -------------------------------------------------------------------- outputs


def _stdout_write(data: bytes) -> None:
    if hasattr(sys.stdout, "buffer"):
        sys.stdout.flush()
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        sys.stdout.write(data.decode("utf-8"))


class Output:
    """Routes named CSV/SVG documents to files or standard output."""

    def __init__(self, args):
        self.fmt = args.format
        self.dir = args.output_dir
        self.width, self.height = args.width, args.height
        if self.fmt == "both" and not self.dir:
            raise UsageError("--format both needs --output-dir")
        if self.dir:
            os.makedirs(self.dir, exist_ok=True)

    @property
    def wants_csv(self):
        return self.fmt in ("csv", "both")

    @property
    def wants_svg(self):
        return self.fmt in ("svg", "both")

    def emit(self, name: str, ext: str, data: bytes, primary: bool = True) -> None:
        """Write ``name.ext``; without an output dir only primary documents reach stdout."""
        if self.dir:
            path = os.path.join(self.dir, f"{name}.{ext}")
            with open(path, "wb") as fh:
                fh.write(data)
            diag(f"wrote {path}")
        elif primary:
            _stdout_write(data)

    def snapshot(self, name: str, snap: Snapshot, extra_csv=()) -> None:
        if self.wants_csv:
            self.emit(name, "csv", render_csv(snap))
            for extra_name, data in extra_csv:
                self.emit(extra_name, "csv", data, primary=False)
        if self.wants_svg:
            self.emit(name, "svg", render_svg(snap, self.width, self.height))


# ----------------------------------------------------------------- commands


def _counts(records, app, window) -> RegularSeries:
    return count_executions(records, app, window)


def _period_for(kind: str, lag: float) -> Period:
    return Period.for_lag(kind, lag)


def _analysis_series(args, kind, items) -> tuple[RegularSeries, str]:
    """Execution counts for records, or one metric on a grid for metrics."""
    if kind == "records":
        label = args.app or "all"
        return _counts(items, args.app, args.window), label
    series, rep = to_regular_series(items, args.metric, args.lag, args.fill)
    if rep.gaps:
        diag(f"{len(rep.gaps)} gap(s) filled with policy {args.fill!r}", "warning")
    return series, args.metric


def cmd_ingest(args, out: Output):
    kind, items, report = load_inputs(args)
    diag(report.summary())
    if out.wants_csv:
        buf = io.StringIO()
        (write_records_csv if kind == "records" else write_metrics_csv)(items, buf)
        out.emit("records" if kind == "records" else "metrics", "csv", buf.getvalue().encode("utf-8"))
    if out.wants_svg:
        if kind == "records":
            ranking = rank_applications(items, args.top)
            payload = {a.app_id: _counts(items, a.app_id, args.window) for a in ranking}
            title = f"Requests per {args.window} min"
        else:
            mem, _ = to_regular_series(items, "mem_percent", args.lag, args.fill)
            cpu, _ = to_regular_series(items, "cpu_percent", args.lag, args.fill)
            payload = {"memory %": mem, "cpu %": cpu}
            title = "Memory and CPU usage"
        out.emit("ingest", "svg", render_svg(Snapshot("trend", title, payload), out.width, out.height))


def cmd_patterns(args, out: Output):
    kind, items, report = load_inputs(args)
    _need(kind, "metrics", "patterns")
    diag(report.summary())
    series, rep = to_regular_series(items, args.metric, args.lag, args.fill)
    if rep.gaps:
        diag(f"{len(rep.gaps)} gap(s) filled with policy {args.fill!r}", "warning")
    weights = WeightScheme.exponential() if args.weights == "exponential" else WeightScheme.uniform()
    analysis = analyse_memory(series, weights, args.max_window, args.sigma_mode)
    diag(f"window N={analysis.window}, {len(analysis.patterns)} pattern(s), {analysis.skipped} skipped")
    if not analysis.params:
        raise EmptyInputError("no signal-like patterns found")
    summary = params_summary_csv(aggregate_params(analysis.params))
    if out.wants_csv:
        out.emit("params_summary", "csv", summary)
        out.emit("patterns", "csv", patterns_csv(analysis), primary=False)
    if out.wants_svg:
        snap = Snapshot("pattern_overlay", f"Detected patterns ({args.metric})", (series, analysis))
        out.emit("patterns", "svg", render_svg(snap, out.width, out.height))


def cmd_decompose(args, out: Output):
    kind, items, report = load_inputs(args)
    diag(report.summary())
    series, label = _analysis_series(args, kind, items)
    dec = decompose(series, _period_for(args.period, series.lag))
    resid = dec.residual.values[~np.isnan(dec.residual.values)]
    rms = float(np.sqrt(np.mean(resid**2))) if resid.size else math.nan
    diag(f"seasonal amplitude {seasonal_amplitude(dec):.6g}, residual RMS {rms:.6g}")
    out.snapshot("decomposition", Snapshot("decomposition_panels", f"Seasonal adjustment of {label}", dec))


def cmd_profile(args, out: Output):
    kind, items, report = load_inputs(args)
    diag(report.summary())
    if args.zoom is not None:
        _need(kind, "records", "profile --zoom")
        if not args.app:
            raise UsageError("--zoom needs --app")
        prof = zoom_profile(items, args.app, args.zoom, args.bin_width)
        snap = Snapshot("zoom_boxplot", f"{args.app} per {args.bin_width} min, hour {args.zoom:02d}", prof)
    else:
        series, label = _analysis_series(args, kind, items)
        prof = seasonal_profile(series, _period_for(args.period, series.lag), detrend=not args.no_detrend)
        snap = Snapshot("seasonal_boxplot", f"{args.period} profile of {label}", prof)
    out.snapshot("profile", snap)


def cmd_trend(args, out: Output):
    kind, items, report = load_inputs(args)
    _need(kind, "records", "trend")
    diag(report.summary())
    ranking = rank_applications(items, args.top)
    top_share = sum(a.share for a in ranking)
    diag(f"top {len(ranking)} application(s) take {100 * top_share:.1f}% of {ranking.total_requests} requests")
    payload = {a.app_id: _counts(items, a.app_id, args.window) for a in ranking}
    snap = Snapshot("trend", f"Executions per {args.window} min, top {len(ranking)}", payload)
    out.snapshot("trend", snap, extra_csv=[("ranking", ranking_csv(ranking))])


def _per_execution_mb(args) -> float:
    if args.per_execution_mb is not None:
        return args.per_execution_mb
    if args.params is None or args.total_memory_mb is None:
        raise UsageError("give --per-execution-mb, or --params with --total-memory-mb")
    with open(args.params, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        if row.get("parameter") == "max_memory":
            try:
                return float(row["mean"]) / 100.0 * args.total_memory_mb
            except (KeyError, ValueError):
                break
    raise SchemaError("max_memory", f"{args.params} has no usable max_memory row")


def cmd_project_memory(args, out: Output):
    kind, items, report = load_inputs(args)
    _need(kind, "records", "project-memory")
    diag(report.summary())
    mb = _per_execution_mb(args)
    proj = accumulated_memory(items, args.app, (parse_clock(args.start), parse_clock(args.end)), mb)
    peak = max(curve[-1][1] for curve in proj.days.values())
    diag(f"{len(proj.days)} day(s), peak accumulation {peak:.6g} MB at {mb:.6g} MB per execution")
    out.snapshot("cumulative", Snapshot("cumulative_memory", f"Accumulated memory of {args.app}", proj))


def cmd_runtimes(args, out: Output):
    kind, items, report = load_inputs(args)
    _need(kind, "records", "runtimes")
    diag(report.summary())
    dist = runtime_distribution(items, args.app)
    if dist.skipped:
        diag(f"{dist.skipped} record(s) without a duration left out", "warning")
    out.snapshot("runtimes", Snapshot("runtime_scatter", f"Run times of {args.app}", dist))


def cmd_forecast(args, out: Output):
    kind, items, report = load_inputs(args)
    diag(report.summary())
    series, label = _analysis_series(args, kind, items)
    if args.component != "observed":
        dec = decompose(series, _period_for(args.period, series.lag))
        series = getattr(dec, args.component)
        label = f"{args.component} of {label}"
    adf = adf_test(_trimmed(series), args.max_lag, args.adf_regression)
    verdict = "stationary (unit root rejected)" if adf.reject_unit_root else "unit root not rejected"
    diag(
        f"ADF statistic {adf.statistic:.4f} with {adf.lags_used} lag(s), "
        f"5% critical value {adf.critical_values[0.05]}: {verdict}"
    )
    cmp = compare_forecasts(series, args.split, args.order)
    diag(f"RMSE ARIMA{(args.order.p, args.order.d, args.order.q)} {cmp.rmse_arima:.6g}, naive {cmp.rmse_naive:.6g}")
    out.snapshot("forecast", Snapshot("forecast_overlay", f"One-step forecasts of {label}", cmp))


def _trimmed(series: RegularSeries) -> RegularSeries:
    ok = np.flatnonzero(~series.missing())
    if ok.size == 0:
        raise EmptyInputError("series has no observed values")
    return series.slice(int(ok[0]), int(ok[-1]) + 1)


def _parse_apps(text: str):
    apps = []
    for part in text.split(","):
        name, _, weight = part.strip().partition(":")
        try:
            apps.append((name, int(weight) if weight else 1))
        except ValueError:
            raise UsageError(f"bad app spec {part!r}; use name[:weight]") from None
    return tuple(apps)


def _parse_profile(text: str):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad burst profile {text!r}; use comma-separated integers") from None


def cmd_simulate(args, out: Output):
    start = parse_timestamp(args.start) if args.start else None
    if args.what == "metrics":
        spec = PulseSpec(
            baseline_percent=args.baseline,
            height_percent=args.pulse_height,
            duration=args.duration,
            period=args.pulse_period,
            noise_sigma=args.noise,
            sample_lag=args.lag,
            total_span=args.days * 86400.0,
            rng_seed=args.seed,
            **({"start": start} if start else {}),
        )
        samples, truth = generate_metrics(spec)
        diag(f"{len(samples)} samples, {len(truth)} complete pulses")
        if out.wants_csv:
            buf = io.StringIO()
            write_metrics_csv(samples, buf)
            out.emit("metrics", "csv", buf.getvalue().encode("utf-8"))
        if out.wants_svg:
            mem, _ = to_regular_series(samples, "mem_percent", args.lag)
            cpu, _ = to_regular_series(samples, "cpu_percent", args.lag)
            snap = Snapshot("trend", "Simulated memory and CPU usage", {"memory %": mem, "cpu %": cpu})
            out.emit("metrics", "svg", render_svg(snap, out.width, out.height))
        return
    sched = RequestSchedule(
        period=args.request_period,
        jitter_sigma=args.jitter,
        apps=_parse_apps(args.apps),
        total_span=args.days * 86400.0,
        rng_seed=args.seed,
        offset=args.offset,
        burst_profile=_parse_profile(args.burst_profile),
        with_duration=not args.no_duration,
        **({"start": start} if start else {}),
    )
    lines = generate_requests(sched)
    if args.corrupt:
        lines, picked = corrupt_lines(lines, args.corrupt, args.seed)
        diag(f"{len(picked)} line(s) corrupted")
    diag(f"{len(lines)} log line(s)")
    text = ("\n".join(lines) + "\n").encode("utf-8")
    if out.wants_csv:
        # the request log is the primary data product of this generator
        out.emit("requests", "log", text)
    if out.wants_svg:
        records, _ = parse_apache_log(text)
        names = sorted({r.app_id for r in records})
        payload = {a: count_executions(records, a, args.window) for a in names[:8]}
        snap = Snapshot("trend", f"Simulated requests per {args.window} min", payload)
        out.emit("requests", "svg", render_svg(snap, out.width, out.height))


# --------------------------------------------------------------------- parser


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a non-negative number, got {text}")
    return v


def _hour(text):
    v = int(text)
    if not 0 <= v <= 23:
        raise argparse.ArgumentTypeError("hour must be in 0..23")
    return v


def _order(text):
    try:
        return ArimaOrder.parse(text)
    except InvalidParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _split(text):
    v = float(text)
    if 0 < v < 1:
        return v
    if v == int(v) and v >= 1:
        return int(v)
    raise argparse.ArgumentTypeError("split is a fraction in (0, 1) or an index >= 1")


def _fraction(text):
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("fraction must lie in [0, 1]")
    return v


def _common(with_inputs=True):
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", metavar="FILE", help="key=value defaults (flags take precedence)")
    g.add_argument("--format", choices=("csv", "svg", "both"), default="csv", help="output kind (default csv)")
    g.add_argument("-o", "--output-dir", metavar="DIR", help="write files here instead of standard output")
    g.add_argument("--width", type=_positive_int, default=800, help="SVG width in px")
    g.add_argument("--height", type=_positive_int, default=400, help="SVG height in px")
    if with_inputs:
        g.add_argument("inputs", nargs="*", metavar="INPUT", help="input files; '-' reads standard input")
        g.add_argument("--stdin", action="store_true", help="read standard input")
        g.add_argument("--input-format", choices=INPUT_FORMATS, default="auto")
    return p


def _series_options(p, window=60, period="daily"):
    p.add_argument("--app", help="application id (default: all requests)")
    p.add_argument("--window", type=_positive_int, default=window, help="count window in minutes")
    p.add_argument("--period", choices=("hourly", "daily", "weekly"), default=period)
    p.add_argument("--metric", default="mem_percent", help="metrics column for metrics input")
    p.add_argument("--lag", type=_positive_float, default=2.0, help="grid spacing (s) for metrics input")
    p.add_argument("--fill", choices=("missing", "previous", "zero"), default="previous")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="augury", description="Monitoring-data analysis: patterns, seasonality, forecasts.")
    parser.add_argument("--version", action="version", version=f"augury {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    common = _common()

    p = subs.add_parser("ingest", parents=[common], help="parse inputs and emit the canonical CSV")
    p.add_argument("--window", type=_positive_int, default=60, help="count window (min) for the SVG")
    p.add_argument("--top", type=_positive_int, default=5, help="apps drawn in the SVG")
    p.add_argument("--lag", type=_positive_float, default=2.0)
    p.add_argument("--fill", choices=("missing", "previous", "zero"), default="previous")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("patterns", parents=[common], help="memory-impulse detection and model parameters")
    p.add_argument("--metric", default="mem_percent")
    p.add_argument("--lag", type=_positive_float, default=2.0)
    p.add_argument("--fill", choices=("missing", "previous", "zero"), default="previous")
    p.add_argument("--weights", choices=("exponential", "uniform"), default="exponential")
    p.add_argument("--max-window", type=_positive_int, default=DEFAULT_MAX_WINDOW)
    p.add_argument("--sigma-mode", choices=(SIGMA_OF_MA, SIGMA_OF_RESIDUAL), default=SIGMA_OF_MA)
    p.set_defaults(func=cmd_patterns)

    p = subs.add_parser("decompose", parents=[common], help="additive seasonal adjustment")
    _series_options(p)
    p.set_defaults(func=cmd_decompose)

    p = subs.add_parser("profile", parents=[common], help="seasonal boxplot profile")
    _series_options(p)
    p.add_argument("--zoom", type=_hour, metavar="HOUR", help="minute-level profile of one clock hour")
    p.add_argument("--bin-width", type=_positive_int, default=1, help="zoom bin width in minutes")
    p.add_argument("--no-detrend", action="store_true", help="profile raw counts instead of deviations")
    p.set_defaults(func=cmd_profile)

    p = subs.add_parser("trend", parents=[common], help="execution trends of the busiest applications")
    p.add_argument("--top", type=_positive_int, default=5)
    p.add_argument("--window", type=_positive_int, default=60)
    p.set_defaults(func=cmd_trend)

    p = subs.add_parser("project-memory", parents=[common], help="worst-case accumulated memory per day")
    p.add_argument("--app", required=True)
    p.add_argument("--start", default="00:00", help="clock window start HH:MM (UTC)")
    p.add_argument("--end", default="23:59:59", help="clock window end HH:MM (UTC)")
    p.add_argument("--per-execution-mb", type=_positive_float)
    p.add_argument("--params", metavar="CSV", help="params summary written by 'patterns'")
    p.add_argument("--total-memory-mb", type=_positive_float, help="machine memory behind the percentages")
    p.set_defaults(func=cmd_project_memory)

    p = subs.add_parser("runtimes", parents=[common], help="run-time distribution of one application")
    p.add_argument("--app", required=True)
    p.set_defaults(func=cmd_runtimes)

    p = subs.add_parser("forecast", parents=[common], help="ADF test and iterative ARIMA vs naive")
    _series_options(p)
    p.add_argument("--component", choices=("residual", "observed", "trend", "seasonal"), default="residual")
    p.add_argument("--order", type=_order, default=ArimaOrder(*DEFAULT_ORDER), metavar="P,D,Q")
    p.add_argument("--split", type=_split, default=0.8, help="fraction or index of the first off-sample point")
    p.add_argument("--max-lag", type=int, default=None, help="largest ADF lag tried")
    p.add_argument("--adf-regression", choices=("none", "constant", "constant_and_trend"), default="constant")
    p.set_defaults(func=cmd_forecast)

    p = subs.add_parser("simulate", parents=[_common(with_inputs=False)], help="synthetic workloads")
    p.add_argument("what", choices=("metrics", "requests"))
    p.add_argument("--days", type=_positive_float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", help="first timestamp (ISO 8601)")
    m = p.add_argument_group("metrics")
    m.add_argument("--baseline", type=_nonneg_float, default=20.0, help="idle memory %%")
    m.add_argument("--pulse-height", type=_positive_float, default=30.0, help="pulse height %%")
    m.add_argument("--duration", type=_positive_float, default=60.0, help="pulse length (s)")
    m.add_argument("--pulse-period", type=_positive_float, default=120.0, help="pulse spacing (s)")
    m.add_argument("--noise", type=_nonneg_float, default=0.5, help="Gaussian noise sigma (%%)")
    m.add_argument("--lag", type=_positive_float, default=2.0, help="sampling interval (s)")
    r = p.add_argument_group("requests")
    r.add_argument("--apps", default="app1", help="name[:burst],... (default app1)")
    r.add_argument("--request-period", type=_positive_float, default=60.0, help="burst spacing (s)")
    r.add_argument("--offset", type=_nonneg_float, default=0.0, help="burst position in its period (s)")
    r.add_argument("--jitter", type=_nonneg_float, default=0.0, help="per-request jitter sigma (s)")
    r.add_argument("--burst-profile", default="1", help="cyclic burst multipliers, e.g. 1,2,3")
    r.add_argument("--corrupt", type=_fraction, default=0.0, help="fraction of lines to damage")
    r.add_argument("--no-duration", action="store_true", help="omit the trailing duration field")
    r.add_argument("--window", type=_positive_int, default=60, help="count window (min) for the SVG")
    p.set_defaults(func=cmd_simulate)
    return parser


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            # find the chosen subcommand to install its defaults
            subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
            chosen = next((a for a in argv if a in subs.choices), None)
            if chosen is None:
                raise UsageError("--config needs a subcommand")
            try:
                config = read_config(known.config)
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from None
            _apply_config(subs.choices[chosen], config)
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        out = Output(args)
        args.func(args, out)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, InvalidParameterError) as exc:
        diag(str(exc), "error")
        return EXIT_USAGE
    except (DataError, OSError, UnicodeError) as exc:
        diag(str(exc), "error")
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())
