"""Unit-root testing and one-step ARIMA forecasting.

The augmented Dickey-Fuller regression is solved by ordinary least squares
with AIC lag selection. ARIMA models are estimated by conditional sum of
squares: innovations before the first fully observed lag are taken as zero
and the remaining squared innovations are minimised with a trust-region
least-squares solver from zero coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np
from scipy.optimize import least_squares

from . import kernels
from .errors import (
    AuguryError,
    ConvergenceError,
    DegenerateInputError,
    EmptyInputError,
    InsufficientDataError,
    InvalidParameterError,
)
from .series import RegularSeries

# Large-sample Dickey-Fuller critical values for the t-ratio at 1/5/10 %.
CRITICAL_VALUES = {
    "none": {0.01: -2.58, 0.05: -1.95, 0.10: -1.62},
    "constant": {0.01: -3.43, 0.05: -2.86, 0.10: -2.57},
    "constant_and_trend": {0.01: -3.96, 0.05: -3.41, 0.10: -3.12},
}
_KIND_ALIASES = {"n": "none", "c": "constant", "ct": "constant_and_trend"}
DECISION_LEVEL = 0.05
MAX_ARMA_ORDER = 5
DEFAULT_ORDER = (1, 1, 1)
FORECAST_CSV_HEADER = ("timestamp", "actual", "forecast_arima", "forecast_naive")

# relative residual size below which a regression counts as an exact fit
_EXACT_FIT = 1e-20


def _values_without_gaps(series: RegularSeries) -> np.ndarray:
    """Observed values with missing edges dropped; interior gaps are an error."""
    ok = np.flatnonzero(~series.missing())
    if ok.size == 0:
        raise InsufficientDataError("series has no observed values")
    vals = series.values[ok[0] : ok[-1] + 1]
    if np.isnan(vals).any():
        raise InvalidParameterError("series has missing values inside its observed range")
    return np.array(vals)


# --------------------------------------------------------------------------- OLS


@dataclass(frozen=True)
class OLSResult:
    coef: np.ndarray
    stderr: np.ndarray
    ssr: float
    nobs: int

    @property
    def sigma2(self) -> float:
        return self.ssr / (self.nobs - self.coef.size)


def ols(X: np.ndarray, y: np.ndarray, rcond: float = 1e-10) -> OLSResult:
    """Least squares via QR, with classical standard errors.

    Raises DegenerateInputError when ``X`` is rank deficient.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    if n <= k:
        raise InsufficientDataError(f"{n} observations for {k} regressors")
    # scale columns so the rank test does not depend on units
    scale = np.sqrt((X * X).sum(axis=0))
    if np.any(scale == 0):
        raise DegenerateInputError("regression has an all-zero column")
    q, r = np.linalg.qr(X / scale)
    diag = np.abs(np.diag(r))
    if diag.min() <= rcond * diag.max():
        raise DegenerateInputError("regression design is rank deficient")
    beta = np.linalg.solve(r, q.T @ y) / scale
    resid = y - X @ beta
    ssr = float(resid @ resid)
    rinv = np.linalg.solve(r, np.eye(k))
    cov_unit = (rinv @ rinv.T) / np.outer(scale, scale)
    sigma2 = ssr / (n - k)
    stderr = np.sqrt(np.maximum(np.diag(cov_unit) * sigma2, 0.0))
    return OLSResult(beta, stderr, ssr, n)


# --------------------------------------------------------------------------- ADF


@dataclass(frozen=True)
class ADFCoefficients:
    alpha: float | None
    trend: float | None
    gamma: float
    deltas: tuple


@dataclass(frozen=True)
class ADFResult:
    statistic: float
    lags_used: int
    regression_kind: str
    reject_unit_root: bool
    coefficients: ADFCoefficients
    critical_values: dict
    nobs: int


def _regression_kind(kind: str) -> str:
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in CRITICAL_VALUES:
        raise InvalidParameterError(f"unknown regression kind {kind!r}")
    return kind


def _adf_design(y: np.ndarray, lags: int, first_row: int, kind: str):
    """Rows ``first_row..`` of the differenced-series regression.

    Row ``j`` explains ``dy[j] = y[j+1] - y[j]`` by the deterministic terms,
    the level ``y[j]`` and ``dy[j-1] .. dy[j-lags]``.
    """
    dy = np.diff(y)
    rows = np.arange(first_row, dy.size)
    cols = []
    if kind != "none":
        cols.append(np.ones(rows.size))
    if kind == "constant_and_trend":
        cols.append((rows + 1).astype(np.float64))
    cols.append(y[rows])
    for i in range(1, lags + 1):
        cols.append(dy[rows - i])
    return np.column_stack(cols), dy[rows]


def adf_test(series: RegularSeries, max_lag: int | None = None, regression_kind: str = "constant") -> ADFResult:
    """Augmented Dickey-Fuller test of a unit root in ``series``.

    The lag order is chosen by AIC over ``0..max_lag`` on a common sample,
    then the chosen regression is refitted on all usable rows. The
    statistic is the t-ratio of the lagged-level coefficient; the unit root
    is rejected when it falls below the 5 % critical value.

    Parameters
    ----------
    max_lag : int, optional
        Defaults to ``floor(12 * (n / 100) ** 0.25)``, capped so the
        regression keeps at least ten observations.
    regression_kind : {"none", "constant", "constant_and_trend"}
    """
    kind = _regression_kind(regression_kind)
    y = _values_without_gaps(series)
    n = y.size
    if max_lag is None:
        max_lag = int(math.floor(12 * (n / 100.0) ** 0.25))
        max_lag = max(0, min(max_lag, n - 10))
    if int(max_lag) != max_lag or max_lag < 0:
        raise InvalidParameterError("max_lag must be a non-negative integer")
    if n < max_lag + 10:
        raise InsufficientDataError(f"need at least {max_lag + 10} values, got {n}")

    best_lag, best_aic = None, np.inf
    for lag in range(max_lag + 1):
        X, target = _adf_design(y, lag, max_lag, kind)
        if target.size <= X.shape[1]:
            continue
        try:
            fit = ols(X, target)
        except DegenerateInputError:
            continue
        aic = -np.inf if fit.ssr <= 0 else fit.nobs * math.log(fit.ssr / fit.nobs) + 2 * X.shape[1]
        if best_lag is None or aic < best_aic:
            best_lag, best_aic = lag, aic
    if best_lag is None:
        raise DegenerateInputError("no lag order gives a full-rank regression")

    X, target = _adf_design(y, best_lag, best_lag, kind)
    fit = ols(X, target)
    g = int(kind != "none") + int(kind == "constant_and_trend")
    gamma, se = float(fit.coef[g]), float(fit.stderr[g])
    if fit.ssr <= _EXACT_FIT * max(1.0, float(target @ target)):
        # exact fit: the t-ratio is 0/0 or x/0
        stat = 0.0 if abs(gamma) < 1e-8 else math.copysign(math.inf, gamma)
    else:
        stat = gamma / se
    crit = dict(CRITICAL_VALUES[kind])
    coefs = ADFCoefficients(
        float(fit.coef[0]) if kind != "none" else None,
        float(fit.coef[1]) if kind == "constant_and_trend" else None,
        gamma,
        tuple(float(c) for c in fit.coef[g + 1 :]),
    )
    return ADFResult(stat, best_lag, kind, bool(stat < crit[DECISION_LEVEL]), coefs, crit, fit.nobs)


# ------------------------------------------------------------------------- ARIMA


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        for name in ("p", "d", "q"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidParameterError(f"{name} must be a non-negative integer")
        if self.p > MAX_ARMA_ORDER or self.q > MAX_ARMA_ORDER:
            raise InvalidParameterError(f"p and q are limited to {MAX_ARMA_ORDER}")
        if self.p + self.q < 1 and self.d < 1:
            raise InvalidParameterError("order needs p + q >= 1 or d >= 1")

    @classmethod
    def parse(cls, text: str) -> ArimaOrder:
        """``"p,d,q"`` to an order."""
        parts = text.replace(" ", "").split(",")
        if len(parts) != 3:
            raise InvalidParameterError(f"order must look like p,d,q, got {text!r}")
        try:
            return cls(*(int(x) for x in parts))
        except ValueError as exc:
            raise InvalidParameterError(f"order must look like p,d,q, got {text!r}") from exc

    @property
    def has_intercept(self) -> bool:
        return self.d == 0

    @property
    def n_params(self) -> int:
        return self.p + self.q + int(self.has_intercept)

    def min_length(self) -> int:
        """Values needed after differencing."""
        return 10 * (self.p + self.q + 1)


def _as_order(order) -> ArimaOrder:
    return order if isinstance(order, ArimaOrder) else ArimaOrder(*order)


@dataclass(frozen=True)
class ArimaModel:
    order: ArimaOrder
    ar_coeffs: tuple
    ma_coeffs: tuple
    intercept: float
    residual_variance: float
    stderr: tuple = ()  # intercept (if any), AR, MA
    stationary: bool = True
    invertible: bool = True
    nobs: int = 0
    flags: tuple = field(default=())


def _unpack(x: np.ndarray, order: ArimaOrder):
    k = int(order.has_intercept)
    c = float(x[0]) if k else 0.0
    return c, x[k : k + order.p], x[k + order.p :]


def _innovations(w: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray, m: int) -> np.ndarray:
    """Conditional innovations for ``t >= m``; earlier ones are zero."""
    u = w[m:] - c
    for i, ph in enumerate(phi, start=1):
        u = u - ph * w[m - i : w.size - i]
    return kernels.arma_innovations(u, theta)


def _shift(a: np.ndarray, j: int) -> np.ndarray:
    out = np.zeros_like(a)
    out[j:] = a[: a.size - j]
    return out


def _roots_inside(poly_tail: np.ndarray) -> bool:
    """True when all roots of ``z^k + a1 z^(k-1) + ... + ak`` lie inside the unit circle."""
    if poly_tail.size == 0:
        return True
    return bool(np.all(np.abs(np.roots(np.r_[1.0, poly_tail])) < 1.0))


def fit_arima(series: RegularSeries, order, max_nfev: int | None = None) -> ArimaModel:
    """Conditional-sum-of-squares ARIMA fit.

    The series is differenced ``d`` times; an intercept is estimated only
    when ``d == 0``. Explosive AR or non-invertible MA estimates are
    returned with ``stationary``/``invertible`` cleared and a note in
    ``flags`` rather than rejected.
    """
    order = _as_order(order)
    y = _values_without_gaps(series) if isinstance(series, RegularSeries) else np.asarray(series, float)
    w = np.diff(y, n=order.d) if order.d else y
    if w.size < order.min_length():
        raise InsufficientDataError(
            f"ARIMA{(order.p, order.d, order.q)} needs {order.min_length()} values after differencing, got {w.size}"
        )
    m = max(order.p, order.q)
    k = order.n_params
    if k == 0:
        e = w
        return ArimaModel(order, (), (), 0.0, float(e @ e / e.size), (), nobs=int(e.size))

    def resid(x):
        c, phi, theta = _unpack(x, order)
        e = _innovations(w, c, phi, theta, m)
        return np.nan_to_num(e, nan=1e100, posinf=1e100, neginf=-1e100)

    def jac(x):
        c, phi, theta = _unpack(x, order)
        e = _innovations(w, c, phi, theta, m)
        cols = []
        if order.has_intercept:
            cols.append(kernels.arma_innovations(-np.ones(e.size), theta))
        for i in range(1, order.p + 1):
            cols.append(kernels.arma_innovations(-w[m - i : w.size - i], theta))
        for j in range(1, order.q + 1):
            cols.append(kernels.arma_innovations(-_shift(e, j), theta))
        J = np.column_stack(cols)
        return np.nan_to_num(J, nan=1e100, posinf=1e100, neginf=-1e100)

    budget = max_nfev if max_nfev is not None else 100 * (k + 1)
    sol = least_squares(resid, np.zeros(k), jac=jac, method="trf", max_nfev=budget)
    if sol.status == 0:
        raise ConvergenceError(f"ARIMA fit did not converge in {budget} evaluations", last_iterate=sol.x.copy())
    if sol.status < 0:
        raise ConvergenceError(f"ARIMA fit failed: {sol.message}", last_iterate=sol.x.copy())

    c, phi, theta = _unpack(sol.x, order)
    e = _innovations(w, c, phi, theta, m)
    css = float(e @ e)
    n_eff = int(e.size)
    J = jac(sol.x)
    dof = max(n_eff - k, 1)
    try:
        cov = np.linalg.inv(J.T @ J) * (css / dof)
        stderr = tuple(float(s) for s in np.sqrt(np.maximum(np.diag(cov), 0.0)))
    except np.linalg.LinAlgError:
        stderr = tuple(math.nan for _ in range(k))

    stationary = _roots_inside(-np.asarray(phi))
    invertible = _roots_inside(np.asarray(theta))
    flags = []
    if not stationary:
        flags.append("explosive-ar")
    if not invertible:
        flags.append("non-invertible-ma")
    return ArimaModel(
        order,
        tuple(float(v) for v in phi),
        tuple(float(v) for v in theta),
        c,
        css / n_eff,
        stderr,
        stationary,
        invertible,
        n_eff,
        tuple(flags),
    )


def arima_forecast_one(model: ArimaModel, history) -> float:
    """One-step-ahead forecast of the value following ``history``."""
    y = history.values if isinstance(history, RegularSeries) else np.asarray(history, dtype=np.float64)
    order = model.order
    w = np.diff(y, n=order.d) if order.d else y
    m = max(order.p, order.q)
    if w.size < m + 1:
        raise InsufficientDataError("history too short for the model order")
    phi = np.asarray(model.ar_coeffs)
    theta = np.asarray(model.ma_coeffs)
    nxt = model.intercept
    for i, ph in enumerate(phi, start=1):
        nxt += ph * w[-i]
    if theta.size:
        e = _innovations(w, model.intercept, phi, theta, m)
        for j, th in enumerate(theta, start=1):
            if j <= e.size:
                nxt += th * e[-j]
    # undo the differencing: y_next = w_next + sum_k (-1)^(k+1) C(d,k) y[-k]
    for kk in range(1, order.d + 1):
        nxt += (-1) ** (kk + 1) * math.comb(order.d, kk) * y[-kk]
    return float(nxt)


def _check_split(series: RegularSeries, split: int) -> None:
    if int(split) != split or not 1 <= split < len(series):
        raise InvalidParameterError(f"split must lie in [1, {len(series) - 1}], got {split}")


def resolve_split(series: RegularSeries, split) -> int:
    """A fraction in (0, 1) becomes ``floor(fraction * len)``; integers pass through."""
    if isinstance(split, float) and 0.0 < split < 1.0:
        return int(math.floor(split * len(series)))
    return int(split)


def naive_forecast(series: RegularSeries, split: int) -> RegularSeries:
    """Random-walk forecast: each off-sample value predicted by its predecessor."""
    _check_split(series, split)
    return RegularSeries(series.time_at(split), series.lag, series.values[split - 1 : -1])


def iterative_forecast(series: RegularSeries, split: int, order=DEFAULT_ORDER, max_nfev: int | None = None):
    """Refit-every-step one-step ARIMA forecasts over ``split..len-1``.

    Each step fits on all values before the target index, forecasts it, and
    then admits the true value. Returns the forecast series and the list of
    fitted models. Fit errors carry the failing index in ``step``.
    """
    order = _as_order(order)
    _check_split(series, split)
    vals = series.values
    if np.isnan(vals).any():
        raise InvalidParameterError("iterative forecasting needs a series without missing values")
    if split - order.d < order.min_length():
        raise InsufficientDataError(
            f"split {split} leaves fewer than {order.min_length()} values to fit after differencing"
        )
    out = np.empty(len(series) - split)
    models = []
    for t in range(split, len(series)):
        try:
            model = fit_arima(vals[:t], order, max_nfev)
        except AuguryError as exc:
            exc.step = t
            raise
        models.append(model)
        out[t - split] = arima_forecast_one(model, vals[:t])
    return RegularSeries(series.time_at(split), series.lag, out), models


def forecast_rmse(truth: RegularSeries, forecast: RegularSeries) -> float:
    """Root mean squared error over the time overlap of two aligned series."""
    if truth.lag != forecast.lag:
        raise InvalidParameterError("series must share the lag")
    shift = (forecast.start_epoch - truth.start_epoch) / truth.lag
    if abs(shift - round(shift)) > 1e-9:
        raise InvalidParameterError("series are not aligned to a common grid")
    shift = int(round(shift))
    lo = max(0, shift)
    hi = min(len(truth), shift + len(forecast))
    if hi <= lo:
        raise EmptyInputError("series do not overlap")
    a = truth.values[lo:hi]
    b = forecast.values[lo - shift : hi - shift]
    if np.isnan(a).any() or np.isnan(b).any():
        raise InvalidParameterError("missing values inside the overlap")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class ForecastComparison:
    actual: RegularSeries
    arima: RegularSeries
    naive: RegularSeries
    models: list
    rmse_arima: float
    rmse_naive: float

    def rows(self):
        """``(timestamp, actual, arima, naive)`` per off-sample point."""
        for i in range(len(self.actual)):
            t: datetime = self.actual.time_at(i)
            yield t, float(self.actual.values[i]), float(self.arima.values[i]), float(self.naive.values[i])


def compare_forecasts(series: RegularSeries, split, order=DEFAULT_ORDER, max_nfev: int | None = None) -> ForecastComparison:
    """Iterative ARIMA against the naive forecast on the off-sample range.

    Missing edges (from moving-average components) are trimmed first; a
    fractional ``split`` refers to the trimmed series.
    """
    ok = np.flatnonzero(~series.missing())
    if ok.size == 0:
        raise InsufficientDataError("series has no observed values")
    series = series.slice(int(ok[0]), int(ok[-1]) + 1)
    split = resolve_split(series, split)
    arima, models = iterative_forecast(series, split, order, max_nfev)
    naive = naive_forecast(series, split)
    actual = series.slice(split)
    return ForecastComparison(
        actual, arima, naive, models, forecast_rmse(actual, arima), forecast_rmse(actual, naive)
    )
