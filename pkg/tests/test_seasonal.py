from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augury.errors import EmptySelectionError, InsufficientDataError, InvalidParameterError
from augury.ingestion import RequestRecord
from augury.seasonal import (
    Period,
    box_stats,
    decompose,
    quantile7,
    seasonal_amplitude,
    seasonal_profile,
    zoom_profile,
)
from augury.series import RegularSeries

UTC = timezone.utc
MIDNIGHT = datetime(2017, 3, 12, tzinfo=UTC)
HOURLY_BY_MIN = Period("hourly", 60)


def hourly_series(values, start=MIDNIGHT):
    # one value per hour, daily period of 24 bins
    return RegularSeries(start, 3600.0, values)


def defined(*arrays):
    mask = np.ones(arrays[0].shape, dtype=bool)
    for a in arrays:
        mask &= ~np.isnan(a)
    return mask


class TestPeriod:
    def test_for_lag(self):
        assert Period.for_lag("daily", 3600).bins_per_period == 24
        assert Period.for_lag("hourly", 60).bins_per_period == 60
        assert Period.for_lag("weekly", 3600).bins_per_period == 168

    def test_incommensurate(self):
        with pytest.raises(InvalidParameterError):
            Period.for_lag("hourly", 7 * 60)
        with pytest.raises(InvalidParameterError):
            decompose(hourly_series(np.ones(100)), Period("daily", 12))

    def test_phases_anchor_to_calendar(self):
        s = hourly_series(np.ones(48), MIDNIGHT + timedelta(hours=5))
        assert Period("daily", 24).phases(s)[0] == 5

    def test_weekly_starts_monday(self):
        monday = datetime(2017, 3, 13, tzinfo=UTC)
        s = RegularSeries(monday, 86400.0, np.ones(14))
        assert Period("weekly", 7).phases(s)[0] == 0


class TestDecompose:
    def test_constant(self):
        d = decompose(hourly_series(np.full(72, 4.0)), Period("daily", 24))
        ok = defined(d.trend.values)
        assert np.allclose(d.seasonal.values, 0)
        assert np.allclose(d.trend.values[ok], 4.0)
        assert np.allclose(d.residual.values[ok], 0)

    def test_square_wave_recovered(self):
        wave = np.where(np.arange(24) < 12, 1.0, -1.0)
        d = decompose(hourly_series(np.tile(wave, 5)), Period("daily", 24))
        assert np.allclose(d.seasonal_pattern, wave)
        assert np.nanmax(np.abs(d.residual.values)) < 1e-9

    def test_square_wave_plus_ramp(self):
        a = 0.3
        t = np.arange(24 * 6)
        wave = np.where(t % 24 < 12, 2.0, -2.0)
        d = decompose(hourly_series(wave + a * t), Period("daily", 24))
        ok = defined(d.trend.values)
        assert np.all(np.abs(d.trend.values[ok] - a * t[ok]) <= abs(a) * 24 / 2)
        assert np.nanmax(np.abs(d.residual.values)) < 1e-6

    @pytest.mark.parametrize("p", [24, 7])
    def test_edges_missing(self, p):
        s = RegularSeries(MIDNIGHT, 86400.0 / p, np.random.default_rng(0).normal(size=4 * p))
        d = decompose(s, Period("daily", p))
        h = p // 2
        assert np.isnan(d.trend.values[:h]).all() and np.isnan(d.trend.values[-h:]).all()
        assert np.isnan(d.residual.values[:h]).all() and np.isnan(d.residual.values[-h:]).all()
        assert not np.isnan(d.trend.values[h:-h]).any()

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            decompose(hourly_series(np.ones(47)), Period("daily", 24))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 30), st.integers(2, 6), st.integers(0, 2**31 - 1), st.integers(0, 29))
    def test_invariants(self, p, periods, seed, shift):
        rng = np.random.default_rng(seed)
        n = p * periods + shift
        vals = rng.normal(size=n) * rng.uniform(0.1, 100) + rng.uniform(-1e3, 1e3)
        lag = 3600.0 / p
        s = RegularSeries(MIDNIGHT + timedelta(seconds=lag * shift), lag, vals)
        per = Period("hourly", p)
        d = decompose(s, per)
        ok = defined(d.trend.values, d.residual.values)
        total = d.seasonal.values + d.trend.values + d.residual.values
        scale = np.maximum(np.abs(vals), 1.0)
        assert np.all(np.abs(total[ok] - vals[ok]) <= 1e-9 * scale[ok])
        sv = d.seasonal.values
        assert np.array_equal(sv[p:], sv[:-p])
        assert abs(sv[:p].sum()) <= 1e-9 * p * max(np.abs(sv).max(), 1e-300) + 1e-12

        c = 123.25
        d2 = decompose(s.with_values(vals + c), per)
        assert np.allclose(d2.seasonal.values, sv, atol=1e-9 * np.abs(vals).max())
        assert np.allclose(d2.trend.values[ok], d.trend.values[ok] + c, rtol=1e-9, atol=1e-9)
        assert np.allclose(d2.residual.values[ok], d.residual.values[ok], atol=1e-9 * (np.abs(vals).max() + c))

    def test_amplitude(self):
        wave = np.sin(2 * np.pi * np.arange(24) / 24)
        d = decompose(hourly_series(np.tile(wave, 4)), Period("daily", 24))
        assert seasonal_amplitude(d) == pytest.approx(1.0, abs=1e-9)


def brute_quantile(values, q):
    v = sorted(values)
    h = (len(v) - 1) * q
    lo = int(h)
    frac = h - lo
    return v[lo] if frac == 0 else v[lo] + frac * (v[lo + 1] - v[lo])


class TestBoxStats:
    def test_equal_entries(self):
        b = box_stats(0, [(MIDNIGHT, 5.0)] * 6)
        assert b.median == b.q1 == b.q3 == b.whisker_low == b.whisker_high == 5.0
        assert b.outliers == ()

    def test_hand_example(self):
        entries = [(MIDNIGHT + timedelta(days=i), float(v)) for i, v in enumerate([1, 2, 3, 4, 100])]
        b = box_stats(3, entries)
        assert (b.q1, b.median, b.q3) == (2, 3, 4)
        assert b.whisker_high == 4 and b.whisker_low == 1
        assert [v for _, v in b.outliers] == [100]
        assert b.n_entries == 5

    def test_quantile7(self):
        assert quantile7(np.array([1.0, 2.0, 3.0, 4.0]), 0.25) == pytest.approx(1.75)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60))
    def test_invariants(self, values):
        entries = [(MIDNIGHT + timedelta(hours=i), v) for i, v in enumerate(values)]
        b = box_stats(0, entries)
        assert b.q1 <= b.median <= b.q3
        for q, got in ((0.25, b.q1), (0.5, b.median), (0.75, b.q3)):
            assert got == pytest.approx(brute_quantile(values, q), rel=1e-12, abs=1e-9)
        iqr = b.q3 - b.q1
        inside = [v for v in values if b.q1 - 1.5 * iqr <= v <= b.q3 + 1.5 * iqr]
        assert b.whisker_low == min(inside) and b.whisker_high == max(inside)
        outside = sorted(v for v in values if v not in inside)
        assert sorted(v for _, v in b.outliers) == outside


class TestProfile:
    def test_bins_and_entries(self):
        rng = np.random.default_rng(1)
        s = hourly_series(rng.poisson(50, size=24 * 7).astype(float))
        prof = seasonal_profile(s, Period("daily", 24), detrend=False)
        assert len(prof) == 24
        assert all(b.n_entries == 7 for b in prof.bins)

    def test_detrended_entries_drop_edges(self):
        s = hourly_series(np.arange(24 * 4, dtype=float))
        prof = seasonal_profile(s, Period("daily", 24), detrend=True)
        assert sum(b.n_entries for b in prof.bins) == 24 * 4 - 24
        assert all(abs(b.median) < 1e-9 for b in prof.bins)


def _rec(ts, app="/app5"):
    return RequestRecord(ts, app, "10.0.0.2")


class TestZoom:
    def test_counting_oracle(self):
        k = 3
        recs = [
            _rec(MIDNIGHT + timedelta(days=d, hours=22, minutes=4, seconds=s))
            for d in range(7)
            for s in range(k)
        ]
        prof = zoom_profile(recs, "/app5", 22, 1)
        assert len(prof) == 60
        for b in prof.bins:
            assert b.n_entries == 7
            assert b.median == (k if b.bin_index == 4 else 0)

    def test_quiet_hour(self):
        recs = [_rec(MIDNIGHT + timedelta(days=d, hours=3)) for d in range(3)]
        prof = zoom_profile(recs, "/app5", 22, 5)
        assert len(prof) == 12 and all(b.median == 0 for b in prof.bins)

    def test_no_records(self):
        with pytest.raises(EmptySelectionError):
            zoom_profile([_rec(MIDNIGHT)], "/other", 1)

    @pytest.mark.parametrize("width", [7, 0])
    def test_bad_width(self, width):
        with pytest.raises(InvalidParameterError):
            zoom_profile([_rec(MIDNIGHT)], "/app5", 1, width)
