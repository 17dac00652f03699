import math
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from augury.errors import InsufficientDataError, InvalidParameterError
from augury.series import (
    RegularSeries,
    WeightScheme,
    centered_filter,
    difference,
    ewma,
    moving_average,
    series_sigma,
    trim_missing,
)

from conftest import T0, make_series

finite = st.floats(-1e6, 1e6, allow_nan=False)


def brute_trailing(values, n, decay):
    # direct weighted mean, most recent weight 1
    out = np.full(len(values), np.nan)
    w = decay ** np.arange(n)
    for t in range(n - 1, len(values)):
        window = values[t - n + 1 : t + 1][::-1]
        if not np.isnan(window).any():
            out[t] = (w * window).sum() / w.sum()
    return out


class TestRegularSeries:
    def test_indexing(self):
        s = make_series([1, 2, 3], lag=2.0)
        assert len(s) == 3
        assert s.time_at(2) == T0 + timedelta(seconds=4)
        assert np.allclose(s.epochs() - s.start_epoch, [0, 2, 4])

    def test_missing_distinct_from_zero(self):
        s = make_series([0.0, np.nan])
        assert list(s.missing()) == [False, True]

    def test_values_are_copied_and_read_only(self):
        raw = np.array([1.0, 2.0])
        s = make_series(raw)
        raw[0] = 99
        assert s.values[0] == 1.0
        with pytest.raises(ValueError):
            s.values[0] = 5

    @pytest.mark.parametrize("lag", [0, -1])
    def test_bad_lag(self, lag):
        with pytest.raises(InvalidParameterError):
            make_series([1.0], lag=lag)

    def test_empty_rejected(self):
        with pytest.raises(InvalidParameterError):
            make_series([])

    def test_slice_keeps_times(self):
        s = make_series(np.arange(10.0), lag=3.0)
        sub = s.slice(4, 7)
        assert sub.start == s.time_at(4)
        assert list(sub.values) == [4, 5, 6]

    def test_trim_missing(self):
        s = make_series([np.nan, 1, np.nan, 2, np.nan])
        t = trim_missing(s)
        assert len(t) == 3 and t.start == s.time_at(1)


class TestMovingAverage:
    def test_constant(self):
        out = moving_average(make_series([5, 5, 5, 5]), 2)
        assert np.isnan(out.values[0]) and list(out.values[1:]) == [5, 5, 5]

    def test_hand_example(self):
        out = moving_average(make_series([1, 2, 3]), 2)
        assert np.isnan(out.values[0])
        assert out.values[1:].tolist() == [1.5, 2.5]

    @pytest.mark.parametrize("n", [2, 3, 7, 20])
    def test_spike_after_gap_is_v_over_n(self, n):
        out = moving_average(make_series([0.0] * (n - 1) + [7.0]), n)
        assert out.values[-1] == 7.0 / n

    def test_window_of_whole_series_is_mean(self, rng):
        v = rng.normal(size=37)
        out = moving_average(make_series(v), 37)
        assert out.values[-1] == pytest.approx(v.sum() / 37, rel=1e-12)

    def test_missing_propagates(self):
        out = moving_average(make_series([1, 2, np.nan, 4, 5, 6]), 2)
        assert np.isnan(out.values[[0, 2, 3]]).all()
        assert out.values[4] == 4.5

    @pytest.mark.parametrize("n", [1, 0, 5])
    def test_bad_window(self, n):
        with pytest.raises(InvalidParameterError):
            moving_average(make_series([1, 2, 3, 4]), n)

    def test_centered_even_uses_2xp(self):
        v = np.arange(10.0) ** 2
        out = moving_average(make_series(v), 4, alignment="centered")
        expected = (0.5 * v[0] + v[1] + v[2] + v[3] + 0.5 * v[4]) / 4
        assert out.values[2] == pytest.approx(expected)
        assert np.isnan(out.values[:2]).all() and np.isnan(out.values[-2:]).all()

    def test_centered_odd(self):
        out = moving_average(make_series([1, 2, 3, 4, 5]), 3, alignment="centered")
        assert np.isnan(out.values[0]) and np.isnan(out.values[-1])
        assert out.values[1:4].tolist() == pytest.approx([2, 3, 4])

    def test_centered_filter_sums_to_one(self):
        for n in range(2, 12):
            assert centered_filter(n).sum() == pytest.approx(1.0)

    def test_centered_rejects_exponential(self):
        with pytest.raises(InvalidParameterError):
            moving_average(make_series(np.ones(10)), 3, WeightScheme.exponential(), "centered")

    def test_unknown_alignment(self):
        with pytest.raises(InvalidParameterError):
            moving_average(make_series(np.ones(10)), 3, alignment="left")

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, st.integers(2, 80), elements=finite),
        st.integers(2, 80),
        st.sampled_from([None, 0.3, 0.9, 1.0]),
    )
    def test_matches_brute_force(self, values, n, decay):
        n = min(n, len(values))
        scheme = WeightScheme.uniform() if decay is None else WeightScheme.exponential(decay)
        got = moving_average(make_series(values), n, scheme).values
        want = brute_trailing(values, n, scheme.decay_for(n))
        scale = max(1.0, np.abs(values).max())
        assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * scale, equal_nan=True)

    @settings(max_examples=40, deadline=None)
    @given(finite, st.integers(2, 40), st.integers(40, 80), st.sampled_from(["uniform", "exponential"]))
    def test_constant_invariant(self, c, n, length, kind):
        out = moving_average(make_series(np.full(length, c)), n, WeightScheme(kind)).values
        assert np.allclose(out[n - 1 :], c, rtol=1e-9, atol=1e-9)

    def test_deterministic(self, rng):
        v = rng.normal(size=500)
        a = moving_average(make_series(v), 17, WeightScheme.exponential()).values
        b = moving_average(make_series(v), 17, WeightScheme.exponential()).values
        assert a.tobytes() == b.tobytes()


class TestEwma:
    def test_hand_example(self):
        out = ewma(make_series([0, 0, 0, 10]), 4, 0.1)
        assert out.values[-1] == pytest.approx(10 / 1.111, rel=1e-12)

    def test_constant(self):
        out = ewma(make_series(np.full(20, 3.5)), 5)
        assert np.allclose(out.values[4:], 3.5)

    def test_default_decay(self):
        assert WeightScheme.exponential().decay_for(9) == pytest.approx(0.8)

    def test_weights_order(self):
        w = WeightScheme.exponential(0.5).weights(4)
        assert w.tolist() == [1, 0.5, 0.25, 0.125]
        assert WeightScheme.uniform().weights(3).tolist() == [1, 1, 1]

    @pytest.mark.parametrize("decay", [0.0, 1.0, -0.2])
    def test_bad_decay(self, decay):
        with pytest.raises(InvalidParameterError):
            ewma(make_series(np.ones(5)), 3, decay)

    @pytest.mark.parametrize("n", range(2, 30))
    def test_gap_resilience(self, n):
        s = make_series([0.0] * (n - 1) + [10.0])
        assert ewma(s, n).values[-1] >= moving_average(s, n).values[-1]

    def test_closed_form(self):
        n, d, v = 6, 0.4, 3.0
        got = ewma(make_series([0.0] * (n - 1) + [v]), n, d).values[-1]
        assert got == pytest.approx(v * (1 - d) / (1 - d**n), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40), st.floats(0.1, 100))
    def test_gap_error_monotone_in_decay(self, k, v):
        s = make_series([0.0] * k + [v])
        n = k + 1
        errs = [abs(ewma(s, n, d).values[-1] - v) for d in (0.95, 0.8, 0.5, 0.2, 0.05)]
        assert all(b <= a + 1e-12 * v for a, b in zip(errs, errs[1:]))


class TestDifference:
    def test_constant(self):
        d = difference(make_series([1, 1, 1]))
        assert np.isnan(d.values[0]) and d.values[1:].tolist() == [0, 0]

    def test_rectangle(self):
        d = difference(make_series([0, 0, 8, 8, 8, 0]))
        assert d.values[1:].tolist() == [0, 8, 0, 0, -8]

    def test_twice_matches_second_difference(self, rng):
        v = rng.normal(size=50)
        dd = difference(difference(make_series(v)))
        assert np.allclose(dd.values[2:], np.diff(v, n=2))

    def test_too_short(self):
        with pytest.raises(InvalidParameterError):
            difference(make_series([1.0]))

    @given(arrays(np.float64, st.integers(2, 100), elements=st.integers(-10**6, 10**6).map(float)))
    def test_cumsum_reconstructs(self, values):
        d = difference(make_series(values)).values
        rebuilt = values[0] + np.r_[0.0, np.cumsum(d[1:])]
        assert np.array_equal(rebuilt, values)


class TestSigma:
    def test_constant(self):
        assert series_sigma(make_series([3, 3, 3])) == 0

    def test_two_points(self):
        assert series_sigma(make_series([0, 2])) == pytest.approx(math.sqrt(2))

    def test_ignores_missing(self):
        assert series_sigma(make_series([0, np.nan, 2])) == pytest.approx(math.sqrt(2))

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            series_sigma(make_series([1.0, np.nan]))

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.integers(2, 300), elements=finite))
    def test_chebyshev(self, values):
        s = series_sigma(make_series(values))
        inside = np.abs(values - values.mean()) <= 5 * s + 1e-9 * max(1.0, np.abs(values).max())
        assert inside.mean() >= 0.96
