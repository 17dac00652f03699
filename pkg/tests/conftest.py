from datetime import datetime, timezone

import numpy as np
import pytest

from augury.series import RegularSeries

T0 = datetime(2017, 3, 12, tzinfo=timezone.utc)


def make_series(values, lag=2.0, start=T0):
    return RegularSeries(start, lag, np.asarray(values, dtype=np.float64))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
