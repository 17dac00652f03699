import csv
import io
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from augury import cli
from augury.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, run


@pytest.fixture
def requests_log(tmp_path):
    """Two days of minute bursts from two apps, with a within-hour shape."""
    path = tmp_path / "req.log"
    rc = run(["simulate", "requests", "--days", "2", "--apps", "app5:2,app1", "--burst-profile",
              ",".join(str(1 + (k % 6)) for k in range(60)), "--seed", "3", "-o", str(tmp_path)])
    assert rc == EXIT_OK
    (tmp_path / "requests.log").rename(path)
    return path


@pytest.fixture
def noisy_log(tmp_path):
    """Jittered bursts so per-minute counts are not exactly periodic."""
    rc = run(["simulate", "requests", "--days", "2", "--apps", "app5:3", "--jitter", "15", "--seed", "8",
              "-o", str(tmp_path)])
    assert rc == EXIT_OK
    return tmp_path / "requests.log"


@pytest.fixture
def metrics_csv(tmp_path):
    assert run(["simulate", "metrics", "--days", "0.05", "--seed", "1", "-o", str(tmp_path)]) == EXIT_OK
    return tmp_path / "metrics.csv"


def rows(data: bytes):
    return list(csv.reader(io.StringIO(data.decode())))


class TestExitCodes:
    def test_no_command(self, capsys):
        assert run([]) == EXIT_USAGE

    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, requests_log, capsys):
        assert run(["trend", str(requests_log), "--bogus"]) == EXIT_USAGE

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        assert run(["ingest", str(tmp_path / "nope.log")]) == EXIT_DATA

    def test_garbage_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.log"
        bad.write_text("this is not a log\nnor this\n")
        assert run(["ingest", "--input-format", "apache", str(bad)]) == EXIT_DATA
        assert "error" in capsys.readouterr().err

    def test_unknown_app_is_data_error(self, requests_log, capsys):
        assert run(["runtimes", str(requests_log), "--app", "nothere"]) == EXIT_DATA

    def test_both_needs_output_dir(self, requests_log, capsys):
        assert run(["trend", str(requests_log), "--format", "both"]) == EXIT_USAGE

    def test_periodic_input_forecast_is_data_error(self, requests_log, capsys):
        # exactly periodic counts leave nothing for the unit-root regression to fit
        rc = run(["forecast", str(requests_log), "--app", "app5", "--window", "60", "--period", "daily"])
        assert rc == EXIT_DATA

    def test_bad_order(self, requests_log, capsys):
        assert run(["forecast", str(requests_log), "--order", "9,0,0"]) == EXIT_USAGE

    def test_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "augury", "nope"], capture_output=True)
        assert proc.returncode == EXIT_USAGE and proc.stdout == b""


class TestCommands:
    def test_ingest_to_stdout(self, requests_log, capsysbinary):
        assert run(["ingest", str(requests_log)]) == EXIT_OK
        cap = capsysbinary.readouterr()
        table = rows(cap.out)
        assert table[0][:3] == ["timestamp", "app_id", "client_ip"]
        assert len(table) - 1 == 2880 * 3 * 7 // 2  # bursts * apps weight * mean profile (1..6)
        assert b"rows_read" in cap.err or b"read" in cap.err

    def test_profile_daily(self, requests_log, tmp_path, capsys):
        out = tmp_path / "o"
        rc = run(["profile", str(requests_log), "--app", "app5", "--window", "60", "--period", "daily",
                  "--format", "both", "-o", str(out)])
        assert rc == EXIT_OK
        table = rows((out / "profile.csv").read_bytes())
        assert len(table) == 25
        root = ET.parse(out / "profile.svg").getroot()
        assert len(root.findall(".//{http://www.w3.org/2000/svg}rect[@class='box']")) == 24

    def test_profile_zoom(self, requests_log, capsysbinary):
        assert run(["profile", str(requests_log), "--app", "app5", "--zoom", "22"]) == EXIT_OK
        assert len(rows(capsysbinary.readouterr().out)) == 61

    def test_decompose_residual_small(self, requests_log, capsysbinary):
        rc = run(["decompose", str(requests_log), "--app", "app5", "--window", "1", "--period", "hourly"])
        assert rc == EXIT_OK
        table = rows(capsysbinary.readouterr().out)
        assert table[0] == ["timestamp", "observed", "seasonal", "trend", "residual"]
        resid = [float(r[4]) for r in table[1:] if r[4]]
        assert max(abs(v) for v in resid) < 1e-9  # the profile repeats exactly every hour

    def test_trend_files(self, requests_log, tmp_path, capsys):
        rc = run(["trend", str(requests_log), "--top", "2", "-o", str(tmp_path / "t")])
        assert rc == EXIT_OK
        rank = rows((tmp_path / "t" / "ranking.csv").read_bytes())
        assert [r[0] for r in rank[1:]] == ["/app5", "/app1"]
        assert abs(sum(float(r[2]) for r in rank[1:]) - 1.0) < 1e-12

    def test_project_memory(self, requests_log, capsysbinary):
        rc = run(["project-memory", str(requests_log), "--app", "app5", "--start", "22:04", "--end", "22:05",
                  "--per-execution-mb", "10"])
        assert rc == EXIT_OK
        table = rows(capsysbinary.readouterr().out)
        assert table[0] == ["day", "timestamp", "cumulative_mb"]
        # burst at 22:04 has multiplier 1 + (4 % 6) = 5, weight 2 -> 10 executions per day
        per_day = {}
        for day, _, mb in table[1:]:
            per_day[day] = float(mb)
        assert set(per_day.values()) == {100.0}

    def test_runtimes(self, requests_log, capsysbinary):
        assert run(["runtimes", str(requests_log), "--app", "app1"]) == EXIT_OK
        table = rows(capsysbinary.readouterr().out)
        assert table[0] == ["timestamp", "duration_us"] and len(table) > 1000

    def test_forecast_reports_to_stderr(self, noisy_log, capsysbinary):
        rc = run(["forecast", str(noisy_log), "--window", "1", "--period", "hourly", "--order", "0,1,0"])
        assert rc == EXIT_OK
        cap = capsysbinary.readouterr()
        assert rows(cap.out)[0] == ["timestamp", "actual", "forecast_arima", "forecast_naive"]
        assert b"ADF" in cap.err and b"RMSE" in cap.err

    def test_patterns_pipeline(self, metrics_csv, capsysbinary):
        rc = run(["patterns", str(metrics_csv)])
        assert rc == EXIT_OK
        table = rows(capsysbinary.readouterr().out)
        assert table[0] == ["parameter", "mean", "std", "median"]
        peak = dict((r[0], r) for r in table[1:])["max_memory"]
        assert abs(float(peak[1]) - 30) < 1.5

    def test_stdin_pipe(self, tmp_path):
        sim = subprocess.run([sys.executable, "-m", "augury", "simulate", "metrics", "--days", "0.05", "--noise", "0"],
                             capture_output=True, check=True)
        proc = subprocess.run([sys.executable, "-m", "augury", "patterns", "--stdin"], input=sim.stdout,
                              capture_output=True)
        assert proc.returncode == 0, proc.stderr
        table = rows(proc.stdout)
        stats = {r[0]: r for r in table[1:]}
        assert float(stats["beta"][2]) == pytest.approx(0.0, abs=1e-9)
        assert float(stats["beta"][1]) == pytest.approx(30.0)


class TestFormatsAndConfig:
    @pytest.mark.parametrize(
        "command",
        [["ingest"], ["trend"], ["decompose", "--window", "1", "--period", "hourly"], ["profile"],
         ["runtimes", "--app", "app5"], ["project-memory", "--app", "app5", "--per-execution-mb", "1"],
         ["forecast", "--window", "1", "--period", "hourly", "--order", "0,1,0"]],
    )
    def test_svg_format(self, noisy_log, capsysbinary, command):
        assert run([command[0], str(noisy_log), *command[1:], "--format", "svg"]) == EXIT_OK
        out = capsysbinary.readouterr().out
        assert out.startswith(b"<?xml")
        ET.fromstring(out)

    def test_simulate_formats(self, tmp_path, capsysbinary):
        assert run(["simulate", "requests", "--days", "0.01", "--format", "svg"]) == EXIT_OK
        assert capsysbinary.readouterr().out.startswith(b"<?xml")
        assert run(["simulate", "requests", "--days", "0.01", "--format", "both", "-o", str(tmp_path)]) == EXIT_OK
        assert {p.name for p in tmp_path.iterdir()} == {"requests.log", "requests.svg"}

    def test_deterministic(self, requests_log, capsysbinary):
        argv = ["profile", str(requests_log), "--app", "app5", "--format", "svg"]
        run(argv)
        a = capsysbinary.readouterr().out
        run(argv)
        assert capsysbinary.readouterr().out == a

    def test_config_precedence(self, requests_log, tmp_path, capsysbinary):
        cfg = tmp_path / "augury.conf"
        cfg.write_text("# defaults\ntop = 1\nwindow=30\n")
        run(["trend", str(requests_log), "--config", str(cfg)])
        header = rows(capsysbinary.readouterr().out)[0]
        assert header == ["slot_start", "/app5"]
        run(["trend", str(requests_log), "--config", str(cfg), "--top", "2"])
        table = rows(capsysbinary.readouterr().out)
        assert len(table[0]) == 3
        # window from the config: 30-minute slots over two days
        assert len(table) - 1 == 96

    def test_config_unknown_key(self, requests_log, tmp_path, capsys):
        cfg = tmp_path / "bad.conf"
        cfg.write_text("colour=blue\n")
        assert run(["trend", str(requests_log), "--config", str(cfg)]) == EXIT_USAGE

    def test_config_malformed(self, requests_log, tmp_path, capsys):
        cfg = tmp_path / "bad.conf"
        cfg.write_text("no equals sign here\n")
        assert run(["trend", str(requests_log), "--config", str(cfg)]) == EXIT_USAGE


class _TTY(io.StringIO):
    def isatty(self):
        return True


class TestColor:
    def test_color_on_tty(self, monkeypatch):
        monkeypatch.delenv("NO_COLOR", raising=False)
        fake = _TTY()
        monkeypatch.setattr(sys, "stderr", fake)
        cli.diag("hello", "error")
        assert "\033[" in fake.getvalue()

    def test_no_color(self, monkeypatch):
        monkeypatch.setenv("NO_COLOR", "1")
        fake = _TTY()
        monkeypatch.setattr(sys, "stderr", fake)
        cli.diag("hello", "error")
        assert "\033[" not in fake.getvalue() and "hello" in fake.getvalue()

    def test_plain_when_piped(self, monkeypatch):
        monkeypatch.delenv("NO_COLOR", raising=False)
        fake = io.StringIO()
        monkeypatch.setattr(sys, "stderr", fake)
        cli.diag("hello")
        assert "\033[" not in fake.getvalue()
