import csv

import pytest
from click.testing import CliRunner

from dpsketch.main import cli
from dpsketch.services.cache import clear_cache
from dpsketch.services.experiments import CSV_HEADER


@pytest.fixture
def runner():
    clear_cache()
    return CliRunner(mix_stderr=False)


def _read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


SMALL = ["--n", "2000", "--universe-bits", "10", "--repeats", "1", "--space-kb", "9.2"]


def test_calibrate_to_file(runner, tmp_path):
    out = tmp_path / "calibrate.csv"
    result = runner.invoke(cli, ["calibrate", "--rho", "1", "--output", str(out)])
    assert result.exit_code == 0, result.stderr
    rows = _read(out)
    assert list(rows[0]) == CSV_HEADER
    table = {(r["variant"], r["metric"]): r["value"] for r in rows}
    assert table[("cm", "d")] == "6"
    assert table[("cs", "d")] == "7"
    assert table[("cm", "sigma")].startswith("2.4494897")


def test_calibrate_to_stdout(runner):
    result = runner.invoke(cli, ["calibrate", "--rho", "0.1", "--variant", "cs"])
    assert result.exit_code == 0, result.stderr
    lines = result.stdout.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 6
    assert all(",cs,true,0.1," in line for line in lines[1:])


def test_frequency_baseline_only(runner, tmp_path):
    out = tmp_path / "freq.csv"
    args = ["frequency", *SMALL, "--rho", "none", "--variant", "cm", "--output", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.stderr
    rows = _read(out)
    assert len(rows) == 1
    assert rows[0]["rho"] == "none"
    assert rows[0]["private"] == "false"
    assert rows[0]["metric"] == "are"


def test_frequency_is_deterministic(runner, tmp_path):
    args = ["frequency", *SMALL, "--rho", "1", "--seed", "11"]
    first = runner.invoke(cli, [*args, "--output", str(tmp_path / "a.csv")])
    clear_cache()
    second = runner.invoke(cli, [*args, "--output", str(tmp_path / "b.csv"), "--workers", "1"])
    assert first.exit_code == second.exit_code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_topk_from_trace_file(runner, tmp_path):
    trace = tmp_path / "trace.csv"
    lines = [f"{item},+1" for item in range(12) for _ in range(30 - item)]
    trace.write_text("\n".join(lines) + "\n", encoding="utf-8")
    out = tmp_path / "topk.csv"
    args = ["topk", "--dataset", "file", "--file", str(trace), "--universe-bits", "8",
            "--repeats", "1", "--space-kb", "9.2", "--rho", "none", "--variant", "cm",
            "--k", "3", "--output", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.stderr
    rows = _read(out)
    assert rows[0]["metric"] == "f1_top3"
    assert rows[0]["n"] == str(len(lines))


def test_quantile_exact_mode(runner, tmp_path):
    out = tmp_path / "quantile.csv"
    args = ["quantile", "--n", "3000", "--universe-bits", "8", "--repeats", "1",
            "--exact-mode", "--m", "1", "--m", "4", "--output", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.stderr
    rows = _read(out)
    assert {r["metric"] for r in rows} == {"avg_rank_error_m1", "avg_rank_error_m4"}
    assert all(float(r["value"]) == 0.0 for r in rows)


def test_invalid_rho_is_rejected(runner):
    result = runner.invoke(cli, ["calibrate", "--rho", "lots"])
    assert result.exit_code != 0
    assert "positive number" in result.stderr


def test_private_count_min_quantile_fails_cleanly(runner):
    result = runner.invoke(cli, ["quantile", "--variant", "cm", "--rho", "1", "--universe-bits", "8"])
    assert result.exit_code == 1
    assert "--variant cs" in result.stderr


def test_zero_workers_setting_fails(runner, monkeypatch):
    monkeypatch.setenv("DPSKETCH_WORKERS", "0")
    result = runner.invoke(cli, ["calibrate"])
    assert result.exit_code == 1
    assert "DPSKETCH_WORKERS" in result.stderr


def test_ledger_and_history(runner, tmp_path):
    db = tmp_path / "runs.db"
    ok = runner.invoke(cli, ["calibrate", "--rho", "1", "--db", str(db), "--output", str(tmp_path / "c.csv")])
    assert ok.exit_code == 0, ok.stderr
    failed = runner.invoke(cli, ["quantile", "--variant", "cm", "--rho", "1", "--db", str(db)])
    assert failed.exit_code == 1

    history = runner.invoke(cli, ["history", "--db", str(db)])
    assert history.exit_code == 0, history.stderr
    assert "Runs (total): 2" in history.stdout
    assert "Successful: 1 (50.0%)" in history.stdout
    assert "Result rows: 12" in history.stdout
    assert "calibrate: 1" in history.stdout

    run = runner.invoke(cli, ["history", "--db", str(db), "--run", "1"])
    assert run.exit_code == 0, run.stderr
    lines = run.stdout.splitlines()
    assert lines[0] == "Run #1: 12 result rows"
    assert "cm,true,1,4.6875,d,6" in lines

    missing = runner.invoke(cli, ["history", "--db", str(db), "--run", "2"])
    assert missing.exit_code == 1
    assert "no stored results" in missing.stderr


def test_history_needs_a_ledger(runner):
    result = runner.invoke(cli, ["history"])
    assert result.exit_code == 1
    assert "DPSKETCH_DB_PATH" in result.stderr
