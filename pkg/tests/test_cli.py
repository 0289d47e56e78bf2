import json
import threading
import time
import urllib.request

import pytest

from broilersim.cli import main


def run_cli(*argv):
    return main(list(argv))


def test_run_writes_artifacts_and_exits_zero(tmp_path, capsys):
    code = run_cli("run", "cold-27", "--duration", "60",
                   "--out", str(tmp_path / "out"), "--no-figures")
    assert code == 0
    out = capsys.readouterr().out
    assert "scenario cold-27" in out
    assert (tmp_path / "out" / "export_temperature.csv").exists()
    assert (tmp_path / "out" / "events.log").exists()


def test_run_renders_figures(tmp_path):
    code = run_cli("run", "cold-27", "--duration", "45",
                   "--out", str(tmp_path / "out"))
    assert code == 0
    assert (tmp_path / "out" / "temperature.png").stat().st_size > 0
    assert (tmp_path / "out" / "load.png").stat().st_size > 0


def test_run_unknown_scenario_is_validation_exit(capsys):
    assert run_cli("run", "not-a-scenario") == 1
    assert "error" in capsys.readouterr().err


def test_run_invalid_scenario_file_lists_fields(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "duration_s": 0,
                               "env": {"k_loss": -2}}))
    assert run_cli("run", str(bad)) == 1
    err = capsys.readouterr().err
    assert "duration_s" in err and "env.k_loss" in err


def test_replay_identical_and_tampered(tmp_path, capsys):
    # replay re-runs the scenario exactly as written, so the recorded run
    # must use the unmodified preset
    out = tmp_path / "out"
    assert run_cli("run", "cold-27", "--out", str(out), "--no-figures") == 0
    assert run_cli("replay", str(out), "cold-27", "--seed", "42") == 0
    assert "identical" in capsys.readouterr().out

    log = out / "store" / "temperature.log"
    lines = log.read_text().splitlines()
    lines[40] = lines[40].rsplit(",", 1)[0] + ",99.0"
    log.write_text("\n".join(lines) + "\n")
    assert run_cli("replay", str(out), "cold-27") == 2
    assert "DIFFERS" in capsys.readouterr().out


def test_replay_needs_duration_match(tmp_path):
    # replays re-run the scenario as given; a shortened stored run differs
    out = tmp_path / "out"
    run_cli("run", "cold-27", "--duration", "50", "--out", str(out),
            "--no-figures")
    assert run_cli("replay", str(out), "cold-27") == 2


def test_analyze_prints_table_and_writes_report(tmp_path, capsys):
    out = tmp_path / "out"
    run_cli("run", "cold-27", "--duration", "120", "--out", str(out),
            "--no-figures")
    code = run_cli("analyze", str(out / "export_temperature.csv"),
                   "--day-length", "60", "--out-dir", str(tmp_path / "rep"))
    assert code == 0
    table = capsys.readouterr().out
    assert "daily means" in table and "total" in table
    assert (tmp_path / "rep" / "report.csv").read_text().startswith(
        "day,count,mean")
    assert (tmp_path / "rep" / "export_temperature_series.png").exists()
    assert (tmp_path / "rep" / "export_temperature_daily_means.png").exists()


def test_analyze_rejects_headerless_file(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1970-01-01T00:00:00Z,temperature,39.10\n")
    assert run_cli("analyze", str(bad)) == 1


def test_analyze_missing_file(tmp_path):
    assert run_cli("analyze", str(tmp_path / "nope.csv")) == 1


def test_export_range_to_stdout(tmp_path, capsys):
    out = tmp_path / "out"
    run_cli("run", "cold-27", "--duration", "30", "--out", str(out),
            "--no-figures")
    capsys.readouterr()  # discard the run summary
    code = run_cli("export", "temperature", "5", "9",
                   "--store", str(out))
    assert code == 0
    body = capsys.readouterr().out
    lines = body.splitlines()
    assert lines[0] == "timestamp,variable,value"
    assert len(lines) == 1 + 5  # ts 5..9 inclusive


def test_export_to_file(tmp_path):
    out = tmp_path / "out"
    run_cli("run", "cold-27", "--duration", "30", "--out", str(out),
            "--no-figures")
    target = tmp_path / "slice.csv"
    assert run_cli("export", "load", "0", "4", "--store", str(out),
                   "-o", str(target)) == 0
    assert target.read_text().count("\n") == 6


def test_export_unknown_store_dir(tmp_path):
    assert run_cli("export", "temperature", "0", "1",
                   "--store", str(tmp_path / "missing")) == 1


def test_serve_mode_live_snapshot_and_command(tmp_path):
    """Exercises the paced loop + HTTP service against a live run."""
    port = 18787

    def worker():
        # slow pace: the loop must stay alive for the whole test so the
        # submitted command gets drained by a future tick
        run_cli("run", "lowfeed-9", "--duration", "600", "--serve",
                "--port", str(port), "--rate", "4",
                "--out", str(tmp_path / "out"), "--no-figures")

    thread = threading.Thread(target=worker, daemon=True)
    thread.start()

    base = f"http://127.0.0.1:{port}"

    def get_snapshot():
        req = urllib.request.Request(f"{base}/v1/snapshot",
                                     headers={"X-Auth-Token": "demo-token"})
        with urllib.request.urlopen(req, timeout=2) as resp:
            return json.loads(resp.read())

    deadline = time.monotonic() + 10
    snap = None
    while time.monotonic() < deadline:
        try:
            snap = get_snapshot()
            if snap["variables"]["temperature"]:
                break
        except OSError:
            time.sleep(0.05)
    assert snap is not None and snap["variables"]["temperature"] is not None
    assert snap["variables"]["temperature"]["value"] == pytest.approx(39.10,
                                                                      abs=0.01)

    # command flows through HTTP into the paced loop
    body = json.dumps({"kind": "set_ideal_temp", "payload": 30.0}).encode()
    req = urllib.request.Request(f"{base}/v1/commands", data=body,
                                 method="POST",
                                 headers={"X-Auth-Token": "demo-token",
                                          "Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=2) as resp:
        assert resp.status == 202
    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        snap = get_snapshot()
        if snap["config"].get("t_ideal") == 30.0:
            break
        time.sleep(0.05)
    assert snap["config"]["t_ideal"] == 30.0
    # fan spins up because the house is ~9 degC over the new setpoint
    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        snap = get_snapshot()
        if snap["actuators"].get("fan_rpm", 0) > 0:
            break
        time.sleep(0.05)
    assert snap["actuators"]["fan_rpm"] > 0
