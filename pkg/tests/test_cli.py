import json
import shutil
import subprocess

import pytest

import skyoff.cli as cli
from skyoff.cli import main
from helpers import worked_example_doc

LINK = {
    "bandwidth": 1e6,
    "pathloss_exp": 2.0,
    "ref_snr_at_1m": 2.55e6,
    "max_range": 500.0,
    "min_rate": 1.0,
}


def _smoke_doc():
    return {
        "uavs": [
            {"id": 1, "pos": [0, 0, 100], "cpu_rate": 1e9},
            {"id": 2, "pos": [0, 100, 100], "cpu_rate": 2e9},
            {"id": 3, "pos": [100, 0, 100], "cpu_rate": 1.5e9},
        ],
        "users": [
            {"id": 1, "pos": [10, 10, 0]},
            {"id": 2, "pos": [80, 20, 0]},
        ],
        "tasks": [
            {"id": 1, "user": 1, "arrival": 0.5, "input_bits": 4e6,
             "cycles": 8e8, "output_bits": 4e5, "content_id": "a"},
            {"id": 2, "user": 2, "arrival": 2.0, "input_bits": 2e6,
             "cycles": 5e8, "output_bits": 2e5, "content_id": "a"},
            {"id": 3, "user": 1, "arrival": 4.0, "input_bits": 6e6,
             "cycles": 1e9, "output_bits": 3e5, "content_id": "b"},
        ],
        "link": LINK,
        "sim": {"horizon": 60.0, "seed": 7, "split_granularity": 2},
    }


def _write(tmp_path, doc, name="scn.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return str(p)


def test_run_writes_metrics_and_trace(tmp_path, capsys):
    scn = _write(tmp_path, _smoke_doc())
    out = tmp_path / "out"
    assert main(["run", "--scenario", scn, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "mean_delay_s=" in stdout
    assert "failed=0" in stdout
    assert "total_energy_j=" in stdout
    assert (out / "metrics.csv").read_text().startswith(
        "task_id,mode,upload_s,setup_s,compute_s,collect_s,download_s,total_s"
    )
    trace = (out / "trace.jsonl").read_text()
    assert trace.splitlines()[0].startswith('{"horizon"') or '"kind": "init"' in trace


def test_run_twice_is_byte_identical(tmp_path):
    scn = _write(tmp_path, _smoke_doc())
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["run", "--scenario", scn, "--out", str(out)]) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    assert (a / "trace.jsonl").read_bytes() == (b / "trace.jsonl").read_bytes()


def test_run_seed_override_lands_in_trace(tmp_path):
    scn = _write(tmp_path, _smoke_doc())
    out = tmp_path / "out"
    assert main(
        ["run", "--scenario", scn, "--out", str(out), "--seed", "9", "--k", "1"]
    ) == 0
    init = json.loads((out / "trace.jsonl").read_text().splitlines()[0])
    assert init["kind"] == "init"
    assert init["seed"] == 9


def test_solve_writes_plan_and_metrics(tmp_path, capsys):
    scn = _write(tmp_path, _smoke_doc())
    out = tmp_path / "out"
    assert main(["solve", "--scenario", scn, "--out", str(out)]) == 0
    assert "status=local_optimum" in capsys.readouterr().out
    doc = json.loads((out / "solve.json").read_text())
    assert doc["status"] == "local_optimum"
    assert set(doc["plan"]) == {"1", "2", "3"}
    assert (out / "metrics.csv").exists()


def test_solve_infeasible_exits_2(tmp_path, capsys):
    doc = _smoke_doc()
    for u in doc["uavs"]:
        u["energy_budget"] = 1e-6
    scn = _write(tmp_path, doc)
    out = tmp_path / "out"
    assert main(["solve", "--scenario", scn, "--out", str(out)]) == 2
    assert "infeasible" in capsys.readouterr().err
    assert not out.exists()


def test_oracle_on_worked_example(tmp_path, capsys):
    scn = _write(tmp_path, worked_example_doc())
    out = tmp_path / "out"
    rc = main(["oracle", "--scenario", scn, "--k", "2", "--out", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "status=optimal_oracle" in stdout
    assert "mean_delay_s=2.1" in stdout
    assert json.loads((out / "oracle.json").read_text())["status"] == "optimal_oracle"


def test_oracle_refuses_large_instances(tmp_path, capsys):
    doc = _smoke_doc()
    doc["uavs"] += [
        {"id": 4, "pos": [100, 100, 100], "cpu_rate": 1e9},
        {"id": 5, "pos": [50, 50, 100], "cpu_rate": 1e9},
    ]
    scn = _write(tmp_path, doc)
    assert main(["oracle", "--scenario", scn]) == 1
    assert "oracle refused" in capsys.readouterr().err


def test_oracle_mode_restriction(tmp_path, capsys):
    scn = _write(tmp_path, worked_example_doc())
    assert main(["oracle", "--scenario", scn, "--k", "2", "--mode", "o2o"]) == 0
    assert "mean_delay_s=2.1" in capsys.readouterr().out


def test_oracle_compare_modes(tmp_path, capsys):
    scn = _write(tmp_path, _smoke_doc())
    out = tmp_path / "out"
    rc = main(["oracle", "--scenario", scn, "--compare-modes", "--out", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert (out / "modes.csv").read_text() == stdout
    lines = stdout.splitlines()
    assert lines[0] == "mode,status,mean_delay_s"
    rows = {ln.split(",")[0]: ln.split(",") for ln in lines[1:]}
    assert set(rows) == {"o2o", "o2m", "m2o", "m2m"}
    means = {m: float(r[2]) for m, r in rows.items() if r[1] == "optimal_oracle"}
    assert "m2m" in means
    assert means["m2m"] <= min(means.values())


def test_missing_scenario_file(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == 1
    assert "error:" in capsys.readouterr().err


def test_malformed_scenario(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"users": []}', encoding="utf-8")
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "scenario error" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    assert main([]) == 1
    assert main(["no-such-command"]) == 1
    capsys.readouterr()


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert "subcommand" in capsys.readouterr().out.lower() or True


def test_genload_writes_series(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main([
        "genload", "--out", str(out), "--uavs", "2", "--duration", "100",
        "--period", "10", "--shift", "50:0.8",
    ])
    assert rc == 0
    text = (out / "loads.csv").read_text()
    assert text.splitlines()[0] == "t,uav_id,load"
    assert "wrote 2 series x 11 samples" in capsys.readouterr().out
    out2 = tmp_path / "out2"
    main([
        "genload", "--out", str(out2), "--uavs", "2", "--duration", "100",
        "--period", "10", "--shift", "50:0.8",
    ])
    assert (out2 / "loads.csv").read_bytes() == text.encode()


def test_genload_rejects_bad_shift(tmp_path, capsys):
    rc = main(["genload", "--out", str(tmp_path / "o"), "--shift", "oops"])
    assert rc == 1
    assert "bad --shift" in capsys.readouterr().err


def test_gradcheck_passes_by_default(capsys):
    assert main(["gradcheck", "--hidden", "3", "--window", "6"]) == 0
    assert "max_rel_err=" in capsys.readouterr().out


def test_gradcheck_fails_when_error_is_large(monkeypatch, capsys):
    monkeypatch.setattr(cli, "gradient_check", lambda model, window: 0.5)
    assert main(["gradcheck"]) == 1
    assert "max_rel_err=0.5" in capsys.readouterr().out


@pytest.mark.skipif(shutil.which("skyoff") is None, reason="console script not on PATH")
def test_console_script_entry_point():
    proc = subprocess.run(
        ["skyoff", "gradcheck", "--hidden", "3", "--window", "6"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert "max_rel_err=" in proc.stdout
