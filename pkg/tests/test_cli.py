"""End-to-end smoke tests for the command-line interface."""

import json
import shutil
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "stegolink"]

FAST = ["--steps", "10", "--shape", "1,8,8", "--token", "4242"]


def run_cli(*argv, **kw):
    return subprocess.run([*CLI, *argv], capture_output=True, text=True, timeout=120, **kw)


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


SWEEP_PAYLOAD = {
    "base": {"steps": 10, "shape": [1, 8, 8], "snr_db": 10.0},
    "axes": {"snr_db": [5.0, 10.0]},
    "trials_per_point": 2,
    "base_seed": "clitest",
}


class TestRun:
    def test_smoke(self):
        proc = run_cli("run", *FAST)
        assert proc.returncode == 0, proc.stderr
        out = proc.stdout
        for tag in ("legit:", "E1:", "E2:", "E3:", "round-trip max err"):
            assert tag in out

    def test_noiseless_hits_psnr_cap(self):
        proc = run_cli("run", *FAST, "--noiseless", "--scenario", "legit")
        assert proc.returncode == 0, proc.stderr
        assert "psnr  100.000 dB" in proc.stdout
        assert "E2:" not in proc.stdout

    def test_deterministic_stdout(self):
        args = ("run", *FAST, "--seed", "7")
        assert run_cli(*args).stdout == run_cli(*args).stdout

    def test_seed_changes_noise(self):
        base = run_cli("run", *FAST, "--seed", "1").stdout
        other = run_cli("run", *FAST, "--seed", "2").stdout
        assert base != other

    def test_record_file(self, tmp_path):
        out = tmp_path / "trial.json"
        proc = run_cli("run", *FAST, "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        record = json.loads(out.read_text())
        assert record["config"]["token"] == "4242"
        assert set(record) >= {"legit", "eaves1", "eaves2", "eaves3", "peak"}

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = write_json(tmp_path / "cfg.json",
                         {"steps": 10, "shape": [1, 8, 8], "token": "111"})
        with_file = run_cli("run", "--config", cfg, "--token", "4242", "--seed", "3")
        with_flags = run_cli("run", *FAST, "--seed", "3")
        assert with_file.returncode == 0, with_file.stderr
        assert with_file.stdout == with_flags.stdout

    def test_invalid_config_value_rc2(self, tmp_path):
        cfg = write_json(tmp_path / "cfg.json", {"eta": 1.5})
        proc = run_cli("run", "--config", cfg)
        assert proc.returncode == 2
        assert proc.stderr.startswith("config error:")
        assert "eta" in proc.stderr

    def test_missing_config_rc2(self):
        proc = run_cli("run", "--config", "/nonexistent/cfg.json")
        assert proc.returncode == 2
        assert "config error" in proc.stderr

    def test_bad_shape_flag_rc2(self):
        proc = run_cli("run", "--shape", "8x8")
        assert proc.returncode == 2
        assert "shape" in proc.stderr

    def test_sweep_file_rejected_by_run(self, tmp_path):
        cfg = write_json(tmp_path / "sweep.json", SWEEP_PAYLOAD)
        proc = run_cli("run", "--config", cfg)
        assert proc.returncode == 2


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("sweep")
    cfg = write_json(root / "sweep.json", SWEEP_PAYLOAD)
    out = root / "out"
    proc = run_cli("sweep", "--config", cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert "4 trials (0 failed)" in proc.stdout
    return out


class TestSweepAndExport:
    def test_outputs_exist(self, sweep_dir):
        records = (sweep_dir / "records.jsonl").read_text()
        rows = [json.loads(line) for line in records.splitlines()]
        assert len(rows) == 4
        csv_lines = (sweep_dir / "aggregates.csv").read_text().splitlines()
        assert len(csv_lines) == 3
        assert csv_lines[0].startswith("point_index,snr_db,trials,ok,")

    def test_rerun_byte_identical(self, sweep_dir, tmp_path):
        cfg = write_json(tmp_path / "sweep.json", SWEEP_PAYLOAD)
        out = tmp_path / "out"
        proc = run_cli("sweep", "--config", cfg, "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        for name in ("records.jsonl", "aggregates.csv"):
            assert (out / name).read_bytes() == (sweep_dir / name).read_bytes()

    def test_export_stdout(self, sweep_dir):
        proc = run_cli("export", "--records", str(sweep_dir / "records.jsonl"),
                       "--kind", "snr_curves")
        assert proc.returncode == 0, proc.stderr
        lines = proc.stdout.splitlines()
        assert lines[0].startswith("snr_db,n,legit_psnr_db_mean")
        assert len(lines) == 3

    def test_export_to_file(self, sweep_dir, tmp_path):
        out = tmp_path / "bars.csv"
        proc = run_cli("export", "--records", str(sweep_dir / "records.jsonl"),
                       "--kind", "scenario_bars", "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert out.read_text().splitlines()[0].startswith("scenario,n,")

    def test_export_wrong_axis_rc2(self, sweep_dir):
        proc = run_cli("export", "--records", str(sweep_dir / "records.jsonl"),
                       "--kind", "eta_curves")
        assert proc.returncode == 2
        assert "config error" in proc.stderr

    def test_export_unknown_kind_rejected_by_argparse(self, sweep_dir):
        proc = run_cli("export", "--records", str(sweep_dir / "records.jsonl"),
                       "--kind", "violin")
        assert proc.returncode == 2

    def test_run_config_rejected_by_sweep(self, tmp_path):
        cfg = write_json(tmp_path / "cfg.json", {"steps": 10, "shape": [1, 8, 8]})
        proc = run_cli("sweep", "--config", cfg, "--out", str(tmp_path / "out"))
        assert proc.returncode == 2


class TestSelftestAndEntryPoint:
    def test_selftest_rc0_all_pass(self):
        proc = run_cli("selftest")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        lines = [ln for ln in proc.stdout.splitlines() if ln]
        assert lines and all(ln.startswith("[PASS]") for ln in lines)

    def test_console_script_installed(self):
        exe = shutil.which("stegolink")
        assert exe is not None
        proc = subprocess.run([exe, "run", *FAST, "--noiseless", "--scenario", "legit"],
                              capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0, proc.stderr
        assert "legit:" in proc.stdout
