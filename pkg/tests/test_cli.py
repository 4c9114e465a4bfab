import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from holorecon.cli import git_blob_hash, main
from holorecon.harness import CSV_HEADER

SMALL = {"method": "ls", "trials": 2, "m_grid": [40, 80], "M_test": 1000,
         "b": {"kind": "algebraic", "rate": 2.0, "scale": 1.0, "d": 4, "p": 0.51}}

CONFIGS = {
    "converge": SMALL,
    "chernoff": {"budgets": [4], "trials": 20},
    "reconstruct": {"method": "cs", "m": 60, "N_max": 200, "b": SMALL["b"], "max_iters": 2000},
    "bounds": {"b": SMALL["b"], "candidates": {"kind": "hyperbolic_cross", "n": 6}},
    "selftest": {},
}
OUTPUT = {
    "converge": "records.csv",
    "chernoff": "chernoff.csv",
    "reconstruct": "coefficients.csv",
    "bounds": "bounds.csv",
    "selftest": "selftest.csv",
}


def write_config(tmp_path, data, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(tmp_path, command, data, out="out", extra=()):
    cfg = write_config(tmp_path, data)
    out_dir = tmp_path / out
    rc = main([command, "--config", cfg, "--out-dir", str(out_dir), *extra])
    return rc, out_dir


def test_git_blob_hash():
    # matches `git hash-object` for these contents
    assert git_blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
    assert git_blob_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_selftest_exits_zero(tmp_path, capsys):
    assert main(["selftest", "--out-dir", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert (tmp_path / "selftest.csv").read_text().startswith("schema=1,check,passed")


def test_converge_outputs(tmp_path):
    rc, out = run(tmp_path, "converge", SMALL)
    assert rc == 0
    lines = (out / "records.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER
    summary = json.loads((out / "summary.json").read_text())
    assert len(lines) - 1 == len(SMALL["m_grid"]) * SMALL["trials"] - len(summary["failures"])
    assert summary["config"]["m_grid"] == SMALL["m_grid"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["trials"] == 2
    assert "c.json" in manifest["inputs"] and "<config>" in manifest["inputs"]
    assert set(manifest["rng_streams"]) >= {"train", "test"}
    assert manifest["rng_streams"]["train"]["id"] != manifest["rng_streams"]["test"]["id"]
    assert {"numpy", "scipy", "python"} <= set(manifest["versions"])
    assert "records.csv" in manifest["outputs"]


def test_seed_override(tmp_path):
    _, a = run(tmp_path, "converge", SMALL, out="a", extra=["--seed", "1"])
    _, b = run(tmp_path, "converge", SMALL, out="b", extra=["--seed", "2"])
    assert (a / "records.csv").read_text() != (b / "records.csv").read_text()
    assert json.loads((a / "manifest.json").read_text())["config"]["seed"] == 1


def test_timing_opt_in(tmp_path):
    rc, out = run(tmp_path, "converge", {**SMALL, "record_timing": True})
    assert rc == 0 and (out / "timings.csv").exists()


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_run_twice_identical(tmp_path, command):
    rc1, a = run(tmp_path, command, CONFIGS[command], out="a", extra=["--seed", "3"])
    rc2, b = run(tmp_path, command, CONFIGS[command], out="b", extra=["--seed", "3"])
    assert rc1 == rc2 == 0
    for name in (OUTPUT[command], "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_threads_do_not_change_output(tmp_path):
    _, a = run(tmp_path, "converge", SMALL, out="a", extra=["--threads", "1"])
    _, b = run(tmp_path, "converge", SMALL, out="b", extra=["--threads", "4"])
    assert (a / "records.csv").read_bytes() == (b / "records.csv").read_bytes()


def test_reconstruct_from_samples(tmp_path):
    rng = np.random.default_rng(0)
    Y = rng.uniform(-1, 1, (80, 2))
    F = 1.0 / (2.0 - Y[:, 0] - 0.3 * Y[:, 1])
    path = tmp_path / "samples.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y_1", "y_2", "f_1"])
        w.writerows(np.column_stack([Y, F]).tolist())
    cfg = {"method": "ls", "samples": str(path), "b": {"kind": "explicit", "values": [1.0, 0.3]}}
    rc, out = run(tmp_path, "reconstruct", cfg)
    assert rc == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["m"] == 80 and diag["sigma_min"] > 0
    assert "samples.csv" in json.loads((out / "manifest.json").read_text())["inputs"]


def test_bounds_known(tmp_path):
    rc, out = run(tmp_path, "bounds", {"b": SMALL["b"], "candidates": {"kind": "known", "k": 20}})
    assert rc == 0 and len((out / "bounds.csv").read_text().splitlines()) > 2


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "trials": ,\n}')
    assert main(["converge", "--config", str(path), "--out-dir", str(tmp_path)]) == 2
    assert "bad.json:2:" in capsys.readouterr().err


@pytest.mark.parametrize("data,needle", [
    ({"trials": 0}, "trials"),
    ({"typo_field": 1}, "typo_field"),
    ({"m_grid": [100, "x"]}, "m_grid"),
])
def test_bad_field(tmp_path, capsys, data, needle):
    rc, _ = run(tmp_path, "converge", data)
    assert rc == 2
    assert needle in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["converge", "--config", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)]) == 2


def test_bad_flags(tmp_path):
    assert main(["converge", "--seed", "-1", "--out-dir", str(tmp_path)]) == 2
    assert main(["chernoff", "--threads", "0", "--out-dir", str(tmp_path)]) == 2


def test_partial_failure_exit(tmp_path, monkeypatch):
    import holorecon.harness as harness

    real = harness.run_trial

    def flaky(prob, m, trial):
        if trial == 0:
            raise FloatingPointError("injected")
        return real(prob, m, trial)

    monkeypatch.setattr(harness, "run_trial", flaky)
    rc, out = run(tmp_path, "converge", {**SMALL, "max_failure_frac": 0.25})
    assert rc == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["failure_frac"] == 0.5
    assert "injected" in summary["failures"][0]["error"]
    # the sweep continues past failures
    assert len((out / "records.csv").read_text().splitlines()) == 3
    rc, _ = run(tmp_path, "converge", {**SMALL, "max_failure_frac": 0.5}, out="ok")
    assert rc == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "holorecon.cli", "selftest", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
