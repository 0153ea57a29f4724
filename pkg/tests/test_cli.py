import json
import subprocess
import sys

import numpy as np
import pytest

from splinerad import cli, config as cfgmod, io
from splinerad.geometry import REFERENCE

SMALL = """
mode: sbd
seed: 3
pso: {swarm_size: 4, iterations: 4}
sbd: {offline: 8, reinforcement: 4}
proxy: {theta_step_deg: 1.0}
requirements: {q: 5}
"""


def chi_mm(scale=1.0):
    return ",".join(f"{v * 1e3 * scale:.6g}" for v in REFERENCE.values())


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    (d / "small.yaml").write_text(SMALL)
    rc = cli.main(["optimize", "--config", str(d / "small.yaml"), "--output-dir", str(d / "out")])
    assert rc == 0
    return d


def test_init_writes_parseable_template(tmp_path):
    assert cli.main(["init", "--output", str(tmp_path / "c.yaml")]) == 0
    assert cfgmod.load(tmp_path / "c.yaml") == cfgmod.RunConfig()


def test_evaluate_reference(capsys, tmp_path):
    assert cli.main(["evaluate", "--output-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    phi = float(next(l for l in out.splitlines() if l.startswith("phi = ")).split("=")[1])
    assert phi == pytest.approx(0.0046931, abs=1e-6)
    assert (tmp_path / "design_contour.csv").exists()
    assert len(out.splitlines()) == 1 + 41 + 6


def test_evaluate_wrong_arity(capsys):
    assert cli.main(["evaluate", "--chi-mm", "1,2,3"]) == 3
    assert capsys.readouterr().err.startswith("error: WrongArity:")


def test_evaluate_out_of_bounds(capsys):
    assert cli.main(["evaluate", "--chi-mm", chi_mm(2.0)]) == 3
    assert "OutOfBounds" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path, capsys):
    (tmp_path / "bad.yaml").write_text("mode: nope\n")
    assert cli.main(["evaluate", "--config", str(tmp_path / "bad.yaml")]) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_missing_config_exit_4(tmp_path):
    assert cli.main(["evaluate", "--config", str(tmp_path / "none.yaml")]) == 4


def test_metrics_from_exported_files(tmp_path, capsys):
    assert cli.main(["evaluate", "--output-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    rc = cli.main(["metrics", "--s11", str(tmp_path / "design_s11.csv"),
                   "--pattern", str(tmp_path / "design_pattern.csv"),
                   "--output", str(tmp_path / "rep.txt")])
    assert rc == 0
    doc = json.loads((tmp_path / "rep.json").read_text())
    assert doc["worst"]["sll_db"]["value"] == pytest.approx(-20.908, abs=0.01)


def test_metrics_needs_pattern(tmp_path):
    assert cli.main(["metrics", "--s11", str(tmp_path / "x.csv")]) == 2


def test_sample(tmp_path):
    assert cli.main(["sample", "--n", "6", "--seed", "1", "--output", str(tmp_path / "s.csv")]) == 0
    rows = io.read_csv_numbers(tmp_path / "s.csv")
    assert rows.shape == (6, 20)


def test_export_geometry(tmp_path):
    rc = cli.main(["export-geometry", "--chi-mm", chi_mm(), "--output", str(tmp_path / "c.csv"),
                   "--layout", str(tmp_path / "l.json")])
    assert rc == 0
    c = io.import_contour(tmp_path / "c.csv")
    assert np.array_equal(c[0], c[-1])
    assert json.loads((tmp_path / "l.json").read_text())["total_length"] == pytest.approx(18.866e-3)


def test_optimize_run_directory(small_run):
    out = small_run / "out"
    manifest = json.loads((out / io.MANIFEST).read_text())
    names = {e["file"] for e in manifest["files"]}
    assert {"history.csv", "timings.csv", "config.yaml", "summary.json", "model.json",
            "best_contour.csv", "best_s11.csv", "best_pattern.csv"} <= names
    for e in manifest["files"]:
        assert io.sha256_file(out / e["file"]) == e["sha256"]
    s = json.loads((out / io.SUMMARY).read_text())
    assert s["truth_calls_total"] <= 8 + 4 + 1
    assert s["mode"] == "sbd" and s["seed"] == 3


def test_replay_and_verify(small_run, capsys):
    out = small_run / "out"
    assert cli.main(["replay", str(out), "--output-dir", str(small_run / "rp"), "--verify"]) == 0
    text = capsys.readouterr().out
    rec = [l.split("= ")[1] for l in text.splitlines() if "sha256" in l]
    assert len(rec) == 2 and rec[0] == rec[1]
    for f in ("phi_trace.csv", "s11_curve.csv", "gain_cuts.csv"):
        assert (small_run / "rp" / f).exists()


def test_verify_detects_tampering(small_run, tmp_path):
    import shutil
    d = tmp_path / "copy"
    shutil.copytree(small_run / "out", d)
    m = json.loads((d / io.MANIFEST).read_text())
    for e in m["files"]:
        if e["file"] == io.HISTORY:
            e["sha256"] = "0" * 64
    (d / io.MANIFEST).write_text(json.dumps(m))
    assert cli.main(["replay", str(d), "--verify"]) == 3


def test_optimize_mode_override_is_echoed(tmp_path):
    (tmp_path / "c.yaml").write_text(SMALL)
    assert cli.main(["optimize", "--config", str(tmp_path / "c.yaml"), "--mode", "pso",
                     "--output-dir", str(tmp_path / "o")]) == 0
    assert cfgmod.load(tmp_path / "o" / "config.yaml").mode == "pso"
    s = json.loads((tmp_path / "o" / io.SUMMARY).read_text())
    assert s["truth_calls"] == {"init": 4, "pso": 16}


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "splinerad.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "optimize" in r.stdout
