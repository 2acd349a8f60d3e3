import json
import subprocess
import sys

import numpy as np
import pytest

from cshsim.cli import EXIT_BLOWUP, EXIT_DATA, EXIT_OK, main
from cshsim.io import read_diagnostics, read_snapshot


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


ZERO = """
[grid]
n = 8
[scheme]
dt = 0.05
t_end = 0.2
[initial]
kind = zero
"""

LINEAR = """
[grid]
n = 16
[scheme]
dt = 0.01
t_end = 1.0
stride = 10
gauge_coupling = false
[potential]
coefficients = 1.0
[initial]
kind = plane-wave
mode = 1, 1
amplitude = 0.5
"""

RANDOM = """
[grid]
n = 32
[scheme]
dt = 0.01
t_end = 0.1
stride = 5
[potential]
coefficients = -1.0, 1.0
[initial]
kind = random-band
kmax = 2
seed = 4
"""


def run(tmp_path, text, *extra):
    out = tmp_path / "out"
    code = main(["run", write_cfg(tmp_path, text), "--out", str(out), "--quiet", *extra])
    return code, out


class TestRun:
    def test_zero(self, tmp_path):
        code, out = run(tmp_path, ZERO)
        assert code == EXIT_OK
        recs = read_diagnostics(out / "diagnostics.csv")
        assert len(recs) == 5
        assert all(v == 0 for r in recs for v in r.row()[1:])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "ok" and summary["energy_final"] == 0

    def test_linear_mode(self, tmp_path):
        code, out = run(tmp_path, LINEAR)
        assert code == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["linear_mode_error"] <= 1e-8
        assert summary["energy_drift"] < 1e-10
        assert summary["bounds"] is None

    def test_outputs(self, tmp_path):
        code, out = run(tmp_path, RANDOM)
        assert code == EXIT_OK
        assert {p.name for p in out.iterdir()} == {
            "config.txt", "initial.bin", "final.bin", "diagnostics.csv", "summary.json"
        }
        assert read_snapshot(out / "final.bin").t == pytest.approx(0.1)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["linear_mode_error"] is None
        assert summary["bounds"]["applicable"] and summary["bounds"]["gronwall_ok"]

    def test_obstruction(self, tmp_path, capsys):
        # a travelling wave carries nonzero mean charge, which the torus forbids
        code, _ = run(tmp_path, LINEAR.replace("gauge_coupling = false", ""))
        assert code == EXIT_DATA
        assert "Im(conj(phi0) phi1)" in capsys.readouterr().err

    def test_blow_up(self, tmp_path):
        text = RANDOM.replace("dt = 0.01", "dt = 0.5").replace("t_end = 0.1", "t_end = 50.0")
        text = text.replace("stride = 5", "stride = 1")
        text = text.replace("[scheme]\n", "[scheme]\nformulation = direct\n", 1)
        code, out = run(tmp_path, text)
        assert code == EXIT_BLOWUP
        recs = read_diagnostics(out / "diagnostics.csv")
        assert len(recs) >= 1 and all(np.isfinite(r.energy) for r in recs)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "blow-up"

    def test_bad_config(self, tmp_path, capsys):
        code, _ = run(tmp_path, ZERO.replace("dt = 0.05", "dt = -1"))
        assert code == EXIT_DATA
        assert "scheme.dt must be positive" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.cfg"), "--quiet"]) == EXIT_DATA

    def test_deterministic(self, tmp_path):
        cfg = write_cfg(tmp_path, RANDOM)
        for d in ("a", "b"):
            assert main(["run", cfg, "--out", str(tmp_path / d), "--quiet"]) == EXIT_OK
        for name in ("diagnostics.csv", "final.bin", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_override(self, tmp_path):
        cfg = write_cfg(tmp_path, RANDOM)
        main(["run", cfg, "--out", str(tmp_path / "a"), "--quiet"])
        main(["run", cfg, "--out", str(tmp_path / "b"), "--quiet", "--seed", "5"])
        assert (tmp_path / "a" / "initial.bin").read_bytes() != (tmp_path / "b" / "initial.bin").read_bytes()
        assert "seed = 5" in (tmp_path / "b" / "config.txt").read_text()

    def test_from_snapshot(self, tmp_path):
        code, out = run(tmp_path, RANDOM)
        snap = out / "final.bin"
        text = RANDOM.replace("kind = random-band", f"kind = from-snapshot\npath = {snap}")
        code = main(["run", write_cfg(tmp_path, text, "b.cfg"), "--out", str(tmp_path / "b"), "--quiet"])
        assert code == EXIT_OK
        assert read_snapshot(tmp_path / "b" / "final.bin").t == pytest.approx(0.2)
        bad = text.replace("n = 32", "n = 64")
        assert main(["run", write_cfg(tmp_path, bad, "c.cfg"), "--out", str(tmp_path / "c"), "--quiet"]) == EXIT_DATA


class TestCheck:
    def test_report(self, tmp_path, capsys):
        _, out = run(tmp_path, RANDOM)
        capsys.readouterr()
        assert main(["check", str(out / "final.bin"), "--potential", "-1", "1"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["n"] == 32 and report["t"] == pytest.approx(0.1)
        assert report["constraint_l2"] < 1e-8

    def test_bad_snapshot(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"nonsense")
        assert main(["check", str(p)]) == EXIT_DATA


class TestGaugeDemo:
    def test_commutes(self, tmp_path):
        text = RANDOM + "[gauge]\nchi_amplitude = 0.3\n"
        out = tmp_path / "g"
        assert main(["gauge-demo", write_cfg(tmp_path, text), "--out", str(out), "--quiet"]) == EXIT_OK
        summary = json.loads((out / "gauge_demo.json").read_text())
        assert summary["max_difference"] < 1e-8
        assert summary["energy_change"] < 1e-10 and summary["I_change"] < 1e-10
        assert (out / "gauge_demo.csv").read_text().startswith("t,phi_sup")


class TestEstimates:
    def test_small_batch(self, tmp_path):
        text = ZERO + "[estimates]\nresolutions = 16, 32\nseeds = 3\nsamples = 2000\n"
        out = tmp_path / "e"
        assert main(["estimates", write_cfg(tmp_path, text), "--out", str(out), "--quiet"]) == EXIT_OK
        lines = (out / "estimates.csv").read_text().splitlines()
        assert lines[0] == "inequality,n,seeds,max_ratio,min_ratio,mean_ratio" and len(lines) == 5
        summary = json.loads((out / "estimates.json").read_text())
        assert summary["null_symbol_violations"] == 0 and summary["angle_ratio_sup"] > 0


def test_module_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, ZERO)
    proc = subprocess.run(
        [sys.executable, "-m", "cshsim", "run", cfg, "--out", str(tmp_path / "m")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "ok: t = 0.2" in proc.stdout
