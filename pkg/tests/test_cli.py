import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hitchin_lab import cli
from hitchin_lab.lax_reduction import LoopField
from hitchin_lab.phase_space import PhasePoint
from hitchin_lab.special_functions import eisenstein_e2, wp


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.dispatch(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def phase_file(tmp_path):
    path = tmp_path / "x.json"
    assert run("phase", "generate", "--N", "3", "--kind", "rank1-spin", "--seed", "4", "--out", str(path))[0] == 0
    return path


class TestParsing:
    @pytest.mark.parametrize(
        "text,value",
        [("1+2i", 1 + 2j), ("i", 1j), ("-i", -1j), ("0.5+0.8i", 0.5 + 0.8j), ("3", 3), ("2.5e-1-1e-3i", 0.25 - 0.001j)],
    )
    def test_complex(self, text, value):
        assert cli.parse_complex(text) == value

    def test_grid_rectangle(self):
        grid = cli.parse_grid("0:1:3,0.1:0.2:2")
        assert len(grid) == 6 and grid[0] == 0.1j and grid[-1] == 1 + 0.2j

    def test_grid_list(self):
        assert cli.parse_grid("0.1+0.2i;0.3i") == [0.1 + 0.2j, 0.3j]

    def test_format(self):
        assert cli.fmt_complex(0.1 + 1 / 3j) == "0.10000000000000001 -0.33333333333333331"


class TestExitCodes:
    def test_schottky_dim(self):
        code, out, _ = run("schottky", "dim", "--N", "2", "--g", "2")
        assert code == 0 and out == "5\n"

    def test_schottky_dim_numeric(self):
        code, out, _ = run("schottky", "dim", "--N", "3", "--g", "2", "--numeric", "--seed", "1")
        assert code == 0 and out.split() == ["formula", "10", "numeric", "10"]

    def test_unknown_subcommand(self):
        assert run("bogus")[0] == 2

    def test_missing_phase(self, capsys):
        assert run("lax", "eval", "--zeta", "0.1+0.2i")[0] == 2
        assert "usage" in capsys.readouterr().err

    def test_domain_error_json(self, phase_file):
        code, out, err = run("lax", "eval", "--phase", str(phase_file), "--zeta", "0")
        assert code == 1 and out == ""
        payload = json.loads(err)
        assert payload["error"] == "spectral_pole" and payload["detail"]

    def test_missing_file(self, tmp_path):
        code, _, err = run("phase", "validate", "--phase", str(tmp_path / "nope.json"))
        assert code == 1 and json.loads(err)["error"] == "io_error"

    def test_bad_modulus(self):
        code, _, err = run("specialfn", "eval", "--fn", "e2", "--tau=-i")
        assert code == 1 and json.loads(err)["error"] == "invalid_modulus"

    def test_subprocess_entry(self):
        proc = subprocess.run(
            [sys.executable, "-m", "hitchin_lab.cli", "schottky", "dim", "--N", "3", "--g", "3"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0 and proc.stdout.strip() == "19"
        proc = subprocess.run([sys.executable, "-m", "hitchin_lab.cli", "nope"], capture_output=True, text=True)
        assert proc.returncode == 2


class TestSpecialfn:
    def test_e2(self):
        code, out, _ = run("specialfn", "eval", "--fn", "e2", "--tau", "i")
        re_, im_ = map(float, out.split())
        assert code == 0 and re_ == pytest.approx(3 / math.pi, abs=1e-14) and im_ == 0

    def test_wp_round_trip(self):
        _, out, _ = run("specialfn", "eval", "--fn", "wp", "--zeta", "0.31+0.17i", "--tau", "0.5+0.8i")
        re_, im_ = map(float, out.split())
        assert complex(re_, im_) == wp(0.31 + 0.17j, 0.5 + 0.8j)

    def test_theta_derivative(self):
        _, out, _ = run("specialfn", "eval", "--fn", "theta1", "--zeta", "0", "--tau", "i", "--order", "2")
        assert abs(complex(*map(float, out.split()))) < 1e-15


class TestPhase:
    def test_spinless(self, tmp_path):
        path = tmp_path / "s.json"
        run("phase", "generate", "--N", "4", "--kind", "spinless", "--out", str(path))
        x = PhasePoint.from_json(json.loads(path.read_text()))
        assert not x.p.any()

    def test_rank1(self, phase_file):
        x = PhasePoint.from_json(json.loads(phase_file.read_text()))
        assert np.trace(x.p) == 0
        full = np.asarray(x.p) + np.diag(cli.generate_phase(3, "rank1-spin", 4).discarded_diagonal)
        assert np.linalg.matrix_rank(full) == 1

    def test_determinism(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            run("phase", "generate", "--N", "3", "--seed", "9", "--out", str(path))
        assert a.read_bytes() == b.read_bytes()
        _, out1, _ = run("phase", "generate", "--N", "3", "--seed", "9")
        _, out2, _ = run("phase", "generate", "--N", "3", "--seed", "9")
        assert out1 == out2 == a.read_text()

    def test_validate(self, phase_file):
        code, out, _ = run("phase", "validate", "--phase", str(phase_file))
        data = json.loads(out)
        assert code == 0 and data["valid"] and data["N"] == 3

    def test_generate_rejects_small_N(self):
        assert run("phase", "generate", "--N", "1")[0] == 1


class TestLax:
    def test_eval(self, phase_file):
        code, out, _ = run("lax", "eval", "--phase", str(phase_file), "--zeta", "0.2+0.3i")
        mat = np.array(json.loads(out))
        x = PhasePoint.from_json(json.loads(phase_file.read_text()))
        assert code == 0 and mat.shape == (3, 3, 2)
        np.testing.assert_array_equal(mat[np.arange(3), np.arange(3), 0], x.w.real)

    def test_invariants(self, phase_file):
        code, out, _ = run("lax", "invariants", "--phase", str(phase_file), "--j", "1,2", "--grid", "0:0.5:3,0.2:0.4:2")
        lines = out.strip().splitlines()
        assert code == 0 and lines[0] == "zeta_re,zeta_im,j1_re,j1_im,j2_re,j2_im" and len(lines) == 7

    def test_hitchin_linear(self, phase_file):
        _, out, _ = run("lax", "hitchin", "--phase", str(phase_file), "--j", "1")
        x = PhasePoint.from_json(json.loads(phase_file.read_text()))
        assert complex(*map(float, out.split())) == pytest.approx(np.sum(x.w), abs=1e-12)

    def test_hitchin_bad_weight(self, phase_file):
        code, _, err = run("lax", "hitchin", "--phase", str(phase_file), "--nu", "oops")
        assert code == 1 and json.loads(err)["error"] == "invalid_config"

    def test_moment_check(self, phase_file):
        code, out, _ = run("lax", "moment-check", "--phase", str(phase_file), "--samples", "20", "--seed", "3")
        assert code == 0 and float(out) < 1e-10

    def test_fourier_and_plemelj(self, phase_file, tmp_path):
        loop_path = tmp_path / "loop.json"
        assert run("lax", "fourier", "--phase", str(phase_file), "--K", "6", "--out", str(loop_path))[0] == 0
        code, out, _ = run("lax", "plemelj", "--loop", str(loop_path))
        inside_path, outside_path = out.split()
        loop = LoopField.from_json(json.loads(loop_path.read_text()))
        inside = LoopField.from_json(json.loads(open(inside_path).read()))
        outside = LoopField.from_json(json.loads(open(outside_path).read()))
        assert code == 0
        np.testing.assert_array_equal(inside.coeffs + outside.coeffs, loop.coeffs)


class TestEvolve:
    def test_csv_and_sidecar(self, phase_file, tmp_path):
        out_csv = tmp_path / "traj.csv"
        code, out, _ = run(
            "evolve", "--phase", str(phase_file), "--steps", "20", "--record-every", "5",
            "--zetas", "0.3+0.4i,0.1+0.7i", "--out", str(out_csv),
        )
        assert code == 0
        lines = out_csv.read_text().strip().splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["t", "H_re", "H_im"] and "eig2_z1_im" in header
        assert len(lines) == 1 + 5
        sidecar = json.loads(open(out.strip()).read())
        assert sidecar["drifts"]["H"] < 1e-10 and sidecar["run"]["seed"] == 0

    def test_deterministic(self, phase_file, tmp_path):
        texts = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            run("evolve", "--phase", str(phase_file), "--steps", "10", "--out", str(path))
            texts.append(path.read_bytes())
        assert texts[0] == texts[1]

    def test_horizon_guard(self, phase_file, tmp_path):
        code, _, err = run("evolve", "--phase", str(phase_file), "--dt", "0.1", "--steps", "200", "--out", str(tmp_path / "t.csv"))
        assert code == 1 and json.loads(err)["error"] == "invalid_config"


class TestSchottkyCheck:
    def test_genus1(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"tau": [0.0, 1.0]}))
        code, out, _ = run("schottky", "check", "--config", str(path))
        assert code == 0 and json.loads(out) == {"valid": True, "genus": 1}

    def test_invalid_group(self, tmp_path):
        path = tmp_path / "g.json"
        cfg = {
            "generators": [[[1, 0], [1.5, 0], [0, 0], [1, 0]]],
            "circles": [[{"center": [0, 0], "radius": 1}, {"center": [1.5, 0], "radius": 1}]],
        }
        path.write_text(json.dumps(cfg))
        code, _, err = run("schottky", "check", "--config", str(path))
        assert code == 1 and json.loads(err)["error"] == "invalid_schottky_group"


def test_threads_env_does_not_change_output(phase_file, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("HITCHIN_LAB_THREADS", threads)
        outs.append(run("lax", "invariants", "--phase", str(phase_file), "--grid", "0:1:5,0.1:0.9:4")[1])
    assert outs[0] == outs[1]


def test_e2_matches_library():
    _, out, _ = run("specialfn", "eval", "--fn", "e2", "--tau", "2i")
    assert complex(*map(float, out.split())) == eisenstein_e2(2j)
