import math
import subprocess
import sys

import numpy as np
import pytest

from boxplus import axioms
from boxplus.cli import main
from boxplus.manifolds import Angle


class WrappedAngleNoNu(Angle):
    """Stores angles wrapped to [-pi, pi) but subtracts them plainly: no nu_pi."""

    name = "broken-angle"

    def _boxplus(self, x, d):
        return np.mod(x + d + math.pi, 2 * math.pi) - math.pi

    def _boxminus(self, y, x):
        return y - x

    def _random(self, rng, k):
        return rng.uniform(-math.pi, math.pi, size=(k, 1))


@pytest.fixture
def broken():
    axioms.register("broken-angle", WrappedAngleNoNu)
    yield "broken-angle"
    del axioms.MANIFOLDS["broken-angle"]


def test_axioms_all_pass(capsys):
    assert main(["axioms", "--trials", "300"]) == 0
    assert "all" in capsys.readouterr().out


def test_broken_angle_fails_4c(broken, capsys):
    assert main(["axioms", "--manifold", broken, "--trials", "200"]) == 1
    out = capsys.readouterr().out
    assert "broken-angle:4c" in out


def test_zero_trials(capsys):
    assert main(["axioms", "--trials", "0"]) == 0


def test_unknown_manifold_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["axioms", "--manifold", "klein-bottle"])
    assert exc.value.code == 2
    assert "unknown manifold" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["axioms", "--trials", "-1"],
    ["ins-sim", "--runs", "0"],
    ["ins-sim", "--bogus"],
    ["posegraph"],
    ["posegraph", "--synthetic", "20", "--method", "newton"],
    ["posegraph", "--synthetic", "20", "--in", "x.g2o"],
    [],
])
def test_bad_flags_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


@pytest.mark.parametrize("sub", ["axioms", "ins-sim", "posegraph"])
def test_help(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main([sub, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_ins_sim_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["ins-sim", "--runs", "1", "--duration", "5", "--seed", "0", "--out", str(out)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["report.csv", "sensors_seed0.csv", "trajectory.csv"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    header = (a / "report.csv").read_text().splitlines()[0]
    assert header == "t,rms_pos,rms_orient,rms_vel,nees," + ",".join(f"nmee_{i}" for i in range(1, 10))
    assert "position" in capsys.readouterr().out


def test_ins_sim_colored(tmp_path):
    assert main(["ins-sim", "--runs", "2", "--duration", "3", "--colored", "--out", str(tmp_path)]) == 0
    header = (tmp_path / "report.csv").read_text().splitlines()[0].split(",")
    assert header[-1] == "nmee_12"


def test_posegraph_synthetic_and_reload(tmp_path, capsys):
    out = tmp_path / "pg"
    assert main(["posegraph", "--synthetic", "30", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "initial RSS" in text and "final RSS" in text
    first = (out / "rss_trace.csv").read_bytes()
    assert main(["posegraph", "--synthetic", "30", "--out", str(out)]) == 0
    assert (out / "rss_trace.csv").read_bytes() == first
    again = tmp_path / "again"
    assert main(["posegraph", "--in", str(out / "input.g2o"), "--out", str(again)]) == 0
    assert (again / "rss_trace.csv").read_bytes() == first


def test_posegraph_methods_and_reprs(tmp_path):
    traces = {}
    for method in ("gn", "lm"):
        for rep in ("quat", "matrix"):
            out = tmp_path / f"{method}-{rep}"
            assert main(["posegraph", "--synthetic", "25", "--method", method, "--repr", rep, "--out", str(out)]) == 0
            rows = (out / "rss_trace.csv").read_text().splitlines()
            assert rows[0] == "iteration,rss,method,representation"
            assert rows[1].endswith(f",{method},{rep}")
            traces[method, rep] = np.array([float(r.split(",")[1]) for r in rows[1:]])
    for method in ("gn", "lm"):
        np.testing.assert_allclose(traces[method, "quat"], traces[method, "matrix"], atol=1e-6)


def test_posegraph_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.g2o"
    bad.write_text("VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\nEDGE_SE3:QUAT 0 1 oops\n")
    assert main(["posegraph", "--in", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "line 2" in capsys.readouterr().err


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "boxplus.cli", "axioms", "--manifold", "angle", "--trials", "50"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr


def test_suite_report_contents():
    res = axioms.run_suite("quaternion", trials=100, seed=3)
    checks = {r.check for r in res}
    assert {"4a", "4b", "4c", "4d", "metric-triangle", "iso-rot3", "chord-quaternion"} <= checks
    assert all(r.passed for r in res)
    assert axioms.triangle_scalar_gap(20) <= 1e-12
