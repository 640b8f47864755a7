import json
import subprocess
import sys

import numpy as np
import pytest

from twintet.cli import main
from twintet.io import load_surface, load_tet_mesh


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["fixtures", "sphere", str(d / "s.obj"), "--vertices", "200"]) == 0
    assert main(["tet", str(d / "s.obj"), "--seed", "1", "--out", str(d / "s.vtk"),
                 "--stats", str(d / "s.json")]) == 0
    return d


def test_fixtures_command(work, capsys):
    assert main(["fixtures", "two-cubes", str(work / "c.ply")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["fixture"] == "two-cubes" and out["faces"] == load_surface(work / "c.ply").n_faces
    assert main(["fixtures", "torus", str(work / "t.obj")]) == 2


def test_tet_outputs(work):
    tm = load_tet_mesh(work / "s.vtk")
    stats = json.loads((work / "s.json").read_text())
    assert stats["output"]["tets"] == tm.n_tets
    assert stats["output"]["inverted_tets"] == 0
    assert stats["params"]["rng_seed"] == 1


def test_tet_medit_and_threads(work):
    args = [str(work / "s.obj"), "--seed", "1", "--format", "medit", "--out",
            str(work / "s.mesh"), "--stats", str(work / "s8.json"), "--threads", "8"]
    assert main(["tet"] + args) == 0
    a = json.loads((work / "s.json").read_text())
    b = json.loads((work / "s8.json").read_text())
    a.pop("timings_ms"), b.pop("timings_ms")
    assert a == b
    assert np.array_equal(load_tet_mesh(work / "s.mesh").tets, load_tet_mesh(work / "s.vtk").tets)


def test_metric_and_report(work, capsys):
    csv = work / "s.csv"
    assert main(["metric", "--ref", str(work / "s.obj"), "--mesh", str(work / "s.vtk"),
                 "--landmarks", "8", "--csv", str(csv), "--colored", str(work / "c.ply"),
                 "--summary", str(work / "m.json")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["landmarks"] == 8 and summary["median"] <= 1e-6
    figs = work / "figs"
    assert main(["report", str(csv), str(csv), "--labels", "a,b", "--mesh", str(work / "s.vtk"),
                 "--colored", str(work / "r.ply"), "--figures", str(figs),
                 "--summary", str(work / "r.json")]) == 0
    assert (figs / "scores_hist.png").stat().st_size > 0
    assert (figs / "scores_map.png").stat().st_size > 0
    assert set(json.loads((work / "r.json").read_text())) == {"a", "b"}
    assert (work / "r.ply").exists()


def test_smooth(work):
    out = work / "smooth"
    assert main(["smooth", "--mesh", str(work / "s.vtk"), "--iters", "4",
                 "--snapshot-every", "2", "--out-dir", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["smooth_00000.ply", "smooth_00002.ply", "smooth_00004.ply",
                     "smooth_final.ply"]
    assert main(["smooth", "--mesh", str(work / "s.obj"), "--iters", "2",
                 "--out", str(work / "sm.obj")]) == 0


def test_delaunay(work, capsys):
    pts = np.random.default_rng(0).random((30, 3))
    np.savetxt(work / "p.xyz", pts)
    assert main(["delaunay", str(work / "p.xyz"), "--check", "--out", str(work / "p.vtk")]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["empty_sphere_violations"] == 0 and stats["points"] == 30
    np.savetxt(work / "flat.xyz", np.column_stack([pts[:, :2], np.zeros(30)]))
    assert main(["delaunay", str(work / "flat.xyz")]) == 1


@pytest.mark.parametrize("argv", [
    ["tet", "missing.obj"],
    ["tet", "{d}/s.obj", "--epsilon", "-1"],
    ["tet", "{d}/s.obj", "--radius", "1e-12"],
    ["tet", "{d}/s.obj", "--out", "/nonexistent/dir/x.vtk"],
    ["tet", "{d}/s.obj", "--flood-seed", "1,2"],
    ["smooth", "--mesh", "{d}/s.obj", "--snapshot-every", "3"],
    ["report", "{d}/s.obj"],
    ["metric", "--ref", "{d}/s.obj"],
    ["bogus"],
])
def test_usage_errors_exit_2(work, argv):
    argv = [a.replace("{d}", str(work)) for a in argv]
    assert main(argv) == 2


def test_compute_error_exit_1(work):
    assert main(["tet", str(work / "s.obj"), "--flood-seed", "9,9,9"]) == 1


def test_module_entry_point(work):
    r = subprocess.run([sys.executable, "-m", "twintet", "fixtures", "sphere",
                        str(work / "m.off"), "--vertices", "50"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "twintet", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "tet" in r.stdout
