"""End-to-end acceptance checks.  Each test prints one PASS/FAIL line."""

import json
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import pipeline_run, surface
from oracles import convex_hull_volume, insphere_exact, orient3d_exact, winding_numbers
from twintet import fixtures
from twintet.cli import main
from twintet.delaunay import delaunay3d, empty_sphere_violations
from twintet.grid import build_grid
from twintet.mesh import INTERIOR
from twintet.metric import connectivity_scores, select_landmarks
from twintet.pipeline import (InsideTester, PipelineParams, global_cut_check, prepare_grid,
                              run_pipeline, stats_without_timings)
from twintet.predicates import insphere, orient3d, signed_volumes
from twintet.sim import SmoothParams, smooth_tet_mesh


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        assert ok, f"criterion {n} failed: {detail}"

    return emit


def test_c01_delaunay_correctness(report):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    violations, worst = 0, 0.0
    for _ in range(100):
        p = rng.random((50, 3))
        dt = delaunay3d(p)
        violations += empty_sphere_violations(dt)
        hull = convex_hull_volume(p)
        worst = max(worst, abs(signed_volumes(p[dt.tets]).sum() - hull) / hull)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and worst <= 1e-9 and elapsed < 10.0
    report(1, "Delaunay empty sphere and hull volume", ok,
           f"violations={violations} max_rel_volume_err={worst:.2e} time={elapsed:.2f}s")


def test_c02_twins_are_delaunay_edges(report):
    m = fixtures.sphere(500)
    eps = 1e-6 * float(m.edge_lengths.min())
    run = run_pipeline(m, PipelineParams(epsilon=eps, rng_seed=0))
    assert run.params.epsilon == eps
    # brute-force edge lookup straight from the cells
    edges = set()
    for t in run.dt.tets.tolist():
        for i in range(4):
            for j in range(i + 1, 4):
                edges.add((min(t[i], t[j]), max(t[i], t[j])))
    pairs = [(2 * i, 2 * i + 1) for i in range(m.n_vertices)]
    found = sum(p in edges for p in pairs)
    # pairs whose two twins both survive to the final mesh
    src = run.mesh.source[run.mesh.kind != INTERIOR]
    both = np.flatnonzero(np.bincount(src, minlength=m.n_vertices) == 2)
    both_found = sum(pairs[i] in edges for i in both)
    ok = found == len(pairs) and both_found == len(both)
    report(2, "twin pairs are pre-cut Delaunay edges", ok,
           f"{found}/{len(pairs)} pairs are edges; {both_found}/{len(both)} surviving pairs")


def test_c03_cut_completeness(report):
    remaining = {}
    for name in fixtures.FIXTURES:
        remaining[name] = global_cut_check(pipeline_run(name))
    ok = all(v == 0 for v in remaining.values())
    report(3, "no tet left crossing a face (all-pairs)", ok, json.dumps(remaining))


def test_c04_connectivity_ordering(report):
    start = time.perf_counter()
    m = fixtures.fused_spheres(0.2)
    run = run_pipeline(m, PipelineParams(rng_seed=0))
    lm = select_landmarks(m, 32, "fps")
    ours = connectivity_scores(run.mesh, m, lm).median
    naive = connectivity_scores(run.naive_mesh(), m, lm).median
    elapsed = time.perf_counter() - start
    ok = naive >= 5 * ours and elapsed < 60.0
    report(4, "fused spheres: naive median >= 5x ours", ok,
           f"vertices={m.n_vertices} ours={ours:.3e} naive={naive:.3e} time={elapsed:.1f}s")


def test_c05_clean_sphere_metric(report):
    m = surface("sphere")
    assert m.n_vertices == 1000
    rep = connectivity_scores(pipeline_run("sphere").mesh, m, k=32)
    med = rep.median
    report(5, "clean sphere median C", med <= 1e-6, f"median={med:.3e} max={rep.summary()['max']:.3e}")


def _crest_distance(tm, positions, crest_a, crest_b):
    pa = positions[np.isin(tm.source, crest_a) & (tm.kind != INTERIOR)]
    pb = positions[np.isin(tm.source, crest_b) & (tm.kind != INTERIOR)]
    return float(np.linalg.norm(pa[:, None] - pb[None], axis=2).min())


def test_c06_smoothing_separation(report):
    _, crest_a, crest_b = fixtures.two_ridges()
    run = pipeline_run("two-ridges")
    params = SmoothParams(iterations=100, lam=0.5)
    out = {}
    for label, tm in (("ours", run.mesh), ("naive", run.naive_mesh())):
        before = _crest_distance(tm, tm.positions, crest_a, crest_b)
        after = _crest_distance(tm, smooth_tet_mesh(tm, params).positions, crest_a, crest_b)
        out[label] = (before, after)
    ok = out["ours"][1] > out["ours"][0] and out["naive"][1] < out["ours"][1]
    report(6, "smoothing pulls ridges apart only with the cut", ok,
           "ours {:.4f}->{:.4f}, naive {:.4f}->{:.4f}".format(*out["ours"], *out["naive"]))


@pytest.mark.parametrize("name, bar", [("sphere", 0.99), ("sphere-hole", 0.95)])
def test_c07_inside_test_vs_winding_number(report, name, bar):
    m = surface(name)
    grid = prepare_grid(m, float(m.edge_lengths.mean()))
    tester = InsideTester(m, grid)
    lo, hi = m.bbox()
    pad = 0.1 * (hi - lo)
    pts = np.random.default_rng(7).uniform(lo - pad, hi + pad, (10_000, 3))
    truth = winding_numbers(pts, m.positions, m.faces) > 0.5
    agree = float(np.mean(tester.classify_many(pts) == truth))
    report(7, f"six-ray vs winding number on {name}", agree >= bar,
           f"agreement={agree:.4f} (bar {bar})")


def test_c08_sampling_invariants(report):
    worst_r, worst_twin, n_checked = np.inf, np.inf, 0
    for name in fixtures.FIXTURES:
        run = pipeline_run(name)
        pts, kind = run.points.points, run.points.kind
        r, eps = run.params.radius, run.params.epsilon
        inner = pts[kind == INTERIOR]
        # interior against every point, twins included
        d = np.linalg.norm(inner[:, None] - pts[None], axis=2)
        d[np.arange(len(inner)), np.flatnonzero(kind == INTERIOR)] = np.inf
        worst_r = min(worst_r, float(d.min()) / r) if len(inner) else worst_r
        twins = pts[kind != INTERIOR]
        for p, q in zip(twins[0::2], twins[1::2]):
            gap2 = sum((Fraction(float(x)) - Fraction(float(y))) ** 2 for x, y in zip(p, q))
            worst_twin = min(worst_twin, float(gap2 / Fraction(2 * eps) ** 2))
        n_checked += len(inner)
    ok = worst_r >= 1 - 1e-12 and worst_twin >= 1.0
    report(8, "sample spacing and twin distance", ok,
           f"interior={n_checked} min_dist/r={worst_r:.6f} min_twin_gap^2/(2eps)^2={worst_twin:.12f}")


def test_c09_flood_fill_selectivity(report):
    m, box_a, box_b = fixtures.two_cubes()
    seed = tuple((box_a[0] + box_a[1]) / 2)
    run = run_pipeline(m, PipelineParams(rng_seed=0, flood_seed=seed))
    pos = run.mesh.positions[run.mesh.tets]
    in_b = np.all((pos >= box_b[0]) & (pos <= box_b[1]), axis=2).any(axis=1)
    ok = run.mesh.n_tets > 0 and not in_b.any()
    report(9, "seed in cube A keeps nothing of cube B", ok,
           f"tets={run.mesh.n_tets} touching_B={int(in_b.sum())}")


def test_c10_determinism(report, tmp_path):
    mismatched = []
    for name in fixtures.FIXTURES:
        src = tmp_path / f"{name}.obj"
        assert main(["fixtures", name, str(src)]) == 0
        outs = {}
        for threads in ("1", "8"):
            mesh, stats = tmp_path / f"{name}_{threads}.vtk", tmp_path / f"{name}_{threads}.json"
            assert main(["tet", str(src), "--seed", "42", "--threads", threads,
                         "--out", str(mesh), "--stats", str(stats)]) == 0
            outs[threads] = (mesh.read_text(),
                             stats_without_timings(json.loads(stats.read_text())))
        if outs["1"] != outs["8"]:
            mismatched.append(name)
    report(10, "threads 1 vs 8 identical", not mismatched,
           f"fixtures={len(fixtures.FIXTURES)} mismatched={mismatched}")


def _adversarial(rng, n):
    """Near-degenerate orient3d quadruples and insphere quintuples."""
    quads, quints = [], []
    for i in range(n):
        if i % 2:
            a, b, c = rng.integers(-64, 65, (3, 3)) / 64.0
            s, t = rng.integers(-8, 9, 2) / 8.0
            d = a + s * (b - a) + t * (c - a)          # exactly coplanar
        else:
            a, b, c = rng.random((3, 3)) * 2 - 1
            s, t = rng.random(2) * 3 - 1
            d = a + s * (b - a) + t * (c - a)
            d = d + rng.integers(-2, 3, 3) * np.spacing(d)
        quads.append((a, b, c, d))
        if i % 3 == 0:
            # octahedron vertices are exactly cospherical; some get a one-ulp nudge
            pts = np.array([(1, 0, 0), (0, -1, 0), (0, 0, 1), (0, 1, 0),
                            [(-1, 0, 0), (0, 0, -1)][i % 2]], float)
            pts[4] += rng.integers(-1, 2, 3) * np.spacing(1.0)
        else:
            pts = rng.normal(size=(5, 3))
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)  # cospherical up to rounding
            pts = pts * 2.0 + rng.random(3)
        quints.append(tuple(pts))
    return quads, quints


def test_c11_predicates_vs_rational(report):
    rng = np.random.default_rng(11)
    bad_o = bad_i = 0
    for p in rng.random((100_000, 5, 3)) * 2 - 1:
        p = [tuple(x) for x in p.tolist()]
        bad_o += orient3d(*p[:4]) != orient3d_exact(*p[:4])
        bad_i += insphere(*p) != insphere_exact(*p)
    quads, quints = _adversarial(rng, 1000)
    bad_ao = sum(orient3d(*q) != orient3d_exact(*q) for q in quads)
    bad_ai = sum(insphere(*q) != insphere_exact(*q) for q in quints)
    zeros = sum(orient3d(*q) == 0 for q in quads) + sum(insphere(*q) == 0 for q in quints)
    ok = bad_o == bad_i == bad_ao == bad_ai == 0
    report(11, "orient3d/insphere vs exact rational", ok,
           f"random mismatches {bad_o}/{bad_i}, adversarial mismatches {bad_ao}/{bad_ai}, "
           f"exact zeros hit={zeros}")
