import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bellman_ford, brute_nearest
from twintet import fixtures
from twintet.mesh import SurfaceGraph, SurfaceMesh, TetMesh
from twintet.metric import (LandmarkSet, connectivity_scores, dijkstra_surface, lower_median,
                            nearest_vertices, read_scores_csv, score_graphs, select_landmarks,
                            surface_scores)


@pytest.fixture(scope="module")
def sphere():
    return fixtures.by_name("sphere", n_vertices=300)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_dijkstra_matches_bellman_ford(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 25))
    m = int(rng.integers(1, 60))
    edges = rng.integers(0, n, (m, 2))
    edges = edges[edges[:, 0] != edges[:, 1]]
    if len(edges) == 0:
        return
    w = rng.random(len(edges)) + 0.01
    g = SurfaceGraph.from_edges(n, edges, w)
    got = dijkstra_surface(g, 0)
    want = bellman_ford(n, edges.tolist(), w.tolist(), 0)
    assert np.allclose(got, want)
    assert np.array_equal(np.isinf(got), np.isinf(want))


def test_lower_median():
    v = np.array([[3.0, 1.0], [1.0, np.inf], [2.0, np.inf], [10.0, np.nan]])
    assert lower_median(v).tolist() == [2.0, 1.0]
    assert lower_median(np.array([[1.0], [2.0]])).tolist() == [1.0]  # lower of the middle two
    assert lower_median(np.array([[np.inf]])).tolist() == [np.inf]


def test_nearest_vertices_matches_brute_force():
    rng = np.random.default_rng(0)
    t = rng.random((400, 3))
    q = rng.random((300, 3)) * 1.2 - 0.1
    assert np.array_equal(nearest_vertices(q, t), brute_nearest(q, t))
    # ties go to the lower index
    assert nearest_vertices([[0.5, 0, 0]], [[0, 0, 0], [1, 0, 0]]).tolist() == [0]
    # planar input is accepted
    assert nearest_vertices([[0.9, 0.1]], [[0, 0], [1, 0]]).tolist() == [1]


def test_fps_landmarks(sphere):
    lm = select_landmarks(sphere, 8)
    assert lm.indices[0] == 0 and len(set(lm.indices.tolist())) == 8
    g = sphere.graph()
    # the second landmark is a farthest vertex from the first
    d0 = dijkstra_surface(g, 0)
    assert d0[lm.indices[1]] == d0.max()
    # greedy property: each pick maximises its distance to those before
    for i in range(2, 8):
        prev = dijkstra_surface(g, lm.indices[:i]).min(axis=0)
        assert prev[lm.indices[i]] == pytest.approx(prev.max())


def test_stride_and_errors(sphere):
    assert select_landmarks(sphere, 3, "stride").indices.tolist() == [0, 100, 200]
    with pytest.raises(ValueError):
        select_landmarks(sphere, 0)
    with pytest.raises(ValueError):
        select_landmarks(sphere, 10**6)
    with pytest.raises(ValueError):
        select_landmarks(sphere, 4, "random")
    with pytest.raises(ValueError):
        LandmarkSet([1, 1])


def test_identical_surface_scores_zero(sphere):
    rep = surface_scores(sphere, sphere, k=16)
    assert np.all(rep.scores == 0.0)
    assert rep.summary()["median"] == 0.0


def test_disconnected_candidate_scores_inf(sphere):
    # two far-apart triangles; the only landmark sources into the first
    far = int(np.argmin(sphere.positions[sphere.faces].mean(axis=1) @ sphere.positions[0]))
    f = np.concatenate([sphere.faces[0], sphere.faces[far]])
    lone = SurfaceMesh(sphere.positions[f], [[0, 1, 2], [3, 4, 5]])
    rep = surface_scores(lone, sphere, LandmarkSet([int(f[0])]))
    assert np.all(np.isfinite(rep.scores[:3]))
    assert np.all(np.isinf(rep.scores[3:]))
    assert rep.summary()["infinite"] == 3


def test_shortcut_raises_scores():
    # a half circle path whose two ends are joined by a chord
    n = 20
    a = np.linspace(0, np.pi, n)
    pos = np.column_stack([np.cos(a), np.sin(a)])
    path = np.stack([np.arange(n - 1), np.arange(1, n)], 1)
    w = np.linalg.norm(pos[path[:, 0]] - pos[path[:, 1]], axis=1)
    ref = SurfaceGraph.from_edges(n, path, w)
    cand = SurfaceGraph.from_edges(n, np.vstack([path, [[0, n - 1]]]), np.append(w, 2.0))
    lm = LandmarkSet([0])
    s_same, _, _ = score_graphs(ref, pos, ref, pos, lm)
    s_cut, _, _ = score_graphs(cand, pos, ref, pos, lm)
    assert np.all(s_same == 0)
    d_ref = dijkstra_surface(ref, 0)
    assert np.allclose(s_cut, np.abs(dijkstra_surface(cand, 0) - d_ref))
    assert s_cut[-1] == pytest.approx(d_ref[-1] - 2.0)


def test_scores_by_hand():
    """Every term of the score on a small example, worked out explicitly."""
    ref_pos = np.array([[0, 0], [1, 0], [2, 0], [3, 0]], float)
    ref = SurfaceGraph.from_edges(4, [[0, 1], [1, 2], [2, 3]], [1, 1, 1])
    cand_pos = np.array([[0.1, 0], [2.9, 0], [1.1, 0]])
    cand = SurfaceGraph.from_edges(3, [[0, 1], [0, 2]], [0.5, 1.0])
    s, closest, sources = score_graphs(cand, cand_pos, ref, ref_pos, LandmarkSet([0, 3, 1]))
    assert closest.tolist() == [0, 3, 1]
    assert sources.tolist() == [0, 1, 2]
    # landmark 0: d_mesh [0, .5, 1]   d_ref [0, 3, 1] -> [0, 2.5, 0]
    # landmark 3: d_mesh [.5, 0, 1.5] d_ref [3, 0, 2] -> [2.5, 0, .5]
    # landmark 1: d_mesh [1, 1.5, 0]  d_ref [1, 2, 0] -> [0, .5, 0]
    assert np.allclose(s, [0.0, 0.5, 0.0])


def test_connectivity_scores_on_tet_mesh(tmp_path):
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    tm = TetMesh(pts, [[0, 1, 2, 3]])
    ref = SurfaceMesh(pts, [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    rep = connectivity_scores(tm, ref, k=2)
    assert np.all(rep.scores == 0)
    path = tmp_path / "s.csv"
    rep.write_csv(path)
    ids, scores = read_scores_csv(path)
    assert np.array_equal(ids, rep.vertex_ids) and np.array_equal(scores, rep.scores)
    rep.write_summary(tmp_path / "s.json")
    with pytest.raises(ValueError):
        connectivity_scores(TetMesh(np.zeros((0, 3)), np.zeros((0, 4))), ref)


def test_threads_do_not_change_scores(sphere):
    verts = sphere.positions + 0.001
    cand = SurfaceMesh(verts, sphere.faces)
    lm = select_landmarks(sphere, 8)
    a, _, _ = score_graphs(cand.graph(), verts, sphere.graph(), sphere.positions, lm, 1)
    b, _, _ = score_graphs(cand.graph(), verts, sphere.graph(), sphere.positions, lm, 4)
    assert np.array_equal(a, b)
