import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import convex_hull_volume, incircle_exact, insphere_exact, orient3d_exact
from twintet.delaunay import (DelaunayError, delaunay2d, delaunay3d, empty_sphere_violations,
                              morton_order)
from twintet.predicates import signed_volumes


def rational_violations(tri):
    pts = [tuple(x) for x in tri.points.tolist()]
    test = insphere_exact if tri.points.shape[1] == 3 else incircle_exact
    bad = 0
    for cell in tri.tets.tolist():
        verts = [pts[v] for v in cell]
        bad += sum(test(*verts, q) > 0 for i, q in enumerate(pts) if i not in cell)
    return bad


def check_adjacency(tri):
    k = tri.tets.shape[1]
    for t, cell in enumerate(tri.tets.tolist()):
        for i in range(k):
            n = tri.neighbors[t, i]
            facet = set(cell) - {cell[i]}
            if n >= 0:
                assert facet <= set(tri.tets[n].tolist())
                assert t in tri.neighbors[n].tolist()
    # hull facets are exactly those used once
    facets = {}
    for cell in tri.tets.tolist():
        for f in itertools.combinations(sorted(cell), k - 1):
            facets[f] = facets.get(f, 0) + 1
    assert max(facets.values()) <= 2
    assert sum(v == 1 for v in facets.values()) == int((tri.neighbors < 0).sum())


def test_random_cloud_is_delaunay():
    rng = np.random.default_rng(0)
    p = rng.random((40, 3))
    tri = delaunay3d(p)
    assert rational_violations(tri) == 0
    assert empty_sphere_violations(tri) == 0
    vol = signed_volumes(p[tri.tets])
    assert np.all(vol > 0)
    assert vol.sum() == pytest.approx(convex_hull_volume(p), rel=1e-12)
    check_adjacency(tri)


def test_cospherical_lattice():
    # the cube lattice is maximally degenerate: many cospherical 5-tuples
    g = np.array(list(itertools.product(range(3), repeat=3)), float)
    tri = delaunay3d(g)
    assert rational_violations(tri) == 0
    assert all(orient3d_exact(*g[t]) > 0 for t in tri.tets)
    assert signed_volumes(g[tri.tets]).sum() == pytest.approx(8.0)
    assert len(np.unique(tri.tets.ravel())) == 27
    check_adjacency(tri)


def test_points_on_a_sphere():
    rng = np.random.default_rng(2)
    p = rng.normal(size=(30, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    tri = delaunay3d(np.vstack([p, [[0, 0, 0]]]))
    assert rational_violations(tri) == 0


def test_collinear_and_coplanar_subsets():
    p = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0], [0, 1, 0], [1, 1, 0],
                  [0, 0, 1], [5, 5, 5]], float)
    tri = delaunay3d(p)
    assert rational_violations(tri) == 0
    assert signed_volumes(p[tri.tets]).sum() == pytest.approx(convex_hull_volume(p))


def test_errors():
    with pytest.raises(DelaunayError, match="duplicate points 1 and 3"):
        delaunay3d([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 0], [0, 0, 1]])
    with pytest.raises(DelaunayError, match="coplanar"):
        delaunay3d([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    with pytest.raises(DelaunayError):
        delaunay3d([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    with pytest.raises(DelaunayError):
        delaunay3d([[0, 0, 0], [1, 0, 0], [0, 1, 0], [np.nan, 0, 1]])
    with pytest.raises(DelaunayError, match="collinear"):
        delaunay2d([[0, 0], [1, 1], [2, 2]])


def test_2d_triangulation():
    rng = np.random.default_rng(3)
    p = rng.random((60, 2))
    tri = delaunay2d(p)
    assert rational_violations(tri) == 0
    from scipy.spatial import ConvexHull

    a = p[tri.tets]
    area = 0.5 * ((a[:, 1, 0] - a[:, 0, 0]) * (a[:, 2, 1] - a[:, 0, 1])
                  - (a[:, 1, 1] - a[:, 0, 1]) * (a[:, 2, 0] - a[:, 0, 0]))
    assert np.all(area > 0)
    assert area.sum() == pytest.approx(ConvexHull(p).volume)
    check_adjacency(tri)


def test_2d_square_grid():
    g = np.array(list(itertools.product(range(4), repeat=2)), float)
    tri = delaunay2d(g)
    assert tri.n_tets == 18
    assert rational_violations(tri) == 0


def test_morton_order_is_a_permutation():
    rng = np.random.default_rng(4)
    p = rng.random((100, 3))
    o = morton_order(p)
    assert sorted(o.tolist()) == list(range(100))
    assert morton_order(np.zeros((3, 3))).tolist() == [0, 1, 2]


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4)),
                min_size=5, max_size=18, unique=True))
@settings(max_examples=40, deadline=None)
def test_integer_clouds_property(pts):
    p = np.array(pts, float)
    try:
        tri = delaunay3d(p)
    except DelaunayError:
        assert np.linalg.matrix_rank(p[1:] - p[0]) < 3
        return
    assert rational_violations(tri) == 0
    assert signed_volumes(p[tri.tets]).sum() == pytest.approx(convex_hull_volume(p))


def test_edges_unique_and_sorted():
    rng = np.random.default_rng(5)
    tri = delaunay3d(rng.random((20, 3)))
    e = tri.edges()
    assert np.all(e[:, 0] < e[:, 1])
    assert len(np.unique(e, axis=0)) == len(e)
