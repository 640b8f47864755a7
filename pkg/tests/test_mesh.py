import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twintet import fixtures
from twintet.mesh import (INTERIOR, MeshError, SurfaceGraph, SurfaceMesh, TetMesh,
                          average_edge_length, extract_boundary_surface)

CUBE_TETS = np.array([[0, 1, 3, 7], [0, 1, 5, 7], [0, 2, 3, 7],
                      [0, 2, 6, 7], [0, 4, 5, 7], [0, 4, 6, 7]])
CUBE_PTS = np.array([[i & 1, (i >> 1) & 1, (i >> 2) & 1] for i in range(8)], float)


def tetra_surface():
    pos = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    return SurfaceMesh(pos, [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])


def test_rejects_bad_indices():
    with pytest.raises(MeshError):
        SurfaceMesh([[0, 0, 0]], [[0, 1, 2]])
    with pytest.raises(MeshError):
        SurfaceMesh(np.zeros((3, 3)), [[0, 0, 1]])
    with pytest.raises(MeshError):
        TetMesh(np.zeros((4, 3)), [[0, 1, 2, 2]])
    with pytest.raises(MeshError):
        TetMesh(np.zeros((4, 3)), [[0, 1, 2, 3]], kind=np.zeros(3))


def test_arrays_are_read_only():
    m = tetra_surface()
    with pytest.raises(ValueError):
        m.positions[0, 0] = 5.0


def test_outward_normals_on_tetra():
    m = tetra_surface()
    centre = m.positions.mean(axis=0)
    fc = m.positions[m.faces].mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", m.face_normals, fc - centre) > 0)
    assert np.all(np.einsum("ij,ij->i", m.vertex_normals, m.positions - centre) > 0)
    assert np.allclose(np.linalg.norm(m.vertex_normals, axis=1), 1.0)


def test_isolated_and_cancelling_vertices_are_degenerate():
    pos = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]]
    # the same triangle twice with opposite orientation cancels its normals
    m = SurfaceMesh(pos, [[0, 1, 2], [0, 2, 1]])
    assert m.degenerate_vertices.tolist() == [True, True, True, True]
    assert np.all(m.vertex_normals == 0)
    assert m.summary()["duplicate_faces"] == 1


def test_summary_counts_zero_area():
    m = SurfaceMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], [[0, 1, 2], [0, 1, 3]])
    s = m.summary()
    assert s["zero_area_faces"] == 1 and s["faces"] == 2 and s["vertices"] == 4


def test_edges_and_lengths():
    m = tetra_surface()
    assert len(m.edges) == 6
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    assert np.allclose(np.sort(m.edge_lengths), [1, 1, 1] + [np.sqrt(2)] * 3)
    assert average_edge_length(m) == pytest.approx((3 + 3 * np.sqrt(2)) / 6)


def test_graph_parallel_edges_keep_shortest():
    g = SurfaceGraph.from_edges(3, [[0, 1], [1, 0], [1, 2], [2, 2]], [2.0, 1.0, 3.0, 7.0])
    assert g.edges.tolist() == [[0, 1], [1, 2]]
    assert g.weights.tolist() == [1.0, 3.0]
    assert sorted(g.neighbors(1).tolist()) == [0, 2]


def test_graph_zero_weight_is_clamped():
    g = SurfaceGraph.from_edges(2, [[0, 1]], [0.0])
    assert g.weights[0] > 0


def test_boundary_of_cube_tets():
    tm = TetMesh(CUBE_PTS, CUBE_TETS)
    assert tm.kind.tolist() == [INTERIOR] * 8
    assert np.abs(tm.signed_volumes()).sum() == pytest.approx(1.0)
    surf, graph, vmap = extract_boundary_surface(tm)
    assert surf.n_faces == 12 and surf.n_vertices == 8
    assert sorted(vmap.tolist()) == list(range(8))
    # outward orientation: the divergence theorem gives the enclosed volume
    p = surf.positions[surf.faces]
    vol = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6
    assert vol == pytest.approx(1.0)
    assert graph.n_vertices == 8


def test_boundary_of_empty_mesh():
    surf, graph, vmap = extract_boundary_surface(TetMesh(np.zeros((0, 3)), np.zeros((0, 4))))
    assert surf.n_faces == 0 and len(vmap) == 0


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_boundary_is_closed_for_random_tet_subsets(seed):
    rng = np.random.default_rng(seed)
    keep = rng.random(6) < 0.6
    if not keep.any():
        keep[0] = True
    # reverse some tets: orientation must not matter
    tets = CUBE_TETS[keep].copy()
    flip = rng.random(len(tets)) < 0.5
    tets[flip] = tets[flip][:, [1, 0, 2, 3]]
    surf, _, _ = extract_boundary_surface(TetMesh(CUBE_PTS, tets))
    e = np.sort(np.concatenate([surf.faces[:, [0, 1]], surf.faces[:, [1, 2]],
                                surf.faces[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert np.all(counts % 2 == 0)  # every edge of a closed surface pairs up
    p = surf.positions[surf.faces]
    vol = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6
    assert vol == pytest.approx(keep.sum() / 6)


def test_sphere_fixture_is_watertight():
    m = fixtures.by_name("sphere")
    e = np.sort(np.concatenate([m.faces[:, [0, 1]], m.faces[:, [1, 2]],
                                m.faces[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert np.all(counts == 2)
    assert m.summary()["degenerate_normals"] == 0
