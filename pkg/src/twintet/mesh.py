"""Mesh data model: surface meshes, tetrahedral meshes and edge graphs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

logger = logging.getLogger(__name__)

DEGENERATE_NORMAL_TOL = 1e-12

# provenance kinds carried by tet-mesh vertices
INTERIOR, TWIN_PLUS, TWIN_MINUS = 0, 1, 2

# outward faces of a positively oriented tetrahedron, face i opposite vertex i
TET_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


class MeshError(ValueError):
    """Raised for structurally invalid meshes."""


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Indexed triangle mesh.

    Parameters
    ----------
    positions : array_like, shape (n, 3)
    faces : array_like, shape (m, 3)
        Vertex indices; orientation defines face normals (right-handed).
    """

    positions: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        pos = _readonly(self.positions, float).reshape(-1, 3)
        fac = _readonly(self.faces, np.int64).reshape(-1, 3)
        if fac.size:
            if fac.min() < 0 or fac.max() >= len(pos):
                raise MeshError("face index out of range")
            if np.any((fac[:, 0] == fac[:, 1]) | (fac[:, 1] == fac[:, 2])
                      | (fac[:, 0] == fac[:, 2])):
                raise MeshError("face with repeated vertex index")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "faces", fac)

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def face_areas_normals(self) -> np.ndarray:
        """Unnormalised face normals; their norm is twice the face area."""
        p = self.positions[self.faces]
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def face_normals(self) -> np.ndarray:
        n = self.face_areas_normals
        length = np.linalg.norm(n, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(length > 0, n / length, 0.0)

    @cached_property
    def _normals(self):
        return compute_vertex_normals(self)

    @property
    def vertex_normals(self) -> np.ndarray:
        return self._normals[0]

    @property
    def degenerate_vertices(self) -> np.ndarray:
        return self._normals[1]

    @cached_property
    def edges(self) -> np.ndarray:
        """Deduplicated undirected edges, shape (k, 2), sorted rows."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0) if len(e) else e.reshape(0, 2)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.positions[e[:, 0]] - self.positions[e[:, 1]],
                              axis=1)

    @cached_property
    def incident_faces(self) -> list[np.ndarray]:
        order = np.argsort(self.faces.ravel(), kind="stable")
        verts = self.faces.ravel()[order]
        bounds = np.searchsorted(verts, np.arange(self.n_vertices + 1))
        fids = order // 3
        return [fids[bounds[i]:bounds[i + 1]] for i in range(self.n_vertices)]

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def graph(self) -> "SurfaceGraph":
        return SurfaceGraph.from_edges(self.n_vertices, self.edges,
                                       self.edge_lengths)

    def summary(self) -> dict:
        """Counts of suspicious faces; such faces are kept, only reported."""
        key = np.sort(self.faces, axis=1)
        _, counts = np.unique(key, axis=0, return_counts=True)
        area2 = np.linalg.norm(self.face_areas_normals, axis=1)
        return {
            "vertices": self.n_vertices,
            "faces": self.n_faces,
            "duplicate_faces": int((counts - 1).sum()),
            "zero_area_faces": int((area2 == 0).sum()),
            "degenerate_normals": int(self.degenerate_vertices.sum()),
        }


def compute_vertex_normals(mesh: SurfaceMesh) -> tuple[np.ndarray, np.ndarray]:
    """Area-weighted unit vertex normals and a degenerate-vertex mask.

    Vertices whose summed normal has magnitude below ``1e-12`` (including
    vertices with no incident face) are flagged and get a zero normal.
    """
    acc = np.zeros((mesh.n_vertices, 3))
    fn = mesh.face_areas_normals
    for k in range(3):
        np.add.at(acc, mesh.faces[:, k], fn)
    length = np.linalg.norm(acc, axis=1)
    degenerate = length < DEGENERATE_NORMAL_TOL
    normals = np.zeros_like(acc)
    ok = ~degenerate
    normals[ok] = acc[ok] / length[ok, None]
    normals.flags.writeable = False
    degenerate.flags.writeable = False
    return normals, degenerate


def average_edge_length(mesh: SurfaceMesh) -> float:
    if len(mesh.edges) == 0:
        raise MeshError("mesh has no edges")
    return float(mesh.edge_lengths.mean())


@dataclass(frozen=True, eq=False)
class SurfaceGraph:
    """Undirected weighted graph over surface vertices."""

    n_vertices: int
    edges: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_edges(cls, n_vertices, edges, weights) -> "SurfaceGraph":
        edges = np.sort(np.array(edges, dtype=np.int64).reshape(-1, 2), axis=1)
        weights = np.array(weights, dtype=float).reshape(-1)
        loop = edges[:, 0] == edges[:, 1]
        edges, weights = edges[~loop], weights[~loop]
        if len(edges):
            # parallel edges collapse to the shortest one
            key = edges[:, 0] * (int(n_vertices) + 1) + edges[:, 1]
            order = np.lexsort((weights, key))
            first = np.ones(len(order), bool)
            first[1:] = key[order][1:] != key[order][:-1]
            edges, weights = edges[order][first], weights[order][first]
        edges = _readonly(edges, np.int64)
        zero = weights <= 0
        if zero.any():
            # coincident endpoints (e.g. duplicated vertices in foreign meshes)
            logger.warning("%d zero-length edges clamped to a tiny weight",
                           int(zero.sum()))
            weights[zero] = np.finfo(float).tiny
        weights.flags.writeable = False
        return cls(int(n_vertices), edges, weights)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        n = self.n_vertices
        e, w = self.edges, self.weights
        m = sparse.coo_matrix((np.concatenate([w, w]),
                               (np.concatenate([e[:, 0], e[:, 1]]),
                                np.concatenate([e[:, 1], e[:, 0]]))),
                              shape=(n, n)).tocsr()
        m.sum_duplicates()
        return m

    def neighbors(self, v: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[v]:a.indptr[v + 1]]


@dataclass(frozen=True, eq=False)
class TetMesh:
    """Tetrahedral mesh with per-vertex provenance.

    ``kind[i]`` is one of ``INTERIOR``, ``TWIN_PLUS``, ``TWIN_MINUS`` and
    ``source[i]`` the originating surface vertex (``-1`` for interior
    points or meshes from other producers).
    """

    positions: np.ndarray
    tets: np.ndarray
    kind: np.ndarray = field(default=None)
    source: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = _readonly(self.positions, float).reshape(-1, 3)
        tets = _readonly(self.tets, np.int64).reshape(-1, 4)
        n = len(pos)
        if tets.size:
            if tets.min() < 0 or tets.max() >= n:
                raise MeshError("tet index out of range")
            s = np.sort(tets, axis=1)
            if np.any(s[:, 1:] == s[:, :-1]):
                raise MeshError("tet with repeated vertex index")
        kind = np.zeros(n, np.int8) if self.kind is None else self.kind
        source = np.full(n, -1, np.int64) if self.source is None else self.source
        kind = _readonly(kind, np.int8)
        source = _readonly(source, np.int64)
        if len(kind) != n or len(source) != n:
            raise MeshError("provenance length does not match vertex count")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "tets", tets)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "source", source)

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def signed_volumes(self) -> np.ndarray:
        from .predicates import signed_volumes

        return signed_volumes(self.positions[self.tets])


def extract_boundary_surface(tm: TetMesh):
    """Faces used by exactly one tetrahedron.

    Returns ``(surface, graph, vmap)`` where ``vmap[i]`` is the tet-mesh
    vertex index of surface vertex ``i``.  Faces are oriented outward with
    respect to the tetrahedron they belong to.
    """
    if tm.n_tets == 0:
        empty = SurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), np.int64))
        return empty, empty.graph(), np.zeros(0, np.int64)
    tets = np.array(tm.tets)
    vol = tm.signed_volumes()
    neg = vol < 0
    tets[neg, 0], tets[neg, 1] = tets[neg, 1].copy(), tets[neg, 0].copy()
    faces = tets[:, TET_FACES].reshape(-1, 3)
    key = np.sort(faces, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True,
                               return_counts=True)
    inv = inv.reshape(-1)
    bfaces = faces[counts[inv] == 1]
    vmap, local = np.unique(bfaces, return_inverse=True)
    surface = SurfaceMesh(tm.positions[vmap], local.reshape(-1, 3))
    return surface, surface.graph(), vmap
