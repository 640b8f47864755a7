"""Neighbour-average smoothing used to probe surface connectivity.

Each iteration moves every movable vertex part of the way toward the mean
of its graph neighbours.  If two folds are wrongly joined by edges, the
smoothing pulls them together; correctly separated folds drift apart.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .mesh import SurfaceGraph, TetMesh, extract_boundary_surface

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoothParams:
    iterations: int = 100
    lam: float = 0.5
    snapshot_every: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0 < self.lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")


@dataclass
class SmoothResult:
    positions: np.ndarray
    snapshots: list = field(default_factory=list)  # (iteration, positions)


def _structure(graph: SurfaceGraph) -> sparse.csr_matrix:
    a = graph.adjacency.copy()
    a.data[:] = 1.0
    return a


def smooth(graph: SurfaceGraph, positions, params: SmoothParams = SmoothParams(),
           movable=None) -> SmoothResult:
    """Synchronous update ``x' = (1 - lam) x + lam * mean(neighbours)``.

    Parameters
    ----------
    graph : SurfaceGraph
        Neighbour structure (weights are ignored).
    positions : (n, d) array
    movable : boolean mask, optional
        Vertices allowed to move (default: all).  Isolated vertices never move.
    """
    x = np.array(positions, float)
    a = _structure(graph)
    deg = np.asarray(a.sum(axis=1)).ravel()
    move = np.ones(len(x), bool) if movable is None else np.asarray(movable, bool).copy()
    move &= deg > 0
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / deg[deg > 0]
    lam = params.lam
    out = SmoothResult(positions=x)
    if params.snapshot_every:
        out.snapshots.append((0, x.copy()))
    for it in range(1, params.iterations + 1):
        mean = (a @ x) * inv[:, None]
        x = np.where(move[:, None], (1.0 - lam) * x + lam * mean, x)
        if params.snapshot_every and it % params.snapshot_every == 0:
            out.snapshots.append((it, x.copy()))
    out.positions = x
    return out


def tet_edge_graph(tm: TetMesh) -> SurfaceGraph:
    t = np.asarray(tm.tets)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    e = np.concatenate([t[:, [i, j]] for i, j in pairs]) if len(t) else np.zeros((0, 2), np.int64)
    e = np.unique(np.sort(e, axis=1), axis=0)
    w = np.linalg.norm(tm.positions[e[:, 0]] - tm.positions[e[:, 1]], axis=1)
    return SurfaceGraph.from_edges(tm.n_vertices, e, w)


def smooth_tet_mesh(tm: TetMesh, params: SmoothParams = SmoothParams(),
                    move_all: bool = False) -> SmoothResult:
    """Smooth a tet mesh's boundary surface (or every vertex with ``move_all``).

    Returned positions cover all tet-mesh vertices; with the default only
    boundary vertices move and their neighbours are boundary neighbours.
    """
    if move_all:
        return smooth(tet_edge_graph(tm), tm.positions, params)
    surface, graph, vmap = extract_boundary_surface(tm)
    res = smooth(graph, surface.positions, params)
    full = np.array(tm.positions)
    full[vmap] = res.positions
    snaps = []
    for it, pos in res.snapshots:
        p = np.array(tm.positions)
        p[vmap] = pos
        snaps.append((it, p))
    return SmoothResult(positions=full, snapshots=snaps)
