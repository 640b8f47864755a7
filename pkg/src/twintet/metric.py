"""Landmark-based audit of how well a mesh preserves surface connectivity.

For every vertex ``t`` on the boundary of a candidate mesh and every
landmark ``l`` of the reference surface the score compares the
edge-graph distance from ``t`` to ``l`` along the candidate surface with
the reference distance from the reference vertex nearest to ``t``::

    C(t, l) = |d_mesh(t, l) - d_ref(closest(t), l)|
    C(t)    = median over l of C(t, l)

Shortcuts through fused folds make ``d_mesh`` much shorter than ``d_ref``
and show up as large scores.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph

from .grid import build_grid
from .mesh import SurfaceGraph, SurfaceMesh, TetMesh, average_edge_length, extract_boundary_surface

logger = logging.getLogger(__name__)

DEFAULT_LANDMARKS = 32


@dataclass(frozen=True)
class LandmarkSet:
    indices: np.ndarray
    mode: str = "fps"

    def __post_init__(self):
        idx = np.asarray(self.indices, np.int64)
        if len(idx) == 0:
            raise ValueError("need at least one landmark")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("landmark indices must be distinct")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)


def dijkstra_surface(graph: SurfaceGraph, source) -> np.ndarray:
    """Shortest edge-path lengths from ``source`` (int or sequence); inf if unreachable."""
    return csgraph.dijkstra(graph.adjacency, directed=False, indices=source)


def _argmax_lowest(values: np.ndarray) -> int:
    """Index of the largest value (inf counts as largest), lowest index on ties."""
    return int(np.flatnonzero(values == values.max())[0])


def select_landmarks(ref: SurfaceMesh, k: int = DEFAULT_LANDMARKS, mode: str = "fps",
                     graph: SurfaceGraph | None = None) -> LandmarkSet:
    """Pick ``k`` landmark vertices.

    ``fps``: geodesic farthest-point sampling seeded at vertex 0; each new
    landmark maximises the graph distance to those already chosen, with
    unreachable vertices treated as farthest.  ``stride``: every
    ``n/k``-th vertex index.
    """
    n = ref.n_vertices
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k = {k} exceeds the {n} reference vertices")
    if mode == "stride":
        return LandmarkSet((np.arange(k) * n) // k, "stride")
    if mode != "fps":
        raise ValueError(f"unknown landmark mode {mode!r}")
    graph = graph or ref.graph()
    chosen = [0]
    nearest = dijkstra_surface(graph, 0)
    chosen_mask = np.zeros(n, bool)
    chosen_mask[0] = True
    while len(chosen) < k:
        cand = np.where(chosen_mask, -1.0, nearest)
        v = _argmax_lowest(cand)
        chosen.append(v)
        chosen_mask[v] = True
        nearest = np.minimum(nearest, dijkstra_surface(graph, v))
    return LandmarkSet(np.asarray(chosen), "fps")


def nearest_vertices(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Exact nearest target index per query (ties: lower index), voxel-accelerated."""
    queries = _as3d(queries)
    targets = _as3d(targets)
    if len(targets) == 0:
        raise ValueError("empty reference vertex set")
    lo = np.minimum(targets.min(axis=0), queries.min(axis=0)) if len(queries) else targets.min(axis=0)
    hi = np.maximum(targets.max(axis=0), queries.max(axis=0)) if len(queries) else targets.max(axis=0)
    extent = float(np.max(hi - lo))
    # about one target per voxel on average keeps ring searches short
    h = max(extent / max(1.0, len(targets) ** (1 / 3)), extent * 1e-6, 1e-300)
    grid = build_grid(lo, hi, h, max_voxels=max(8, 8 * len(targets)) + 10 ** 6)
    grid.insert_points(np.arange(len(targets)), targets)
    return np.array([grid.nearest_point(q)[0] for q in queries], np.int64)


def _as3d(pts) -> np.ndarray:
    pts = np.asarray(pts, float)
    if pts.ndim == 2 and pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    return pts.reshape(-1, 3)


def closest_vertex_map(points: np.ndarray, ref: SurfaceMesh) -> np.ndarray:
    """Nearest reference vertex for each point (Euclidean, ties to lower index)."""
    return nearest_vertices(points, ref.positions)


def lower_median(values: np.ndarray) -> np.ndarray:
    """Column-wise lower-middle median ignoring non-finite entries (inf if none finite)."""
    v = np.where(np.isfinite(values), values, np.inf)
    v = np.sort(v, axis=0)
    count = np.isfinite(values).sum(axis=0)
    out = np.full(values.shape[1], np.inf)
    ok = count > 0
    out[ok] = v[(count[ok] - 1) // 2, np.flatnonzero(ok)]
    return out


@dataclass
class ConnectivityReport:
    """Per-vertex connectivity scores of a candidate surface.

    Attributes
    ----------
    scores : (n,) float
        C(t) per candidate-surface vertex; inf when no landmark is reachable.
    closest : (n,) int
        Nearest reference vertex of each candidate vertex.
    vertex_ids : (n,) int
        Index of each candidate vertex in the originating mesh.
    positions : (n, 3) float
    landmarks : LandmarkSet
    sources : (k,) int
        Candidate-surface vertex used as the source for each landmark.
    """

    scores: np.ndarray
    closest: np.ndarray
    vertex_ids: np.ndarray
    positions: np.ndarray
    landmarks: LandmarkSet
    sources: np.ndarray
    surface: SurfaceMesh | None = None

    def summary(self) -> dict:
        finite = self.scores[np.isfinite(self.scores)]
        base = {"vertices": int(len(self.scores)), "infinite": int(len(self.scores) - len(finite)),
                "landmarks": int(len(self.landmarks)), "landmark_mode": self.landmarks.mode}
        if len(finite) == 0:
            base.update(median=float("inf"), mean=float("inf"), p95=float("inf"), max=float("inf"))
            return base
        base.update(median=float(lower_median(finite[:, None])[0]), mean=float(finite.mean()),
                    p95=float(np.percentile(finite, 95)), max=float(finite.max()))
        return base

    @property
    def median(self) -> float:
        return self.summary()["median"]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex_id", "x", "y", "z", "closest_ref", "C"])
            for vid, p, c, s in zip(self.vertex_ids.tolist(), self.positions.tolist(),
                                    self.closest.tolist(), self.scores.tolist()):
                w.writerow([vid, repr(p[0]), repr(p[1]), repr(p[2]), c, repr(s)])

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)


def read_scores_csv(path):
    """``(vertex_ids, scores)`` from a file written by :meth:`ConnectivityReport.write_csv`."""
    ids, scores = [], []
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        for row in r:
            ids.append(int(row["vertex_id"]))
            scores.append(float(row["C"]))
    return np.asarray(ids, np.int64), np.asarray(scores, float)


def _multi_source(graph: SurfaceGraph, sources, threads: int) -> np.ndarray:
    sources = np.asarray(sources, np.int64)
    if threads <= 1 or len(sources) < 2:
        return np.atleast_2d(dijkstra_surface(graph, sources))
    parts = [p for p in np.array_split(sources, threads) if len(p)]
    with ThreadPoolExecutor(threads) as pool:
        rows = list(pool.map(lambda s: np.atleast_2d(dijkstra_surface(graph, s)), parts))
    return np.concatenate(rows)


def score_graphs(mesh_graph: SurfaceGraph, mesh_positions: np.ndarray,
                 ref_graph: SurfaceGraph, ref_positions: np.ndarray,
                 landmarks: LandmarkSet, threads: int = 1):
    """Core of the score on bare graphs (dimension-agnostic).

    Returns ``(scores, closest, sources)``.
    """
    lm = landmarks.indices
    closest = nearest_vertices(mesh_positions, ref_positions)
    sources = nearest_vertices(ref_positions[lm], mesh_positions)
    d_ref = _multi_source(ref_graph, lm, threads)        # (k, n_ref)
    d_mesh = _multi_source(mesh_graph, sources, threads)  # (k, n_mesh)
    ref_at = d_ref[:, closest]
    with np.errstate(invalid="ignore"):
        disc = np.abs(d_mesh - ref_at)
    disc[~(np.isfinite(d_mesh) & np.isfinite(ref_at))] = np.inf
    return lower_median(disc), closest, sources


def connectivity_scores(tm: TetMesh, ref: SurfaceMesh, landmarks: LandmarkSet | None = None,
                        k: int = DEFAULT_LANDMARKS, mode: str = "fps",
                        threads: int = 1) -> ConnectivityReport:
    """Score every boundary vertex of ``tm`` against the reference surface."""
    surface, graph, vmap = extract_boundary_surface(tm)
    if surface.n_vertices == 0:
        raise ValueError("candidate mesh has an empty boundary surface")
    ref_graph = ref.graph()
    if landmarks is None:
        landmarks = select_landmarks(ref, k, mode, ref_graph)
    scores, closest, sources = score_graphs(graph, surface.positions, ref_graph, ref.positions,
                                            landmarks, threads)
    rep = ConnectivityReport(scores=scores, closest=closest, vertex_ids=vmap,
                             positions=surface.positions, landmarks=landmarks,
                             sources=sources, surface=surface)
    logger.info("connectivity: %d vertices, median C %.3g", len(scores), rep.median)
    return rep


def surface_scores(candidate: SurfaceMesh, ref: SurfaceMesh, landmarks: LandmarkSet | None = None,
                   k: int = DEFAULT_LANDMARKS, mode: str = "fps") -> ConnectivityReport:
    """Same score for a candidate given directly as a surface mesh."""
    ref_graph = ref.graph()
    if landmarks is None:
        landmarks = select_landmarks(ref, k, mode, ref_graph)
    scores, closest, sources = score_graphs(candidate.graph(), candidate.positions,
                                            ref_graph, ref.positions, landmarks)
    return ConnectivityReport(scores=scores, closest=closest,
                              vertex_ids=np.arange(candidate.n_vertices),
                              positions=candidate.positions, landmarks=landmarks,
                              sources=sources, surface=candidate)


def unit_scale_note(ref: SurfaceMesh) -> str:
    return f"average reference edge {average_edge_length(ref):.4g} mesh units"
