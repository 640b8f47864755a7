"""Planar version of the pipeline, used to illustrate and cross-check the 3D one.

Input is a closed polygon (possibly self-overlapping) given as points and
segments with counter-clockwise orientation.  Each step mirrors its 3D
counterpart: twins along the 2D vertex normal, a four-ray inside vote,
Delaunay triangulation, removal of triangles whose open interior meets a
segment, a vertex-connected flood fill and twin restoration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .delaunay import Tetrahedralization, delaunay2d
from .mesh import INTERIOR, TWIN_MINUS, TWIN_PLUS, SurfaceGraph
from .predicates import triangle_segment_intersect_2d

logger = logging.getLogger(__name__)

RAY_T_MIN = 1e-12


@dataclass
class Polygon2D:
    points: np.ndarray    # (n, 2)
    segments: np.ndarray  # (m, 2) vertex indices, outward normal on the right

    def __post_init__(self):
        self.points = np.asarray(self.points, float).reshape(-1, 2)
        self.segments = np.asarray(self.segments, np.int64).reshape(-1, 2)
        if len(self.segments) and (self.segments.max() >= len(self.points)
                                   or self.segments.min() < 0):
            raise ValueError("segment index out of range")
        if np.any(self.segments[:, 0] == self.segments[:, 1]):
            raise ValueError("segment with two equal indices")

    @property
    def seg_xy(self) -> np.ndarray:
        return self.points[self.segments]

    def segment_normals(self) -> np.ndarray:
        d = self.seg_xy[:, 1] - self.seg_xy[:, 0]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        ln = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, ln, out=np.zeros_like(n), where=ln > 0)

    def vertex_normals(self) -> np.ndarray:
        """Length-weighted sum of incident segment normals, normalised."""
        d = self.seg_xy[:, 1] - self.seg_xy[:, 0]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        acc = np.zeros_like(self.points)
        np.add.at(acc, self.segments[:, 0], n)
        np.add.at(acc, self.segments[:, 1], n)
        ln = np.linalg.norm(acc, axis=1, keepdims=True)
        return np.divide(acc, ln, out=np.zeros_like(acc), where=ln > 1e-12)

    def graph(self) -> SurfaceGraph:
        e = np.sort(self.segments, axis=1)
        w = np.linalg.norm(self.points[e[:, 0]] - self.points[e[:, 1]], axis=1)
        return SurfaceGraph.from_edges(len(self.points), e, w)

    def average_edge_length(self) -> float:
        return float(np.linalg.norm(self.seg_xy[:, 1] - self.seg_xy[:, 0], axis=1).mean())


_DIRS_2D = np.array([(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)], float)
_DIRS_2D /= np.linalg.norm(_DIRS_2D, axis=1, keepdims=True)


def offset_directions_2d(poly: Polygon2D, tol: float = 1e-6) -> np.ndarray:
    """Vertex normal, or a fallback axis/diagonal, transversal to incident segments."""
    normals = poly.vertex_normals()
    sn = poly.segment_normals()
    for v in range(len(poly.points)):
        inc = np.flatnonzero((poly.segments == v).any(axis=1))
        nf = sn[inc]
        nf = nf[np.linalg.norm(nf, axis=1) > 0]
        if np.linalg.norm(normals[v]) > 0 and np.all(np.abs(nf @ normals[v]) > tol):
            continue
        for d in _DIRS_2D:
            if np.all(np.abs(nf @ d) > tol):
                normals[v] = d
                break
        else:
            raise ValueError(f"no non-degenerate offset direction for vertex {v}")
    return normals


def four_ray_votes(pts: np.ndarray, poly: Polygon2D) -> np.ndarray:
    """Inside votes (0..4) from rays along +-x and +-y.

    A ray votes inside when the first segment it crosses has its outward
    normal pointing along the ray.  Vertex hits use the half-open rule.
    """
    pts = np.asarray(pts, float).reshape(-1, 2)
    s = poly.seg_xy
    votes = np.zeros(len(pts), np.int64)
    for axis in (0, 1):
        o = 1 - axis
        a, b = s[:, 0], s[:, 1]
        lo = np.minimum(a[:, o], b[:, o])
        hi = np.maximum(a[:, o], b[:, o])
        span = b[:, o] - a[:, o]
        # outward normal component along the ray axis (CCW: n = (dy, -dx))
        n_axis = span if axis == 0 else -span
        q = pts[:, o][:, None]
        hit = (lo[None] <= q) & (q < hi[None]) & (span[None] != 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = (q - a[None, :, o]) / span[None]
        x = a[None, :, axis] + frac * (b[None, :, axis] - a[None, :, axis])
        t = x - pts[:, axis][:, None]
        for sign in (1, -1):
            st = np.where(hit, sign * t, np.inf)
            st[st <= RAY_T_MIN] = np.inf
            j = np.argmin(st, axis=1)
            ok = np.isfinite(st[np.arange(len(pts)), j])
            votes += ok & (sign * n_axis[j] > 0)
    return votes


def classify_inside_2d(pts, poly: Polygon2D, min_votes: int = 3) -> np.ndarray:
    return four_ray_votes(pts, poly) >= min_votes


def point_segment_distance(p, seg_xy: np.ndarray) -> np.ndarray:
    a, b = seg_xy[:, 0], seg_xy[:, 1]
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip(np.einsum("ij,ij->i", p - a, d) / dd, 0.0, 1.0)
    s = np.where(dd > 0, s, 0.0)
    return np.linalg.norm(a + s[:, None] * d - p, axis=1)


@dataclass
class Pipeline2DRun:
    polygon: Polygon2D
    epsilon: float
    radius: float
    points: np.ndarray      # offset positions
    kind: np.ndarray
    source: np.ndarray
    original: np.ndarray
    dt: Tetrahedralization
    removed: np.ndarray
    labels: np.ndarray
    sizes: np.ndarray
    kept: np.ndarray
    stats: dict

    @property
    def triangles(self) -> np.ndarray:
        return self.dt.tets[self.kept]

    @property
    def restored(self) -> np.ndarray:
        pos = np.array(self.points)
        tw = self.kind != INTERIOR
        pos[tw] = self.original[tw]
        return pos

    def sliver_triangles(self) -> np.ndarray:
        """Delaunay triangles whose vertices are all twins of one segment's ends."""
        t = self.dt.tets
        twin = (self.kind[t] != INTERIOR).all(axis=1)
        src = self.source[t]
        seg = {tuple(sorted(s)) for s in self.polygon.segments.tolist()}
        out = []
        for i in np.flatnonzero(twin):
            u = tuple(sorted(set(src[i].tolist())))
            if len(u) == 1 or (len(u) == 2 and u in seg):
                out.append(i)
        return np.asarray(out, np.int64)


def _components(tris: np.ndarray, n_vertices: int):
    m = len(tris)
    k = tris.shape[1]
    rows = np.repeat(np.arange(m), k)
    g = sparse.coo_matrix((np.ones(m * k, np.int8), (rows, m + tris.ravel())),
                          shape=(m + n_vertices, m + n_vertices))
    _, lab = csgraph.connected_components(g, directed=False)
    lab = lab[:m]
    _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
    rank = np.empty(len(first), np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    labels = rank[inv.reshape(-1)]
    return labels, np.bincount(labels)


def cut_triangles_2d(dt: Tetrahedralization, points: np.ndarray, poly: Polygon2D) -> np.ndarray:
    """Mask of triangles whose open interior meets a closed segment (bbox-pruned)."""
    tri = points[dt.tets]
    seg = poly.seg_xy
    tlo, thi = tri.min(axis=1), tri.max(axis=1)
    slo, shi = seg.min(axis=1), seg.max(axis=1)
    removed = np.zeros(len(tri), bool)
    for i in range(len(tri)):
        near = np.flatnonzero(np.all(slo <= thi[i], axis=1) & np.all(shi >= tlo[i], axis=1))
        for j in near:
            if triangle_segment_intersect_2d(tri[i], seg[j]):
                removed[i] = True
                break
    return removed


def run_pipeline_2d(poly: Polygon2D, epsilon: float = 1e-9, radius: float | None = None,
                    max_consecutive_failures: int = 1000, rng_seed: int = 0) -> Pipeline2DRun:
    """All six steps on a polygon; the kept component contains the deepest sample."""
    lengths = np.linalg.norm(poly.seg_xy[:, 1] - poly.seg_xy[:, 0], axis=1)
    eps = min(float(epsilon), 0.01 * float(lengths[lengths > 0].min()))
    r = poly.average_edge_length() if radius is None else float(radius)
    if not r > 2 * eps:
        raise ValueError(f"radius {r:g} must exceed 2*epsilon = {2 * eps:g}")
    d = offset_directions_2d(poly)
    v = poly.points
    n = len(v)
    pts = np.empty((2 * n, 2))
    pts[0::2] = v + eps * d
    pts[1::2] = v - eps * d
    kind = np.empty(2 * n, np.int8)
    kind[0::2], kind[1::2] = TWIN_PLUS, TWIN_MINUS
    source = np.repeat(np.arange(n), 2)

    # rejection sampling in the bounding box; only spacing failures count
    # toward the streak
    rng = np.random.default_rng(rng_seed)
    lo, hi = v.min(axis=0), v.max(axis=0)
    accepted = []
    streak = draws = 0
    cap = 50 * max_consecutive_failures
    idle = 0
    while streak < max_consecutive_failures and idle < cap:
        c = lo + rng.random(2) * (hi - lo)
        draws += 1
        if not classify_inside_2d(c, poly)[0]:
            idle += 1
            continue
        idle = 0
        # uniformity: at least r from every point already in the set
        near = np.min(np.linalg.norm(pts - c, axis=1)) < r or (bool(accepted) and np.min(
            np.linalg.norm(np.asarray(accepted) - c, axis=1)) < r)
        if near:
            streak += 1
            continue
        streak = 0
        accepted.append(c)
    interior = np.asarray(accepted, float).reshape(-1, 2)
    allpts = np.concatenate([pts, interior])
    kind = np.concatenate([kind, np.full(len(interior), INTERIOR, np.int8)])
    source = np.concatenate([source, np.full(len(interior), -1, np.int64)])
    original = np.concatenate([np.repeat(v, 2, axis=0), interior])

    dt = delaunay2d(allpts)
    removed = cut_triangles_2d(dt, allpts, poly)
    remaining = np.flatnonzero(~removed)
    if len(remaining) == 0:
        raise RuntimeError("every triangle was removed by the cut")
    labels, sizes = _components(dt.tets[remaining], len(allpts))
    alive = np.zeros(len(allpts), bool)
    alive[dt.tets[remaining].ravel()] = True
    cand = np.flatnonzero((kind == INTERIOR) & alive)
    if len(cand):
        depth = [point_segment_distance(allpts[i], poly.seg_xy).min() for i in cand]
        seed = int(cand[int(np.argmax(depth))])
        comp = int(labels[np.flatnonzero((dt.tets[remaining] == seed).any(axis=1))[0]])
    else:
        comp = int(np.argmax(sizes))
    kept = np.zeros(len(dt.tets), bool)
    kept[remaining[labels == comp]] = True
    stats = {"twins": 2 * n, "interior": len(interior), "draws": draws,
             "triangles": int(dt.n_tets), "removed": int(removed.sum()),
             "components": int(len(sizes)), "kept": int(kept.sum())}
    logger.info("pipeline2d: %s", stats)
    return Pipeline2DRun(polygon=poly, epsilon=eps, radius=r, points=allpts, kind=kind,
                         source=source, original=original, dt=dt, removed=removed,
                         labels=labels, sizes=sizes, kept=kept, stats=stats)


def boundary_edges(tris: np.ndarray) -> np.ndarray:
    """Edges used by exactly one triangle."""
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e = np.sort(e, axis=1)
    u, c = np.unique(e, axis=0, return_counts=True)
    return u[c == 1]


def edge_graph(tris: np.ndarray, positions: np.ndarray, boundary_only: bool = True) -> SurfaceGraph:
    if boundary_only:
        e = boundary_edges(tris)
    else:
        e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
        e = np.unique(np.sort(e, axis=1), axis=0)
    w = np.linalg.norm(positions[e[:, 0]] - positions[e[:, 1]], axis=1)
    return SurfaceGraph.from_edges(len(positions), e, w)


def is_ccw(poly: Polygon2D) -> bool:
    p = poly.points[poly.segments[:, 0]]
    q = poly.points[poly.segments[:, 1]]
    return float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])) > 0


__all__ = ["Polygon2D", "Pipeline2DRun", "run_pipeline_2d", "four_ray_votes",
           "classify_inside_2d", "offset_directions_2d", "cut_triangles_2d",
           "boundary_edges", "edge_graph", "point_segment_distance", "is_ccw"]
