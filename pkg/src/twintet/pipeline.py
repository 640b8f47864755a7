"""Connectivity-preserving tetrahedralization of (possibly defective) surfaces.

Outline
-------
1. every surface vertex is duplicated into two "twins" offset by +-eps
   along a direction that is not tangent to any incident face;
2. interior points are sampled by rejection inside the surface, keeping a
   minimum spacing ``r`` to every existing point;
3. all points are Delaunay tetrahedralized;
4. every tetrahedron whose open interior meets an input face is removed;
5. the vertex-connected component around a deep interior point is kept;
6. twins are moved back onto their source vertex.

The cut in step 4 separates regions that touch or overlap geometrically
but are far apart along the surface, which is what keeps the surface
connectivity of the output faithful to the input.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .delaunay import Tetrahedralization, delaunay3d
from .grid import DEFAULT_MAX_VOXELS, Label, VoxelGrid, build_grid, build_grid_auto
from .mesh import (INTERIOR, TWIN_MINUS, TWIN_PLUS, MeshError, SurfaceMesh,
                   TetMesh, average_edge_length)
from .predicates import (RAY_T_MIN, Location, axis_ray_hits, orient3d_many,
                         point_in_tet, tet_triangle_intersect_many)

logger = logging.getLogger(__name__)

DIRECTION_TOL = 1e-6
EPSILON_EDGE_FRACTION = 0.01
SAMPLE_BATCH = 256
SAFETY_FACTOR = 50
THREADS_ENV = "TWINTET_THREADS"
TWIN_NUDGE_STEPS = 40


class PipelineError(RuntimeError):
    pass


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------- parameters


@dataclass(frozen=True)
class PipelineParams:
    """User-facing knobs; ``None`` means "derive from the surface".

    Attributes
    ----------
    epsilon : float
        Twin offset, clamped to ``0.01 *`` the shortest surface edge.
    radius : float or None
        Minimum spacing of interior samples (default: average edge length).
    max_consecutive_failures : int
        Sampling stops after this many consecutive spacing rejections.
    voxel_size : float or None
        Grid resolution (default: average edge length).
    flood_seed : "auto" or sequence of 3 floats
        Point identifying the component to keep.
    seed_mode : {"seeded", "largest"}
    """

    epsilon: float = 1e-9
    radius: float | None = None
    max_consecutive_failures: int = 1000
    voxel_size: float | None = None
    rng_seed: int = 0
    flood_seed: object = "auto"
    seed_mode: str = "seeded"
    threads: int = 1
    max_voxels: int = DEFAULT_MAX_VOXELS

    def resolve(self, surface: SurfaceMesh) -> "ResolvedParams":
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_consecutive_failures < 1:
            raise ValueError("max_consecutive_failures must be >= 1")
        if self.seed_mode not in ("seeded", "largest"):
            raise ValueError(f"unknown seed mode {self.seed_mode!r}")
        lengths = surface.edge_lengths
        positive = lengths[lengths > 0]
        if len(positive) == 0:
            raise MeshError("surface has no edge of positive length")
        cap = EPSILON_EDGE_FRACTION * float(positive.min())
        eps = min(float(self.epsilon), cap)
        if eps < self.epsilon:
            logger.info("epsilon %g clamped to %g (1%% of shortest edge)",
                        self.epsilon, eps)
        avg = average_edge_length(surface)
        r = avg if self.radius is None else float(self.radius)
        if not r > 2 * eps:
            raise ValueError(f"radius {r:g} must exceed 2*epsilon = {2 * eps:g}")
        h = avg if self.voxel_size is None else float(self.voxel_size)
        if not h > 0:
            raise ValueError("voxel_size must be positive")
        seed = self.flood_seed
        if not (isinstance(seed, str) and seed == "auto"):
            seed = tuple(float(x) for x in seed)
            if len(seed) != 3:
                raise ValueError("flood seed must have three coordinates")
        return ResolvedParams(epsilon=eps, epsilon_requested=float(self.epsilon),
                              radius=r, max_consecutive_failures=int(self.max_consecutive_failures),
                              voxel_size=h, voxel_size_explicit=self.voxel_size is not None,
                              rng_seed=int(self.rng_seed), flood_seed=seed,
                              seed_mode=self.seed_mode, threads=max(1, int(self.threads)),
                              max_voxels=int(self.max_voxels))


@dataclass(frozen=True)
class ResolvedParams:
    epsilon: float
    epsilon_requested: float
    radius: float
    max_consecutive_failures: int
    voxel_size: float
    voxel_size_explicit: bool
    rng_seed: int
    flood_seed: object
    seed_mode: str
    threads: int
    max_voxels: int


# --------------------------------------------------------------- point set


@dataclass
class TaggedPointSet:
    """Points with provenance.

    Twins of surface vertex ``i`` sit at rows ``2i`` (plus side) and
    ``2i + 1`` (minus side); interior samples follow.
    """

    points: np.ndarray
    kind: np.ndarray
    source: np.ndarray
    original: np.ndarray

    def __len__(self):
        return len(self.points)

    @property
    def n_twins(self) -> int:
        return int(np.count_nonzero(self.kind != INTERIOR))

    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(self.kind == INTERIOR)

    def append_interior(self, pts: np.ndarray) -> "TaggedPointSet":
        pts = np.asarray(pts, float).reshape(-1, 3)
        return TaggedPointSet(
            points=np.concatenate([self.points, pts]),
            kind=np.concatenate([self.kind, np.full(len(pts), INTERIOR, np.int8)]),
            source=np.concatenate([self.source, np.full(len(pts), -1, np.int64)]),
            original=np.concatenate([self.original, pts]),
        )


_AXIS_DIRECTIONS = np.array([(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1)
                             for k in (-1, 0, 1) if (i, j, k) != (0, 0, 0)], float)
_AXIS_DIRECTIONS = _AXIS_DIRECTIONS[np.argsort(np.abs(_AXIS_DIRECTIONS).sum(axis=1),
                                               kind="stable")]
_AXIS_DIRECTIONS /= np.linalg.norm(_AXIS_DIRECTIONS, axis=1, keepdims=True)


def offset_directions(surface: SurfaceMesh) -> np.ndarray:
    """Unit offset direction per vertex, transversal to every incident face.

    The vertex normal is used when ``|dir . n_f| > 1e-6`` for all incident
    faces with nonzero area; otherwise the sum of unit face normals, then the
    26 axis and diagonal directions are tried in turn.
    """
    fn = surface.face_normals
    valid_face = np.linalg.norm(fn, axis=1) > 0
    normals = np.array(surface.vertex_normals)
    n = surface.n_vertices
    f = surface.faces
    worst = np.full(n, np.inf)
    for k in range(3):
        dots = np.abs(np.einsum("ij,ij->i", normals[f[:, k]], fn))
        dots[~valid_face] = np.inf
        np.minimum.at(worst, f[:, k], dots)
    ok = (worst > DIRECTION_TOL) & ~surface.degenerate_vertices
    bad = np.flatnonzero(~ok)
    if len(bad):
        logger.info("%d vertices need a fallback offset direction", len(bad))
    incident = surface.incident_faces if len(bad) else None
    for v in bad:
        faces = incident[v]
        faces = faces[valid_face[faces]]
        nf = fn[faces]
        cands = []
        s = nf.sum(axis=0)
        if np.linalg.norm(s) > 0:
            cands.append(s / np.linalg.norm(s))
        cands.extend(_AXIS_DIRECTIONS)
        for d in cands:
            if len(nf) == 0 or np.all(np.abs(nf @ d) > DIRECTION_TOL):
                normals[v] = d
                break
        else:
            raise PipelineError(f"no non-degenerate offset direction for vertex {v}")
    return normals


def _short_pairs(plus: np.ndarray, minus: np.ndarray, epsilon: float) -> np.ndarray:
    """Rows whose exact distance is below ``2 * epsilon``.

    Floating-point norms only shortlist rows near the threshold; those are
    decided in rational arithmetic.
    """
    gap = np.linalg.norm(plus - minus, axis=1)
    short = gap < 2.0 * epsilon * (1.0 - 1e-12)
    near = np.flatnonzero(~short & (gap < 2.0 * epsilon * (1.0 + 1e-12)))
    bound = (2 * Fraction(epsilon)) ** 2
    for i in near:
        g2 = sum((Fraction(float(a)) - Fraction(float(b))) ** 2 for a, b in zip(plus[i], minus[i]))
        short[i] = g2 < bound
    return short


def build_twin_points(surface: SurfaceMesh, epsilon: float) -> TaggedPointSet:
    """Two offset copies ``v +- eps * dir`` of every surface vertex.

    The pair is guaranteed to be at least ``2 * eps`` apart despite rounding.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    d = offset_directions(surface)
    v = surface.positions
    n = len(v)
    plus = v + epsilon * d
    minus = v - epsilon * d
    if np.any(np.all(plus == minus, axis=1)):
        raise PipelineError("epsilon below floating-point resolution of the coordinates")
    # rounding can leave a pair slightly closer than 2 eps; such pairs get a
    # minimally enlarged offset (a few ulps of the coordinates)
    scale = np.ones(n)
    for k in range(TWIN_NUDGE_STEPS):
        short = _short_pairs(plus, minus, epsilon)
        if not short.any():
            break
        scale[short] *= 1.0 + 1e-15 * 2.0 ** k
        e = epsilon * scale[short, None]
        plus[short] = v[short] + e * d[short]
        minus[short] = v[short] - e * d[short]
    else:
        raise PipelineError("could not separate twins by 2*epsilon")
    pts = np.empty((2 * n, 3))
    pts[0::2] = plus
    pts[1::2] = minus
    kind = np.empty(2 * n, np.int8)
    kind[0::2] = TWIN_PLUS
    kind[1::2] = TWIN_MINUS
    source = np.repeat(np.arange(n), 2)
    original = np.repeat(v, 2, axis=0)
    return TaggedPointSet(points=pts, kind=kind, source=source, original=original)


# ------------------------------------------------------------ inside test


def six_ray_votes(p, tris: np.ndarray) -> int:
    """Number of axis directions whose nearest hit sees a back face.

    A ray votes "inside" when the first surface face it meets (t > 1e-12)
    has its normal pointing along the ray.  Missing hits vote "outside".
    Ties at equal distance go to the lower face index.
    """
    p = np.asarray(p, float)
    votes = 0
    for axis in range(3):
        if len(tris) == 0:
            continue
        hit, t, n_axis = axis_ray_hits(p, axis, tris)
        for sign in (1, -1):
            st = sign * t
            m = hit & (st > RAY_T_MIN)
            if not m.any():
                continue
            idx = np.flatnonzero(m)
            j = idx[np.argmin(st[idx])]
            if sign * n_axis[j] > 0:
                votes += 1
    return votes


class InsideTester:
    """Six-ray majority inside test, accelerated by a voxel grid.

    Only faces stored in the voxel row through a query point can meet an
    axis ray from it, so each test is restricted to those rows.  Empty
    voxels with a precomputed label answer without casting rays.
    """

    def __init__(self, surface: SurfaceMesh, grid: VoxelGrid, min_votes: int = 4):
        self.surface = surface
        self.grid = grid
        self.tris = surface.positions[surface.faces]
        self.min_votes = min_votes
        self._lo = grid.origin
        self._hi = grid.origin + np.array(grid.dims) * grid.voxel_size
        self.rays_cast = 0
        cells, fids = grid.faces.pairs()
        ijk = grid.unflat(cells)
        self._rows = []
        for axis in range(3):
            key = self._row_key(ijk, axis)
            k = np.unique(key * len(self.tris) + fids) if len(fids) else np.zeros(0, np.int64)
            rk, rf = k // max(1, len(self.tris)), k % max(1, len(self.tris))
            self._rows.append((rk, rf))

    def _row_key(self, ijk, axis):
        u, v = (axis + 1) % 3, (axis + 2) % 3
        return ijk[..., u] * self.grid.dims[v] + ijk[..., v]

    def votes_many(self, pts: np.ndarray) -> np.ndarray:
        """Inside votes (0..6) for each row of ``pts`` (n, 3)."""
        pts = np.asarray(pts, float).reshape(-1, 3)
        votes = np.zeros(len(pts), np.int64)
        if len(pts) == 0 or len(self.tris) == 0:
            return votes
        ijk = self.grid.cell_index(pts)
        for axis in range(3):
            rk, rf = self._rows[axis]
            key = self._row_key(ijk, axis)
            start = np.searchsorted(rk, key, side="left")
            count = np.searchsorted(rk, key, side="right") - start
            owner = np.repeat(np.arange(len(pts)), count)
            if len(owner) == 0:
                continue
            offs = np.arange(len(owner)) - np.repeat(np.cumsum(count) - count, count)
            faces = rf[np.repeat(start, count) + offs]
            hit, t, n_axis = axis_ray_hits(pts[owner], axis, self.tris[faces])
            for sign in (1, -1):
                st = sign * t
                m = hit & (st > RAY_T_MIN)
                if not m.any():
                    continue
                o, d, f, n = owner[m], st[m], faces[m], n_axis[m]
                order = np.lexsort((f, d, o))
                o, n = o[order], n[order]
                first = np.ones(len(o), bool)
                first[1:] = o[1:] != o[:-1]
                votes[o[first]] += (sign * n[first] > 0)
        self.rays_cast += 6 * len(pts)
        return votes

    def votes(self, p) -> int:
        return int(self.votes_many(np.asarray(p, float)[None])[0])

    def classify_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, float).reshape(-1, 3)
        out = np.zeros(len(pts), bool)
        inbox = np.all((pts >= self._lo) & (pts <= self._hi), axis=1)
        idx = np.flatnonzero(inbox)
        if len(idx) == 0:
            return out
        ijk = self.grid.cell_index(pts[idx])
        lab = self.grid.labels[ijk[:, 0], ijk[:, 1], ijk[:, 2]]
        out[idx[lab == Label.INSIDE]] = True
        need = idx[(lab != Label.INSIDE) & (lab != Label.OUTSIDE)]
        if len(need):
            out[need] = self.votes_many(pts[need]) >= self.min_votes
        return out

    def __call__(self, p) -> bool:
        return bool(self.classify_many(np.asarray(p, float)[None])[0])


def classify_inside(p, surface: SurfaceMesh, grid: VoxelGrid) -> bool:
    """Six-ray majority vote (>= 4 of 6); empty-voxel labels short-circuit."""
    return InsideTester(surface, grid)(p)


def prepare_grid(surface: SurfaceMesh, voxel_size: float, explicit: bool = False,
                 max_voxels: int = DEFAULT_MAX_VOXELS) -> VoxelGrid:
    """Grid over the surface with faces inserted and empty voxels labelled."""
    lo, hi = surface.bbox()
    if explicit:
        grid = build_grid(lo, hi, voxel_size, max_voxels)
    else:
        grid = build_grid_auto(lo, hi, voxel_size, max_voxels)
    grid.insert_faces(np.arange(surface.n_faces), surface.positions[surface.faces])
    tester = InsideTester(surface, grid)
    n_regions = grid.classify_empty_voxels(tester)
    logger.debug("grid %s, %d empty regions labelled", grid.dims, n_regions)
    return grid


# ------------------------------------------------------------------ sampling


@dataclass
class SamplingStats:
    candidates: int = 0
    outside: int = 0
    too_close: int = 0
    accepted: int = 0
    stop_reason: str = ""


def sample_interior(surface: SurfaceMesh, grid: VoxelGrid, points: TaggedPointSet,
                    radius: float, max_consecutive_failures: int, rng,
                    threads: int = 1, inside=None):
    """Rejection-sample interior points with minimum spacing ``radius``.

    Candidates are uniform in the surface bounding box.  A candidate is
    accepted when it is inside and no existing point lies within
    ``radius``.  Only spacing rejections count toward the stopping streak.
    The existing points are inserted into ``grid``.

    Returns
    -------
    (TaggedPointSet, SamplingStats)
    """
    inside = inside or InsideTester(surface, grid)
    lo, hi = surface.bbox()
    if grid.n_points == 0:
        grid.insert_points(np.arange(len(points)), points.points)
    stats = SamplingStats()
    accepted = []
    streak = 0
    idle = 0
    next_ref = len(points)
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while True:
            batch = rng.uniform(lo, hi, size=(SAMPLE_BATCH, 3))
            if pool is None:
                flags = inside.classify_many(batch)
            else:
                parts = np.array_split(batch, threads)
                flags = np.concatenate(list(pool.map(inside.classify_many, parts)))
            done = False
            for c, is_in in zip(batch, flags):
                stats.candidates += 1
                if not is_in:
                    stats.outside += 1
                    idle += 1
                elif grid.nearest_within(c, radius) is not None:
                    stats.too_close += 1
                    streak += 1
                    idle += 1
                else:
                    grid.insert_point(next_ref, c)
                    next_ref += 1
                    accepted.append(c)
                    streak = 0
                    idle = 0
                if streak >= max_consecutive_failures:
                    stats.stop_reason = "uniformity"
                    done = True
                elif idle >= SAFETY_FACTOR * max_consecutive_failures:
                    stats.stop_reason = "safety-cap"
                    logger.warning("sampling stopped after %d draws without acceptance", idle)
                    done = True
                if done:
                    break
            if done:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    stats.accepted = len(accepted)
    logger.info("sampled %d interior points from %d candidates (%d outside, %d too close)",
                stats.accepted, stats.candidates, stats.outside, stats.too_close)
    new = np.array(accepted, float).reshape(-1, 3)
    return points.append_interior(new), stats


# ----------------------------------------------------------------------- cut


def candidate_pairs(grid: VoxelGrid, tets_xyz: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """(tet, face) pairs sharing a voxel and with overlapping bounding boxes."""
    grid.clear_tets()
    grid.insert_tets(np.arange(len(tets_xyz)), tets_xyz)
    tcell, tid = grid.tets.pairs()
    fcell, fid = grid.faces.pairs()
    start = np.searchsorted(fcell, tcell, side="left")
    counts = np.searchsorted(fcell, tcell, side="right") - start
    keep = counts > 0
    tid, start, counts = tid[keep], start[keep], counts[keep]
    t_lo, t_hi = tets_xyz.min(axis=1), tets_xyz.max(axis=1)
    f_lo, f_hi = tris.min(axis=1), tris.max(axis=1)
    out = []
    step = 50000
    for s in range(0, len(tid), step):
        c = counts[s:s + step]
        rows = np.repeat(tid[s:s + step], c)
        offs = np.arange(c.sum()) - np.repeat(np.cumsum(c) - c, c)
        faces = fid[np.repeat(start[s:s + step], c) + offs]
        ov = np.all((f_lo[faces] < t_hi[rows]) & (f_hi[faces] > t_lo[rows]), axis=1)
        out.append(rows[ov] * len(tris) + faces[ov])
    if not out:
        return np.zeros((0, 2), np.int64)
    key = np.unique(np.concatenate(out))
    return np.stack([key // len(tris), key % len(tris)], axis=1)


def intersecting_tets(tets_xyz: np.ndarray, tris: np.ndarray, pairs: np.ndarray,
                      threads: int = 1, chunk: int = 20000) -> np.ndarray:
    """Boolean mask of tets meeting at least one face among ``pairs``."""
    hit = np.zeros(len(tets_xyz), bool)
    chunks = [pairs[i:i + chunk] for i in range(0, len(pairs), chunk)]

    def work(pc):
        return tet_triangle_intersect_many(tets_xyz[pc[:, 0]], tris[pc[:, 1]])

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(pc) for pc in chunks]
    for pc, res in zip(chunks, results):
        hit[pc[res, 0]] = True
    return hit


def cut_intersecting_tets(dt: Tetrahedralization, surface: SurfaceMesh, grid: VoxelGrid,
                          threads: int = 1) -> np.ndarray:
    """Mask of Delaunay tets to remove: those whose interior meets a face."""
    tets_xyz = dt.points[dt.tets]
    tris = surface.positions[surface.faces]
    pairs = candidate_pairs(grid, tets_xyz, tris)
    logger.debug("cut: %d candidate tet/face pairs", len(pairs))
    return intersecting_tets(tets_xyz, tris, pairs, threads)


def brute_force_intersecting(tets_xyz: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Grid-free all-pairs version of the cut test (bounding-box prefilter only)."""
    t_lo, t_hi = tets_xyz.min(axis=1), tets_xyz.max(axis=1)
    f_lo, f_hi = tris.min(axis=1), tris.max(axis=1)
    rows = []
    step = max(1, 2_000_000 // max(1, len(tris)))
    for s in range(0, len(tets_xyz), step):
        ov = np.all((f_lo[None] < t_hi[s:s + step, None])
                    & (f_hi[None] > t_lo[s:s + step, None]), axis=2)
        r, f = np.nonzero(ov)
        rows.append(np.stack([r + s, f], axis=1))
    pairs = np.concatenate(rows) if rows else np.zeros((0, 2), np.int64)
    return intersecting_tets(tets_xyz, tris, pairs)


# ------------------------------------------------------------ components


def tet_components(tets: np.ndarray, n_vertices: int):
    """Components of tets under shared-vertex adjacency.

    Returns ``(labels, sizes)`` with labels numbered by first appearance in
    tet order.
    """
    m = len(tets)
    if m == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    rows = np.repeat(np.arange(m), 4)
    cols = m + tets.ravel()
    g = sparse.coo_matrix((np.ones(len(rows), np.int8), (rows, cols)),
                          shape=(m + n_vertices, m + n_vertices))
    _, lab = csgraph.connected_components(g, directed=False)
    lab = lab[:m]
    _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
    rank = np.empty(len(first), np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    labels = rank[inv.reshape(-1)]
    return labels, np.bincount(labels)


def point_triangle_distance(p, tris: np.ndarray) -> np.ndarray:
    """Euclidean distance from one point to each triangle ``(m, 3, 3)``."""
    p = np.asarray(p, float)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    n = np.cross(b - a, c - a)
    nn = np.einsum("ij,ij->i", n, n)
    best = np.full(len(tris), np.inf)
    ok = nn > 0
    if ok.any():
        w = p - a[ok]
        dist = np.einsum("ij,ij->i", w, n[ok]) / nn[ok]
        q = p - dist[:, None] * n[ok]
        inside = np.ones(ok.sum(), bool)
        for u, v in ((a, b), (b, c), (c, a)):
            s = np.einsum("ij,ij->i", np.cross(v[ok] - u[ok], q - u[ok]), n[ok])
            inside &= s >= 0
        plane = np.abs(dist) * np.sqrt(nn[ok])
        tmp = np.full(ok.sum(), np.inf)
        tmp[inside] = plane[inside]
        best[ok] = tmp
    for u, v in ((a, b), (b, c), (c, a)):
        d = v - u
        dd = np.einsum("ij,ij->i", d, d)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.clip(np.einsum("ij,ij->i", p - u, d) / dd, 0.0, 1.0)
        s = np.where(dd > 0, s, 0.0)
        seg = np.linalg.norm(u + s[:, None] * d - p, axis=1)
        best = np.minimum(best, seg)
    return best


def deepest_point(candidates: np.ndarray, surface: SurfaceMesh) -> int:
    """Index of the candidate farthest from the surface (ties: lower index).

    Nearest-vertex distances give an upper bound and, minus the longest
    edge, a lower bound; only candidates that could win are measured
    exactly.
    """
    if len(candidates) == 0:
        raise ValueError("no candidates")
    tree = cKDTree(surface.positions)
    dv, _ = tree.query(candidates)
    slack = float(surface.edge_lengths.max()) if len(surface.edges) else 0.0
    floor = (dv - slack).max()
    short = np.flatnonzero(dv >= floor)
    tris = surface.positions[surface.faces]
    exact = np.array([point_triangle_distance(candidates[i], tris).min() for i in short])
    return int(short[np.argmax(exact)])


# ------------------------------------------------------------ restoration


def restore_positions(points: TaggedPointSet) -> np.ndarray:
    pos = np.array(points.points)
    twins = points.kind != INTERIOR
    pos[twins] = points.original[twins]
    return pos


def count_inverted(positions: np.ndarray, tets: np.ndarray):
    """(negative, zero) orientation counts using the exact predicate."""
    if len(tets) == 0:
        return 0, 0
    x = positions[tets]
    s = orient3d_many(x[:, 0], x[:, 1], x[:, 2], x[:, 3])
    return int((s < 0).sum()), int((s == 0).sum())


def restore_twins(tm: TetMesh, originals: np.ndarray):
    """Move twin vertices back to their source positions.

    ``originals`` holds the source position of every vertex (interior rows
    are ignored).  Returns the new mesh and the number of inverted tets.
    """
    pos = np.array(tm.positions)
    twins = tm.kind != INTERIOR
    pos[twins] = np.asarray(originals)[twins]
    out = TetMesh(pos, tm.tets, tm.kind, tm.source)
    inverted, _ = count_inverted(pos, np.asarray(tm.tets))
    if inverted:
        logger.warning("%d tets inverted after twin restoration", inverted)
    return out, inverted


# ------------------------------------------------------------------- driver


@dataclass
class PipelineRun:
    """Result of :func:`run_pipeline`, with the intermediate stages kept."""

    surface: SurfaceMesh
    params: ResolvedParams
    grid: VoxelGrid
    points: TaggedPointSet
    dt: Tetrahedralization
    removed: np.ndarray
    labels: np.ndarray
    kept: np.ndarray
    mesh: TetMesh
    stats: dict = field(default_factory=dict)

    def naive_mesh(self) -> TetMesh:
        """All Delaunay tets (no cut, no flood fill) with twins restored."""
        return TetMesh(restore_positions(self.points), self.dt.tets,
                       self.points.kind, self.points.source)

    def cut_mesh(self) -> TetMesh:
        """Tets surviving the cut, at the offset (pre-restoration) positions."""
        return TetMesh(self.points.points, self.dt.tets[~self.removed],
                       self.points.kind, self.points.source)


def _compact(positions, tets, kind, source):
    used = np.unique(tets)
    remap = np.full(len(positions), -1, np.int64)
    remap[used] = np.arange(len(used))
    return TetMesh(positions[used], remap[tets], kind[used], source[used])


def _choose_component(dt, points, removed, labels, sizes, params, grid, surface):
    remaining = np.flatnonzero(~removed)
    largest = int(np.argmax(sizes)) if len(sizes) else -1
    info = {"seed_point": None, "seed_vertex": None}
    if params.seed_mode == "largest":
        return largest, info
    tets = dt.tets[remaining]
    if isinstance(params.flood_seed, str):
        interior = points.interior_indices()
        alive_vertices = np.zeros(len(points), bool)
        alive_vertices[tets.ravel()] = True
        interior = interior[alive_vertices[interior]]
        if len(interior) == 0:
            logger.warning("no interior point survives; keeping the largest component")
            return largest, info
        v = int(interior[deepest_point(points.points[interior], surface)])
        rows = np.flatnonzero(np.any(tets == v, axis=1))
        comp = int(labels[rows[0]])
        info.update(seed_vertex=v, seed_point=points.points[v].tolist())
    else:
        q = np.asarray(params.flood_seed, float)
        cell = int(grid.flat(grid.cell_index(q)))
        cand = np.unique(grid.tets.lookup(cell))
        alive = np.zeros(len(dt.tets), bool)
        alive[remaining] = True
        pos_of = np.full(len(dt.tets), -1, np.int64)
        pos_of[remaining] = np.arange(len(remaining))
        comp = None
        for t in cand[alive[cand]]:
            if point_in_tet(q, dt.points[dt.tets[t]]) is not Location.OUTSIDE:
                comp = int(labels[pos_of[t]])
                break
        if comp is None:
            raise PipelineError("flood seed lies in no remaining tetrahedron; "
                                "try --seed-mode largest")
        info["seed_point"] = q.tolist()
    if comp != largest:
        logger.warning("seeded component (%d tets) is not the largest (%d tets)",
                       int(sizes[comp]), int(sizes[largest]))
    return comp, info


def run_pipeline(surface: SurfaceMesh, params: PipelineParams | None = None) -> PipelineRun:
    """Run all six steps and keep the intermediates."""
    params = params or PipelineParams()
    rp = params.resolve(surface)
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = round((now - clock) * 1000.0, 3)
        clock = now

    logger.info("epsilon %g (requested %g), radius %g, voxel size %g",
                rp.epsilon, rp.epsilon_requested, rp.radius, rp.voxel_size)
    grid = prepare_grid(surface, rp.voxel_size, rp.voxel_size_explicit, rp.max_voxels)
    lap("grid")
    points = build_twin_points(surface, rp.epsilon)
    lap("twins")
    rng = np.random.default_rng(rp.rng_seed)
    points, sstats = sample_interior(surface, grid, points, rp.radius,
                                     rp.max_consecutive_failures, rng, rp.threads)
    lap("sampling")
    dt = delaunay3d(points.points)
    lap("delaunay")
    removed = cut_intersecting_tets(dt, surface, grid, rp.threads)
    lap("cut")
    remaining = np.flatnonzero(~removed)
    labels, sizes = tet_components(dt.tets[remaining], len(points))
    if len(remaining) == 0:
        raise PipelineError("every tetrahedron was removed by the cut")
    comp, seed_info = _choose_component(dt, points, removed, labels, sizes, rp, grid, surface)
    kept = np.zeros(len(dt.tets), bool)
    kept[remaining[labels == comp]] = True
    lap("flood")
    restored = restore_positions(points)
    mesh = _compact(restored, dt.tets[kept], points.kind, points.source)
    inverted, degenerate = count_inverted(mesh.positions, np.asarray(mesh.tets))
    if inverted:
        logger.warning("%d tets inverted after twin restoration", inverted)
    lap("restore")

    order = np.argsort(-sizes, kind="stable")
    stats = {
        "surface": {"vertices": surface.n_vertices, "faces": surface.n_faces},
        "params": {"epsilon": rp.epsilon, "epsilon_requested": rp.epsilon_requested,
                   "radius": rp.radius, "max_consecutive_failures": rp.max_consecutive_failures,
                   "voxel_size": grid.voxel_size, "rng_seed": rp.rng_seed,
                   "seed_mode": rp.seed_mode},
        "grid": {"dims": list(grid.dims)},
        "points": {"twins": points.n_twins, "interior": int(sstats.accepted),
                   "total": len(points)},
        "sampling": asdict(sstats),
        "tets": {"delaunay": int(dt.n_tets), "removed": int(removed.sum()),
                 "after_cut": int(len(remaining)), "final": int(kept.sum())},
        "components": {"count": int(len(sizes)),
                       "sizes": [int(s) for s in sizes[order][:20]],
                       "kept": int(comp), "kept_size": int(sizes[comp])},
        "seed": seed_info,
        "output": {"vertices": mesh.n_vertices, "tets": mesh.n_tets,
                   "inverted_tets": inverted, "zero_volume_tets": degenerate,
                   "surviving_twin_pairs": _surviving_pairs(mesh)},
        "timings_ms": timings,
    }
    logger.info("pipeline: %d points, %d Delaunay tets, %d removed, %d components, %d kept",
                len(points), dt.n_tets, int(removed.sum()), len(sizes), int(kept.sum()))
    return PipelineRun(surface=surface, params=rp, grid=grid, points=points, dt=dt,
                       removed=removed, labels=labels, kept=kept, mesh=mesh, stats=stats)


def _surviving_pairs(mesh: TetMesh) -> int:
    src = np.asarray(mesh.source)[np.asarray(mesh.kind) != INTERIOR]
    _, counts = np.unique(src, return_counts=True)
    return int((counts == 2).sum())


def tetrahedralize(surface: SurfaceMesh, params: PipelineParams | None = None):
    """Tetrahedralize ``surface``; returns ``(TetMesh, stats dict)``."""
    run = run_pipeline(surface, params)
    return run.mesh, run.stats


def stats_without_timings(stats: dict) -> dict:
    return {k: v for k, v in stats.items() if k != "timings_ms"}


def global_cut_check(run: PipelineRun, which: str = "cut") -> int:
    """Tets of the chosen stage still meeting an input face (all-pairs)."""
    mask = ~run.removed if which == "cut" else run.kept
    tets_xyz = run.dt.points[run.dt.tets[mask]]
    tris = run.surface.positions[run.surface.faces]
    return int(brute_force_intersecting(tets_xyz, tris).sum())


__all__: Sequence[str] = [
    "PipelineParams", "ResolvedParams", "TaggedPointSet", "PipelineRun", "PipelineError",
    "build_twin_points", "offset_directions", "classify_inside", "InsideTester",
    "six_ray_votes", "prepare_grid", "sample_interior", "cut_intersecting_tets",
    "candidate_pairs", "brute_force_intersecting", "tet_components", "deepest_point",
    "point_triangle_distance", "restore_twins", "restore_positions", "count_inverted",
    "run_pipeline", "tetrahedralize", "stats_without_timings", "global_cut_check",
]
