"""Uniform voxel grid used as a spatial partitioner.

Cells are closed at their upper side, ``(lo, hi]``, so a point sitting on a
shared cell face belongs to the lower-index cell.  Faces and tetrahedra are
stored in every cell their axis-aligned bounding box overlaps.
"""

from __future__ import annotations

import logging
import math
from enum import IntEnum

import numpy as np
from scipy import ndimage

logger = logging.getLogger(__name__)

DEFAULT_MAX_VOXELS = 2 ** 31


class Label(IntEnum):
    UNKNOWN = 0
    INSIDE = 1
    OUTSIDE = 2
    BOUNDARY = 3


class GridTooLarge(ValueError):
    pass


class _RefLayer:
    """Cell -> reference lists, built in bulk and queried via CSR arrays."""

    def __init__(self):
        self._cells = []
        self._ids = []
        self._csr = None

    def add(self, cells: np.ndarray, ids: np.ndarray):
        self._cells.append(np.asarray(cells, np.int64))
        self._ids.append(np.asarray(ids, np.int64))
        self._csr = None

    def _build(self):
        if self._csr is None:
            if self._cells:
                cells = np.concatenate(self._cells)
                ids = np.concatenate(self._ids)
            else:
                cells = ids = np.zeros(0, np.int64)
            order = np.lexsort((ids, cells))
            self._csr = (cells[order], ids[order])
            self._cells, self._ids = [self._csr[0]], [self._csr[1]]
        return self._csr

    def lookup(self, flat: int) -> np.ndarray:
        cells, ids = self._build()
        lo, hi = np.searchsorted(cells, [flat, flat + 1])
        return ids[lo:hi]

    def lookup_many(self, flats) -> np.ndarray:
        cells, ids = self._build()
        flats = np.asarray(flats, np.int64)
        lo = np.searchsorted(cells, flats)
        hi = np.searchsorted(cells, flats + 1)
        if len(flats) == 0 or (hi - lo).sum() == 0:
            return np.zeros(0, np.int64)
        return np.concatenate([ids[a:b] for a, b in zip(lo, hi)])

    def pairs(self):
        return self._build()

    def counts(self, n_cells: int) -> np.ndarray:
        cells, _ = self._build()
        return np.bincount(cells, minlength=n_cells)


class VoxelGrid:
    """Voxel grid over an axis-aligned box.

    Stores point, face and tetrahedron references per voxel plus an
    inside/outside label for voxels without surface faces.
    """

    def __init__(self, origin, voxel_size: float, dims):
        self.origin = np.asarray(origin, float)
        self._origin_list = self.origin.tolist()
        self.voxel_size = float(voxel_size)
        self.dims = tuple(int(d) for d in dims)
        self.labels = np.zeros(self.dims, np.int8)
        self.faces = _RefLayer()
        self.tets = _RefLayer()
        self._points: dict[int, list[int]] = {}
        self._point_xyz: dict[int, tuple] = {}
        self._face_xyz = None

    # ---------------------------------------------------------- indexing

    @property
    def n_cells(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def cell_index(self, xyz) -> np.ndarray:
        """Integer cell coordinates (lower-index tie-break, clamped)."""
        x = (np.asarray(xyz, float) - self.origin) / self.voxel_size
        idx = np.ceil(x).astype(np.int64) - 1
        return np.clip(idx, 0, np.array(self.dims) - 1)

    def _axis_cell(self, x: float, k: int) -> int:
        i = math.ceil((x - self._origin_list[k]) / self.voxel_size) - 1
        return min(max(i, 0), self.dims[k] - 1)

    def flat(self, ijk) -> np.ndarray:
        ijk = np.asarray(ijk, np.int64)
        return (ijk[..., 0] * self.dims[1] + ijk[..., 1]) * self.dims[2] + ijk[..., 2]

    def unflat(self, flat):
        flat = np.asarray(flat, np.int64)
        k = flat % self.dims[2]
        j = (flat // self.dims[2]) % self.dims[1]
        i = flat // (self.dims[1] * self.dims[2])
        return np.stack([i, j, k], axis=-1)

    def cell_center(self, ijk) -> np.ndarray:
        return self.origin + (np.asarray(ijk, float) + 0.5) * self.voxel_size

    def _box_cells(self, lo, hi):
        """Flat indices and owner rows for many AABBs ``lo, hi`` (n, 3)."""
        a = self.cell_index(lo)
        b = self.cell_index(hi)
        span = b - a + 1
        counts = span.prod(axis=1)
        owner = np.repeat(np.arange(len(a)), counts)
        if len(owner) == 0:
            return np.zeros(0, np.int64), owner
        start = np.cumsum(counts) - counts
        local = np.arange(len(owner)) - np.repeat(start, counts)
        sy = np.repeat(span[:, 1], counts)
        sz = np.repeat(span[:, 2], counts)
        dk = local % sz
        dj = (local // sz) % sy
        di = local // (sz * sy)
        ijk = np.stack([di, dj, dk], axis=1) + a[owner]
        return self.flat(ijk), owner

    # --------------------------------------------------------- insertion

    def insert_faces(self, ids, tris) -> None:
        tris = np.asarray(tris, float).reshape(-1, 3, 3)
        cells, owner = self._box_cells(tris.min(axis=1), tris.max(axis=1))
        self.faces.add(cells, np.asarray(ids, np.int64)[owner])

    def insert_face(self, ref: int, tri) -> None:
        self.insert_faces([ref], [tri])

    def insert_tets(self, ids, tets) -> None:
        tets = np.asarray(tets, float).reshape(-1, 4, 3)
        cells, owner = self._box_cells(tets.min(axis=1), tets.max(axis=1))
        self.tets.add(cells, np.asarray(ids, np.int64)[owner])

    def clear_tets(self) -> None:
        self.tets = _RefLayer()

    def insert_tet(self, ref: int, tet) -> None:
        self.insert_tets([ref], [tet])

    def insert_point(self, ref: int, p) -> None:
        p = tuple(float(x) for x in p)
        f = int(self.flat(self.cell_index(p)))
        self._points.setdefault(f, []).append(ref)
        self._point_xyz[ref] = p

    def insert_points(self, ids, pts) -> None:
        pts = np.asarray(pts, float).reshape(-1, 3)
        flats = self.flat(self.cell_index(pts)).tolist()
        for ref, f, p in zip(np.asarray(ids).tolist(), flats, pts.tolist()):
            self._points.setdefault(f, []).append(ref)
            self._point_xyz[ref] = tuple(p)

    def points_in(self, flat: int) -> list[int]:
        return self._points.get(int(flat), [])

    @property
    def n_points(self) -> int:
        return len(self._point_xyz)

    # ----------------------------------------------------------- queries

    def ray_voxels(self, origin, axis: int, sign: int) -> list[tuple]:
        """Voxels met by an axis-aligned ray, in order of increasing distance."""
        o = np.asarray(origin, float)
        lo = self.origin
        hi = self.origin + np.array(self.dims) * self.voxel_size
        for k in range(3):
            if k != axis and not (lo[k] <= o[k] <= hi[k]):
                return []
        if (sign > 0 and o[axis] > hi[axis]) or (sign < 0 and o[axis] < lo[axis]):
            return []
        ijk = self.cell_index(o)
        start = int(ijk[axis])
        stop = self.dims[axis] if sign > 0 else -1
        out = []
        for i in range(start, stop, 1 if sign > 0 else -1):
            c = list(ijk)
            c[axis] = i
            out.append(tuple(int(x) for x in c))
        return out

    def query_ray(self, origin, axis: int, sign: int):
        """Yield face references along an axis-aligned ray, each once."""
        seen = set()
        for c in self.ray_voxels(origin, axis, sign):
            for f in self.faces.lookup(int(self.flat(c))).tolist():
                if f not in seen:
                    seen.add(f)
                    yield f

    def row_faces(self, point, axis: int) -> np.ndarray:
        """Unique faces stored anywhere in the voxel row through ``point``."""
        ijk = self.cell_index(point)
        n = self.dims[axis]
        row = np.repeat(ijk[None], n, axis=0)
        row[:, axis] = np.arange(n)
        return np.unique(self.faces.lookup_many(self.flat(row)))

    def _cells_in_box(self, lo, hi) -> np.ndarray:
        a = self.cell_index(lo)
        b = self.cell_index(hi)
        ii, jj, kk = np.meshgrid(np.arange(a[0], b[0] + 1), np.arange(a[1], b[1] + 1),
                                 np.arange(a[2], b[2] + 1), indexing="ij")
        return self.flat(np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1))

    def nearest_within(self, query, radius: float):
        """Nearest stored point no farther than ``radius``: ``(ref, dist)`` or None."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        q = tuple(float(x) for x in query)
        a = [self._axis_cell(q[k] - radius, k) for k in range(3)]
        b = [self._axis_cell(q[k] + radius, k) for k in range(3)]
        best, best_d2 = None, radius * radius
        d0, d1, d2 = self.dims[1] * self.dims[2], self.dims[2], 1
        pts = self._points
        xyz = self._point_xyz
        for i in range(a[0], b[0] + 1):
            for j in range(a[1], b[1] + 1):
                base = i * d0 + j * d1
                for k in range(a[2], b[2] + 1):
                    cell = pts.get(base + k * d2)
                    if not cell:
                        continue
                    for ref in cell:
                        p = xyz[ref]
                        dd = ((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
                              + (p[2] - q[2]) ** 2)
                        if dd < best_d2 or (dd == best_d2 and (best is None or ref < best)):
                            best, best_d2 = ref, dd
        if best is None:
            return None
        return best, math.sqrt(best_d2)

    def nearest_point(self, query):
        """Exact nearest stored point (ties: lower reference); None if empty."""
        if not self._point_xyz:
            return None
        q = np.asarray(query, float)
        c = self.cell_index(q)
        h = self.voxel_size
        best, best_d2 = None, math.inf
        max_ring = max(self.dims)
        for ring in range(max_ring + 1):
            lo = np.maximum(c - ring, 0)
            hi = np.minimum(c + ring, np.array(self.dims) - 1)
            for i in range(lo[0], hi[0] + 1):
                for j in range(lo[1], hi[1] + 1):
                    for k in range(lo[2], hi[2] + 1):
                        if max(abs(i - c[0]), abs(j - c[1]), abs(k - c[2])) != ring:
                            continue
                        for ref in self._points.get((i * self.dims[1] + j) * self.dims[2] + k, ()):
                            p = self._point_xyz[ref]
                            dd = ((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
                                  + (p[2] - q[2]) ** 2)
                            if dd < best_d2 or (dd == best_d2 and ref < best):
                                best, best_d2 = ref, dd
            if best is not None and math.sqrt(best_d2) < ring * h:
                break
        return best, math.sqrt(best_d2)

    # ---------------------------------------------------- classification

    def face_counts(self) -> np.ndarray:
        return self.faces.counts(self.n_cells).reshape(self.dims)

    def classify_empty_voxels(self, inside_test) -> int:
        """Label every voxel Boundary / Inside / Outside.

        Connected regions of face-free voxels (6-connectivity) share a label
        decided by one call of ``inside_test`` at the centre of the region's
        lowest-index voxel.  Returns the number of tests performed.
        """
        boundary = self.face_counts() > 0
        regions, n_regions = ndimage.label(~boundary)
        labels = np.full(self.dims, Label.BOUNDARY, np.int8)
        if n_regions:
            flat_regions = regions.ravel()
            ids, first = np.unique(flat_regions, return_index=True)
            verdict = np.zeros(n_regions + 1, np.int8)
            for rid, f in zip(ids, first):
                if rid == 0:
                    continue
                center = self.cell_center(self.unflat(f))
                verdict[rid] = Label.INSIDE if inside_test(center) else Label.OUTSIDE
            empty = regions > 0
            labels[empty] = verdict[regions[empty]]
        self.labels = labels
        return int(n_regions)

    def label_at(self, p) -> Label:
        return Label(int(self.labels[tuple(self.cell_index(p))]))


def build_grid(lo, hi, voxel_size: float, max_voxels: int = DEFAULT_MAX_VOXELS) -> VoxelGrid:
    """Grid covering the box ``[lo, hi]``; flat axes get a single voxel."""
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    extent = hi - lo
    dims = np.maximum(np.ceil(extent / voxel_size - 1e-12).astype(np.int64), 1)
    # exact ceil check against rounding in the division above
    dims = np.where(lo + dims * voxel_size < hi, dims + 1, dims)
    origin = np.where(extent > 0, lo, lo - voxel_size / 2.0)
    total = int(np.prod(dims.astype(object)))
    if total > max_voxels:
        raise GridTooLarge(f"{total} voxels exceeds cap {max_voxels}; "
                           f"use a larger voxel size")
    return VoxelGrid(origin, voxel_size, dims)


def build_grid_auto(lo, hi, voxel_size: float, max_voxels: int = DEFAULT_MAX_VOXELS):
    """Like :func:`build_grid` but coarsens the voxels until under the cap."""
    size = voxel_size
    while True:
        try:
            grid = build_grid(lo, hi, size, max_voxels)
        except GridTooLarge:
            size *= 1.25
            continue
        if size != voxel_size:
            logger.warning("voxel size coarsened from %g to %g to stay under %d voxels",
                           voxel_size, size, max_voxels)
        return grid
