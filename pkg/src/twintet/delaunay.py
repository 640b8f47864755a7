"""Incremental Delaunay triangulation in 2D and 3D.

Bowyer-Watson insertion in a spatially sorted order.  Instead of a large
enclosing simplex the triangulation is closed with "ghost" cells that join
each convex-hull facet to a vertex at infinity, so the returned cells cover
exactly the convex hull.  All decisions go through the exact-fallback
predicates, so the result is a true Delaunay triangulation of the input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .predicates import incircle, insphere, orient2d, orient3d

logger = logging.getLogger(__name__)

INF = -1  # the vertex at infinity; always stored last in a ghost cell


class DelaunayError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Tetrahedralization:
    """Finite Delaunay cells with face adjacency.

    ``neighbors[t, i]`` is the cell across the facet opposite local vertex
    ``i`` or ``-1`` on the convex hull.  Cells are positively oriented.
    """

    points: np.ndarray
    tets: np.ndarray
    neighbors: np.ndarray

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def edges(self) -> np.ndarray:
        k = self.tets.shape[1]
        pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
        e = np.concatenate([self.tets[:, [i, j]] for i, j in pairs])
        e.sort(axis=1)
        return np.unique(e, axis=0)


def morton_order(points: np.ndarray, bits: int = 10) -> np.ndarray:
    """Indices sorted along a Z-order curve, ties broken by index."""
    p = np.asarray(points, float)
    lo = p.min(axis=0)
    span = np.ptp(p, axis=0)
    span[span == 0] = 1.0
    q = np.minimum(((p - lo) / span * (2 ** bits)).astype(np.int64), 2 ** bits - 1)
    code = np.zeros(len(p), np.int64)
    dim = p.shape[1]
    for b in range(bits):
        for k in range(dim):
            code |= ((q[:, k] >> b) & 1) << (b * dim + k)
    return np.lexsort((np.arange(len(p)), code))


def _check_duplicates(p: np.ndarray):
    _, first, inv = np.unique(p, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    dup = np.flatnonzero(first[inv] != np.arange(len(p)))
    if len(dup):
        i = int(dup[0])
        raise DelaunayError(f"duplicate points {int(first[inv[i]])} and {i}")


class _BowyerWatson:
    """Dimension-generic incremental construction (dim = 2 or 3)."""

    def __init__(self, pts: list, dim: int):
        self.p = pts
        self.dim = dim
        self.k = dim + 1
        if dim == 3:
            self._orient = orient3d
            self._insph = insphere
        else:
            self._orient = orient2d
            self._insph = incircle
        self.cells: list = []
        self.nbr: list = []
        self.alive: list = []
        self.free: list = []
        self.stamp: list = []
        self.cur_stamp = 0
        self.last = 0
        self.rot = 0

    # -- predicates on cells
    def _orient_cell(self, c):
        return self._orient(*[self.p[v] for v in c])

    def _finite_conflict(self, t, q):
        return self._insph(*[self.p[v] for v in self.cells[t]], q) > 0

    def _conflict(self, t, q):
        c = self.cells[t]
        if c[-1] != INF:
            return self._finite_conflict(t, q)
        s = self._orient(*[self.p[v] for v in c[:-1]], q)
        if s != 0:
            return s > 0
        return self._finite_conflict(self.nbr[t][-1], q)

    # -- storage
    def _new(self, cell):
        if self.free:
            t = self.free.pop()
            self.cells[t] = cell
            self.nbr[t] = [-1] * self.k
            self.alive[t] = True
        else:
            t = len(self.cells)
            self.cells.append(cell)
            self.nbr.append([-1] * self.k)
            self.alive.append(True)
            self.stamp.append(0)
        return t

    def _link_internal(self, new_ids, skip_vertex):
        table = {}
        for t in new_ids:
            c = self.cells[t]
            for i in range(self.k):
                if skip_vertex is not None and c[i] == skip_vertex:
                    continue
                key = tuple(sorted(c[j] for j in range(self.k) if j != i))
                other = table.pop(key, None)
                if other is None:
                    table[key] = (t, i)
                else:
                    u, j = other
                    self.nbr[t][i] = u
                    self.nbr[u][j] = t

    def start(self, first):
        first = list(first)
        if self._orient_cell(first) < 0:
            first[0], first[1] = first[1], first[0]
        t0 = self._new(first)
        ids = [t0]
        for i in range(self.k):
            g = list(first)
            g[i] = INF
            if i == self.dim:
                g[0], g[1] = g[1], g[0]
            else:
                g[i], g[self.dim] = g[self.dim], g[i]
            ids.append(self._new(g))
        self._link_internal(ids, skip_vertex=None)
        self.last = t0

    # -- location
    def _locate(self, q):
        t = self.last
        if not self.alive[t]:
            t = next(i for i, a in enumerate(self.alive) if a)
        if self.cells[t][-1] == INF:
            t = self.nbr[t][-1]
        prev = -1
        orient = self._orient
        p = self.p
        for _ in range(20 * len(self.cells) + 100):
            c = self.cells[t]
            if c[-1] == INF:
                return t
            self.rot = (self.rot + 1) % self.k
            moved = False
            for kk in range(self.k):
                i = (self.rot + kk) % self.k
                n = self.nbr[t][i]
                if n == prev:
                    continue
                pts = [p[v] for v in c]
                pts[i] = q
                if orient(*pts) < 0:
                    prev, t = t, n
                    moved = True
                    break
            if not moved:
                return t
        logger.debug("walk did not converge, scanning")
        for t, a in enumerate(self.alive):
            if a and self._conflict(t, q):
                return t
        raise DelaunayError("point location failed")

    def insert(self, v):
        q = self.p[v]
        t = self._locate(q)
        if not self._conflict(t, q):
            # walk ended on a cell whose closure holds q without strict
            # conflict; only possible at ghosts touching the hull plane
            for n in self.nbr[t]:
                if self._conflict(n, q):
                    t = n
                    break
            else:
                t = next(i for i, a in enumerate(self.alive)
                         if a and self._conflict(i, q))
        self.cur_stamp += 1
        stamp = self.cur_stamp
        # stamp[t] == stamp: in cavity; == -stamp: tested, not in cavity
        self.stamp[t] = stamp
        cavity = [t]
        boundary = []
        head = 0
        while head < len(cavity):
            c = cavity[head]
            head += 1
            for i, n in enumerate(self.nbr[c]):
                s = self.stamp[n]
                if s == stamp:
                    continue
                if s != -stamp:
                    if self._conflict(n, q):
                        self.stamp[n] = stamp
                        cavity.append(n)
                        continue
                    self.stamp[n] = -stamp
                boundary.append((c, i, n))
        records = []
        for c, i, n in boundary:
            j = self.nbr[n].index(c)
            cell = list(self.cells[c])
            cell[i] = v
            records.append((cell, i, n, j))
        for c in cavity:
            self.alive[c] = False
            self.free.append(c)
        new_ids = []
        for cell, i, n, j in records:
            t_new = self._new(cell)
            self.nbr[t_new][i] = n
            self.nbr[n][j] = t_new
            new_ids.append(t_new)
        self._link_internal(new_ids, skip_vertex=v)
        for t_new in new_ids:
            if self.cells[t_new][-1] != INF:
                self.last = t_new
                break

    def finite(self):
        ids = [t for t, a in enumerate(self.alive) if a and self.cells[t][-1] != INF]
        remap = {t: i for i, t in enumerate(ids)}
        cells = np.array([self.cells[t] for t in ids], np.int64).reshape(-1, self.k)
        nbrs = np.array([[remap.get(n, -1) for n in self.nbr[t]] for t in ids],
                        np.int64).reshape(-1, self.k)
        return cells, nbrs


def _initial_simplex(p: np.ndarray, order: np.ndarray, dim: int):
    """First ``dim + 1`` affinely independent points along ``order``."""
    pts = [tuple(x) for x in p]
    chosen = [int(order[0])]
    for idx in order[1:]:
        idx = int(idx)
        cand = chosen + [idx]
        if len(cand) == 2:
            ok = pts[cand[0]] != pts[cand[1]]
        elif len(cand) == 3:
            a, b, c = (pts[i] for i in cand)
            if dim == 2:
                ok = orient2d(a, b, c) != 0
            else:
                ok = any(orient2d((a[i], a[j]), (b[i], b[j]), (c[i], c[j])) != 0
                         for i, j in ((0, 1), (1, 2), (0, 2)))
        else:
            ok = orient3d(*(pts[i] for i in cand)) != 0
        if ok:
            chosen.append(idx)
            if len(chosen) == dim + 1:
                return chosen
    return None


def _triangulate(points, dim: int):
    p = np.asarray(points, float)
    if p.ndim != 2 or p.shape[1] != dim:
        raise DelaunayError(f"expected an (n, {dim}) array of points")
    if len(p) < dim + 1:
        raise DelaunayError(f"need at least {dim + 1} points")
    if not np.all(np.isfinite(p)):
        raise DelaunayError("non-finite coordinates")
    _check_duplicates(p)
    order = morton_order(p)
    first = _initial_simplex(p, order, dim)
    if first is None:
        raise DelaunayError("all points are coplanar" if dim == 3
                            else "all points are collinear")
    bw = _BowyerWatson([tuple(x) for x in p.tolist()], dim)
    bw.start(first)
    used = set(first)
    for v in order.tolist():
        if v not in used:
            bw.insert(v)
    cells, nbrs = bw.finite()
    logger.debug("delaunay%dd: %d points, %d cells", dim, len(p), len(cells))
    return Tetrahedralization(points=p, tets=cells, neighbors=nbrs)


def delaunay3d(points) -> Tetrahedralization:
    """Delaunay tetrahedralization of an ``(n, 3)`` point array.

    Raises
    ------
    DelaunayError
        On duplicate points (naming their indices) or coplanar input.
    """
    return _triangulate(points, 3)


def delaunay2d(points) -> Tetrahedralization:
    """Delaunay triangulation of an ``(n, 2)`` point array (``tets`` are triangles)."""
    return _triangulate(points, 2)


def empty_sphere_violations(tri: Tetrahedralization) -> int:
    """Brute-force count of (cell, point) pairs with the point strictly inside."""
    pts = [tuple(x) for x in tri.points.tolist()]
    test = insphere if tri.points.shape[1] == 3 else incircle
    count = 0
    for cell in tri.tets.tolist():
        members = set(cell)
        verts = [pts[v] for v in cell]
        for i, q in enumerate(pts):
            if i not in members and test(*verts, q) > 0:
                count += 1
    return count
