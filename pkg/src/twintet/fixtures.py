"""Deterministic synthetic test surfaces.

All generators return outward-oriented meshes.  Several are deliberately
defective: ``fused_spheres`` and ``two_ridges`` self-intersect, and
``sphere_with_hole`` is not watertight.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .mesh import SurfaceMesh

logger = logging.getLogger(__name__)

FIXTURES = ("sphere", "sphere-hole", "fused-spheres", "two-cubes", "two-ridges", "lobes-2d")


def _orient_outward(positions, faces):
    """Flip the whole mesh if its signed volume is negative."""
    p = positions[faces]
    vol = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum()
    if vol < 0:
        faces = faces[:, [0, 2, 1]]
    return faces


def fibonacci_points(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def sphere(n_vertices: int = 1000, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Convex-hull triangulation of a Fibonacci point set on a sphere."""
    unit = fibonacci_points(n_vertices)
    faces = ConvexHull(unit).simplices.astype(np.int64)
    normals = np.cross(unit[faces[:, 1]] - unit[faces[:, 0]], unit[faces[:, 2]] - unit[faces[:, 0]])
    flip = np.einsum("ij,ij->i", normals, unit[faces].mean(axis=1)) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return SurfaceMesh(unit * radius + np.asarray(center, float), faces)


def sphere_with_hole(n_vertices: int = 1000, drop: float = 0.02, seed: int = 0) -> SurfaceMesh:
    """Sphere with a random fraction ``drop`` of its faces removed."""
    s = sphere(n_vertices)
    rng = np.random.default_rng(seed)
    n_drop = int(round(drop * s.n_faces))
    gone = rng.choice(s.n_faces, size=n_drop, replace=False)
    keep = np.ones(s.n_faces, bool)
    keep[gone] = False
    return SurfaceMesh(s.positions, s.faces[keep])


# ------------------------------------------------------------ fused spheres


def _ring_strip(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Triangles between two rings of equal length (closed loops)."""
    m = len(a)
    j = np.arange(m)
    k = (j + 1) % m
    return np.concatenate([np.stack([a[j], b[j], b[k]], 1), np.stack([a[j], b[k], a[k]], 1)])


def _stitch(a: np.ndarray, b: np.ndarray, pos: np.ndarray) -> list:
    """Close the band between two closed rings, choosing the shorter diagonal.

    Rings are index arrays traversed in the same rotational sense and
    starting at roughly the same angle.
    """
    na, nb = len(a), len(b)
    i = j = 0
    tris = []
    while i < na or j < nb:
        a0, a1 = a[i % na], a[(i + 1) % na]
        b0, b1 = b[j % nb], b[(j + 1) % nb]
        if j >= nb or (i < na and np.linalg.norm(pos[a1] - pos[b0]) <= np.linalg.norm(pos[b1] - pos[a0])):
            tris.append((a0, b0, a1))
            i += 1
        else:
            tris.append((a0, b0, b1))
            j += 1
    return tris


def delaunay_flips(positions: np.ndarray, faces: np.ndarray, max_rounds: int = 50) -> np.ndarray:
    """Flip edges whose opposite angles sum above pi (extrinsic angles)."""
    faces = [list(f) for f in faces.tolist()]

    def angle(p, q, r):  # angle at p
        u, v = positions[q] - positions[p], positions[r] - positions[p]
        c = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
        return np.arccos(np.clip(c, -1.0, 1.0))

    for _ in range(max_rounds):
        edge = {}
        for f, tri in enumerate(faces):
            for k in range(3):
                edge.setdefault(frozenset((tri[k], tri[(k + 1) % 3])), []).append(f)
        flipped = 0
        touched = set()
        for key, fs in edge.items():
            if len(fs) != 2 or fs[0] in touched or fs[1] in touched:
                continue
            u, v = tuple(key)
            f, g = faces[fs[0]], faces[fs[1]]
            x = next(w for w in f if w not in key)
            y = next(w for w in g if w not in key)
            if x == y or frozenset((x, y)) in edge:
                continue
            if angle(x, u, v) + angle(y, u, v) > np.pi + 1e-9:
                # keep orientation: f traverses u->v or v->u
                k = f.index(x)
                p, q = f[(k + 1) % 3], f[(k + 2) % 3]
                faces[fs[0]] = [x, p, y]
                faces[fs[1]] = [x, y, q]
                touched.update(fs)
                flipped += 1
        if not flipped:
            break
    return np.asarray(faces, np.int64)


def fused_spheres(overlap: float = 0.2, tube_radius: float = 0.35, bend_radius: float = 1.0,
                  segments: int = 24) -> SurfaceMesh:
    """A tube bent along a circle whose two spherical end caps interpenetrate.

    The caps are exact hemispheres of radius ``tube_radius``; their centres
    are ``(2 - overlap) * tube_radius`` apart, so the end spheres overlap by
    ``overlap`` radii.  The surface is a single connected, self-intersecting
    mesh: the ends are close in space but on opposite ends of the surface.
    """
    rho, rc = float(tube_radius), float(bend_radius)
    if not 0 < overlap < 2:
        raise ValueError("overlap must lie in (0, 2)")
    if rho >= rc:
        raise ValueError("tube radius must be below the bend radius")
    chord = (2.0 - overlap) * rho
    gap = 2.0 * np.arcsin(chord / (2.0 * rc))
    half = np.pi - gap / 2.0  # the tube spans angles [-half, half]
    step = 2 * np.pi * rho / segments
    n_rings = max(2, int(np.ceil(2 * half * rc / (step * np.sqrt(3) / 2))) + 1)
    ez = np.array([0.0, 0.0, 1.0])

    def frame(alpha):
        radial = np.array([np.cos(alpha), np.sin(alpha), 0.0])
        tangent = np.array([-np.sin(alpha), np.cos(alpha), 0.0])
        return rc * radial, radial, tangent

    verts = []

    def add(pts):
        start = len(verts)
        verts.extend(np.atleast_2d(pts))
        return np.arange(start, start + len(np.atleast_2d(pts)))

    def circle(alpha, offset_angle, radius, shift, count):
        c, er, t = frame(alpha)
        psi = offset_angle + 2 * np.pi * np.arange(count) / count
        return (c + radius * (np.cos(psi)[:, None] * er + np.sin(psi)[:, None] * ez)
                + shift * t)

    n_cap = max(2, int(round(0.5 * np.pi * rho / (step * np.sqrt(3) / 2))))

    def cap(alpha, sign, offset):
        rings = []
        for k in range(1, n_cap):
            phi = 0.5 * np.pi * k / n_cap
            count = max(5, int(round(segments * np.cos(phi))))
            rings.append(circle(alpha, offset + (k % 2) * np.pi / count, rho * np.cos(phi),
                                sign * rho * np.sin(phi), count))
        c, _, t = frame(alpha)
        return rings, c + sign * rho * t

    start_rings, start_pole = cap(-half, -1.0, 0.0)
    ring_ids = []
    pole0 = add(start_pole)[0]
    for ring in reversed(start_rings):
        ring_ids.append(add(ring))
    offset_end = 0.0
    for r in range(n_rings):
        alpha = -half + 2 * half * r / (n_rings - 1)
        offset_end = (r % 2) * np.pi / segments
        ring_ids.append(add(circle(alpha, offset_end, rho, 0.0, segments)))
    end_rings, end_pole = cap(half, 1.0, offset_end)
    for ring in end_rings:
        ring_ids.append(add(ring))
    pole1 = add(end_pole)[0]
    pos = np.asarray(verts, float)

    faces = []
    first = ring_ids[0]
    m = len(first)
    faces.extend((pole0, first[(j + 1) % m], first[j]) for j in range(m))
    for ra, rb in zip(ring_ids[:-1], ring_ids[1:]):
        faces.extend(_stitch(ra, rb, pos))
    last = ring_ids[-1]
    m = len(last)
    faces.extend((pole1, last[j], last[(j + 1) % m]) for j in range(m))
    faces = np.asarray(faces, np.int64)
    faces = _fix_orientation(pos, faces)
    faces = delaunay_flips(pos, faces)
    return SurfaceMesh(pos, faces)


def fused_sphere_caps(mesh: SurfaceMesh, tube_radius: float = 0.35, bend_radius: float = 1.0,
                      overlap: float = 0.2):
    """Vertex masks of the two end caps (within one radius of a cap centre)."""
    chord = (2.0 - overlap) * tube_radius
    half = np.pi - np.arcsin(chord / (2.0 * bend_radius))
    out = []
    for alpha in (-half, half):
        c = bend_radius * np.array([np.cos(alpha), np.sin(alpha), 0.0])
        out.append(np.linalg.norm(mesh.positions - c, axis=1) <= tube_radius * (1 + 1e-9))
    return out


# ---------------------------------------------------------------- two cubes


def cube(size: float = 1.0, divisions: int = 4, origin=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Axis-aligned cube surface with each side split into a regular grid."""
    n = int(divisions)
    verts = {}
    pos = []
    faces = []

    def vid(ijk):
        if ijk not in verts:
            verts[ijk] = len(pos)
            pos.append(ijk)
        return verts[ijk]

    for axis in range(3):
        u, v = (axis + 1) % 3, (axis + 2) % 3
        for side in (0, n):
            for a in range(n):
                for b in range(n):
                    quad = []
                    for da, db in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        c = [0, 0, 0]
                        c[axis], c[u], c[v] = side, a + da, b + db
                        quad.append(vid(tuple(c)))
                    if side == 0:
                        quad = quad[::-1]
                    faces.append([quad[0], quad[1], quad[2]])
                    faces.append([quad[0], quad[2], quad[3]])
    positions = np.asarray(pos, float) * (size / n) + np.asarray(origin, float)
    return SurfaceMesh(positions, np.asarray(faces, np.int64))


def two_cubes(size: float = 1.0, gap: float = 0.5, divisions: int = 4):
    """Two disjoint cubes along x.  Returns ``(mesh, box_a, box_b)``."""
    a = cube(size, divisions)
    b = cube(size, divisions, origin=(size + gap, 0.0, 0.0))
    mesh = SurfaceMesh(np.concatenate([a.positions, b.positions]),
                       np.concatenate([a.faces, b.faces + a.n_vertices]))
    box_a = (np.zeros(3), np.full(3, size))
    box_b = (np.array([size + gap, 0.0, 0.0]), np.array([2 * size + gap, size, size]))
    return mesh, box_a, box_b


# ------------------------------------------------------- two ridges / lobes


@dataclass(frozen=True)
class RidgeProfile:
    """Closed polygon of a base slab carrying two fingers that lean together.

    ``lean`` scales how far each finger's tip moves toward the other; the
    default makes the two tips interpenetrate.
    """

    lean: float = 1.0
    finger_points: int = 12
    width: float = 0.32
    height: float = 1.1

    def polygon(self):
        """``(points (n, 2), tip_a, tip_b)`` with counter-clockwise orientation.

        Edges longer than the finger point spacing are subdivided so that no
        interior sample can sit next to the middle of a long edge.  The
        subdivision counts come from the upright profile, so every lean gives
        the same number of points.
        """
        pts, ta, tb = self._raw(self.lean)
        ref, _, _ = self._raw(0.0)
        spacing = self.height / (self.finger_points - 1)
        seg = np.linalg.norm(np.roll(ref, -1, axis=0) - ref, axis=1)
        counts = np.maximum(1, np.ceil(seg / spacing - 1e-9).astype(int))
        out, new_index = [], []
        for i, k in enumerate(counts):
            new_index.append(len(out))
            a, b = pts[i], pts[(i + 1) % len(pts)]
            for j in range(k):
                out.append(a + (b - a) * (j / k))
        return np.asarray(out), new_index[ta], new_index[tb]

    def _raw(self, lean):
        base_h, base_w = 0.35, 1.6
        roots = (-0.62, 0.62)
        pts = [(-base_w, 0.0), (base_w, 0.0), (base_w, base_h)]
        tips = []

        def finger(root, direction, tip_dx):
            # centreline from (root, base_h) to the tip, flanks offset by width/2
            top = np.array([root + direction * tip_dx, base_h + self.height])
            bottom = np.array([root, base_h])
            axis = top - bottom
            axis_n = axis / np.linalg.norm(axis)
            normal = np.array([axis_n[1], -axis_n[0]])  # right-hand side
            s = np.linspace(0.0, 1.0, self.finger_points)
            hw = self.width / 2
            right = bottom + s[:, None] * axis + hw * normal
            left = bottom + s[:, None] * axis - hw * normal
            # rounded tip: half circle over the top
            ang = np.linspace(0, np.pi, 7)[1:-1]
            cap = top + hw * (np.cos(ang)[:, None] * normal + np.sin(ang)[:, None] * axis_n)
            return right, cap, left[::-1], top + hw * axis_n

        tip_dx = 0.62 * lean
        # finger B (right), traversed up its right flank and down its left flank
        rb, cb, lb, tip_b = finger(roots[1], -1.0, tip_dx)
        pts.extend(map(tuple, rb))
        pts.extend(map(tuple, cb))
        tip_index_b = len(pts) - len(cb) + len(cb) // 2
        pts.extend(map(tuple, lb))
        ra, ca, la, tip_a = finger(roots[0], 1.0, tip_dx)
        pts.extend(map(tuple, ra))
        pts.extend(map(tuple, ca))
        tip_index_a = len(pts) - len(ca) + len(ca) // 2
        pts.extend(map(tuple, la))
        pts.append((-base_w, base_h))
        return np.asarray(pts, float), tip_index_a, tip_index_b


def _polygon_area(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p):
    """Number of properly crossing edge pairs of a closed polygon."""
    from .predicates import segment_crosses_segment_2d

    n = len(p)
    pts = [tuple(x) for x in p.tolist()]
    count = 0
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if segment_crosses_segment_2d(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                count += 1
    return count


def lobes_2d(lean: float = 1.0):
    """Self-overlapping 2D polygon with two lobes whose tips interpenetrate.

    Returns ``(points (n, 2), segments (n, 2), tip_a, tip_b)``.
    """
    pts, ta, tb = RidgeProfile(lean=lean).polygon()
    n = len(pts)
    seg = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    return pts, seg, ta, tb


def two_ridges(length: float = 1.6, slices: int = 24, lean: float = 1.0,
               end_lean: float = 0.55):
    """Extruded :class:`RidgeProfile` whose fingers interpenetrate mid-way.

    The lean tapers to ``end_lean`` at both ends, where the profile is a
    simple polygon, and each end is closed by a cone to an apex just beyond
    the end slice.  Returns ``(mesh, crest_a, crest_b)`` with the crest
    vertex indices (the finger tips of every slice).
    """
    ys = np.linspace(0.0, length, slices)
    rings, crest_a, crest_b = [], [], []
    verts = []
    for y in ys:
        t = np.sin(np.pi * y / length) ** 2
        prof, ta, tb = RidgeProfile(lean=end_lean + (lean - end_lean) * t).polygon()
        start = len(verts)
        verts.extend([(x, y, z) for x, z in prof])
        rings.append(np.arange(start, start + len(prof)))
        crest_a.append(start + ta)
        crest_b.append(start + tb)
    faces = [_ring_strip(a, b) for a, b in zip(rings[:-1], rings[1:])]
    m = len(rings[0])
    j = np.arange(m)
    for ring, y, sign in ((rings[0], ys[0], -1.0), (rings[-1], ys[-1], 1.0)):
        prof = np.asarray(verts)[ring]
        centroid = prof.mean(axis=0)
        apex = (centroid[0], y + sign * (length / slices), centroid[2])
        verts.append(apex)
        a = len(verts) - 1
        faces.append(np.stack([np.full(m, a), ring[j], ring[(j + 1) % m]], 1))
    positions = np.asarray(verts, float)
    faces = np.concatenate(faces).astype(np.int64)
    # bring every face to a consistent outward orientation
    faces = _fix_orientation(positions, faces)
    return SurfaceMesh(positions, faces), np.asarray(crest_a), np.asarray(crest_b)


def _fix_orientation(positions, faces):
    """Propagate a consistent orientation across edges, then orient outward."""
    from collections import deque

    faces = faces.copy()
    edge_faces = {}
    for f, tri in enumerate(faces.tolist()):
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            edge_faces.setdefault((min(a, b), max(a, b)), []).append(f)
    seen = np.zeros(len(faces), bool)
    for root in range(len(faces)):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            f = queue.popleft()
            tri = faces[f].tolist()
            for k in range(3):
                a, b = tri[k], tri[(k + 1) % 3]
                for g in edge_faces[(min(a, b), max(a, b))]:
                    if seen[g]:
                        continue
                    other = faces[g].tolist()
                    # consistent neighbours traverse the shared edge oppositely
                    same = any(other[i] == a and other[(i + 1) % 3] == b for i in range(3))
                    if same:
                        faces[g] = faces[g][[0, 2, 1]]
                    seen[g] = True
                    queue.append(g)
    return _orient_outward(positions, faces)


def ribbon_from_polygon(points2d: np.ndarray, width: float = 0.1) -> SurfaceMesh:
    """Open strip surface: the polygon in the xz-plane extruded along y."""
    n = len(points2d)
    a = np.column_stack([points2d[:, 0], np.zeros(n), points2d[:, 1]])
    b = a + np.array([0.0, width, 0.0])
    j = np.arange(n)
    k = (j + 1) % n
    faces = np.concatenate([np.stack([j, k, n + k], 1), np.stack([j, n + k, n + j], 1)])
    return SurfaceMesh(np.concatenate([a, b]), faces)


def by_name(name: str, **kw):
    """Generate a fixture surface by CLI name; returns a SurfaceMesh."""
    if name == "sphere":
        return sphere(kw.get("n_vertices", 1000))
    if name == "sphere-hole":
        return sphere_with_hole(kw.get("n_vertices", 1000), kw.get("drop", 0.02), kw.get("seed", 0))
    if name == "fused-spheres":
        return fused_spheres(kw.get("overlap", 0.2))
    if name == "two-cubes":
        return two_cubes()[0]
    if name == "two-ridges":
        return two_ridges()[0]
    if name == "lobes-2d":
        return ribbon_from_polygon(lobes_2d()[0])
    raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
