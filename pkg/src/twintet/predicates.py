"""Geometric predicates.

Orientation and in-sphere tests are evaluated in floating point behind a
forward error bound (Shewchuk's stage-A bounds); anything inside the
uncertainty band is re-evaluated exactly with Python integers obtained by
scaling every coordinate to a common power-of-two denominator.

Sign conventions
----------------
``orient3d(a, b, c, d) > 0`` when ``det[b-a, c-a, d-a] > 0``, i.e. the unit
tetrahedron ``(0, e1, e2, e3)`` is positive.  ``insphere(a, b, c, d, e) > 0``
when ``e`` lies strictly inside the circumsphere of a positively oriented
``(a, b, c, d)``.  The 2D versions follow the same pattern with
counter-clockwise triangles positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

_EPS = np.finfo(float).eps / 2.0  # 2**-53, Shewchuk's epsilon
_O3D_BOUND = (7.0 + 56.0 * _EPS) * _EPS
_ISP_BOUND = (16.0 + 224.0 * _EPS) * _EPS
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS

RAY_T_MIN = 1e-12


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _to_ints(*vals):
    ratios = [float(v).as_integer_ratio() for v in vals]
    den = max(d for _, d in ratios)
    return [n * (den // d) for n, d in ratios]


# ---------------------------------------------------------------- exact paths


def orient3d_exact(a, b, c, d) -> int:
    (ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz) = _to_ints(*a, *b, *c, *d)
    bax, bay, baz = bx - ax, by - ay, bz - az
    cax, cay, caz = cx - ax, cy - ay, cz - az
    dax, day, daz = dx - ax, dy - ay, dz - az
    det = (bax * (cay * daz - caz * day)
           - bay * (cax * daz - caz * dax)
           + baz * (cax * day - cay * dax))
    return _sign(det)


def insphere_exact(a, b, c, d, e) -> int:
    (ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz,
     ex, ey, ez) = _to_ints(*a, *b, *c, *d, *e)
    return -_sign(_insphere_det(ax - ex, ay - ey, az - ez,
                                bx - ex, by - ey, bz - ez,
                                cx - ex, cy - ey, cz - ez,
                                dx - ex, dy - ey, dz - ez))


def orient2d_exact(a, b, c) -> int:
    ax, ay, bx, by, cx, cy = _to_ints(*a[:2], *b[:2], *c[:2])
    return _sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def incircle_exact(a, b, c, d) -> int:
    ax, ay, bx, by, cx, cy, dx, dy = _to_ints(*a[:2], *b[:2], *c[:2], *d[:2])
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
           + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
           + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return _sign(det)


def _insphere_det(aex, aey, aez, bex, bey, bez, cex, cey, cez, dex, dey, dez):
    # Shewchuk's insphere expansion; positive for e inside when (a,b,c,d)
    # has negative orientation under our convention.
    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey
    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da
    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez
    return (dlift * abc - clift * dab) + (blift * cda - alift * bcd)


# ------------------------------------------------------------- filtered paths


def orient3d(a, b, c, d) -> int:
    """Sign of ``det[b - a, c - a, d - a]``."""
    ax, ay, az = a[0], a[1], a[2]
    bax, bay, baz = b[0] - ax, b[1] - ay, b[2] - az
    cax, cay, caz = c[0] - ax, c[1] - ay, c[2] - az
    dax, day, daz = d[0] - ax, d[1] - ay, d[2] - az
    t1 = cay * daz
    t2 = caz * day
    t3 = cax * daz
    t4 = caz * dax
    t5 = cax * day
    t6 = cay * dax
    det = bax * (t1 - t2) - bay * (t3 - t4) + baz * (t5 - t6)
    perm = (abs(bax) * (abs(t1) + abs(t2)) + abs(bay) * (abs(t3) + abs(t4))
            + abs(baz) * (abs(t5) + abs(t6)))
    bound = _O3D_BOUND * perm
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return orient3d_exact(a, b, c, d)


def insphere(a, b, c, d, e) -> int:
    """Positive iff ``e`` is strictly inside the sphere of positive (a,b,c,d)."""
    ex, ey, ez = e[0], e[1], e[2]
    aex, aey, aez = a[0] - ex, a[1] - ey, a[2] - ez
    bex, bey, bez = b[0] - ex, b[1] - ey, b[2] - ez
    cex, cey, cez = c[0] - ex, c[1] - ey, c[2] - ez
    dex, dey, dez = d[0] - ex, d[1] - ey, d[2] - ez
    aexbey = aex * bey
    bexaey = bex * aey
    bexcey = bex * cey
    cexbey = cex * bey
    cexdey = cex * dey
    dexcey = dex * cey
    dexaey = dex * aey
    aexdey = aex * dey
    aexcey = aex * cey
    cexaey = cex * aey
    bexdey = bex * dey
    dexbey = dex * bey
    ab = aexbey - bexaey
    bc = bexcey - cexbey
    cd = cexdey - dexcey
    da = dexaey - aexdey
    ac = aexcey - cexaey
    bd = bexdey - dexbey
    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da
    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez
    det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)

    aezp, bezp, cezp, dezp = abs(aez), abs(bez), abs(cez), abs(dez)
    aexbeyp, bexaeyp = abs(aexbey), abs(bexaey)
    bexceyp, cexbeyp = abs(bexcey), abs(cexbey)
    cexdeyp, dexceyp = abs(cexdey), abs(dexcey)
    dexaeyp, aexdeyp = abs(dexaey), abs(aexdey)
    aexceyp, cexaeyp = abs(aexcey), abs(cexaey)
    bexdeyp, dexbeyp = abs(bexdey), abs(dexbey)
    perm = (((cexdeyp + dexceyp) * bezp + (dexbeyp + bexdeyp) * cezp
             + (bexceyp + cexbeyp) * dezp) * alift
            + ((dexaeyp + aexdeyp) * cezp + (aexceyp + cexaeyp) * dezp
               + (cexdeyp + dexceyp) * aezp) * blift
            + ((aexbeyp + bexaeyp) * dezp + (bexdeyp + dexbeyp) * aezp
               + (dexaeyp + aexdeyp) * bezp) * clift
            + ((bexceyp + cexbeyp) * aezp + (cexaeyp + aexceyp) * bezp
               + (aexbeyp + bexaeyp) * cezp) * dlift)
    bound = _ISP_BOUND * perm
    if det > bound:
        return -1
    if -det > bound:
        return 1
    return insphere_exact(a, b, c, d, e)


def orient2d(a, b, c) -> int:
    """Positive iff ``a, b, c`` turn counter-clockwise."""
    detl = (b[0] - a[0]) * (c[1] - a[1])
    detr = (b[1] - a[1]) * (c[0] - a[0])
    det = detl - detr
    bound = _CCW_BOUND * (abs(detl) + abs(detr))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return orient2d_exact(a, b, c)


def incircle(a, b, c, d) -> int:
    """Positive iff ``d`` is strictly inside the circle of ccw ``(a, b, c)``."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    perm = ((abs(bdxcdy) + abs(cdxbdy)) * alift
            + (abs(cdxady) + abs(adxcdy)) * blift
            + (abs(adxbdy) + abs(bdxady)) * clift)
    bound = _ICC_BOUND * perm
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return incircle_exact(a, b, c, d)


def orient3d_many(a, b, c, d) -> np.ndarray:
    """Vectorised :func:`orient3d` over ``(n, 3)`` arrays; returns int8 signs."""
    a = np.asarray(a, dtype=float)
    ba = np.asarray(b, dtype=float) - a
    ca = np.asarray(c, dtype=float) - a
    da = np.asarray(d, dtype=float) - a
    t1 = ca[:, 1] * da[:, 2]
    t2 = ca[:, 2] * da[:, 1]
    t3 = ca[:, 0] * da[:, 2]
    t4 = ca[:, 2] * da[:, 0]
    t5 = ca[:, 0] * da[:, 1]
    t6 = ca[:, 1] * da[:, 0]
    det = ba[:, 0] * (t1 - t2) - ba[:, 1] * (t3 - t4) + ba[:, 2] * (t5 - t6)
    perm = (np.abs(ba[:, 0]) * (np.abs(t1) + np.abs(t2))
            + np.abs(ba[:, 1]) * (np.abs(t3) + np.abs(t4))
            + np.abs(ba[:, 2]) * (np.abs(t5) + np.abs(t6)))
    bound = _O3D_BOUND * perm
    out = np.zeros(len(det), dtype=np.int8)
    out[det > bound] = 1
    out[-det > bound] = -1
    unsure = np.flatnonzero(np.abs(det) <= bound)
    if len(unsure):
        rows = np.concatenate([a[unsure], np.asarray(b, dtype=float)[unsure],
                               np.asarray(c, dtype=float)[unsure],
                               np.asarray(d, dtype=float)[unsure]], axis=1)
        out[unsure] = _orient3d_exact_rows(rows)
    return out


def _exact_int_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row of floats to Python integers over a common power of two."""
    m, e = np.frexp(x)
    mant = (m * 2.0 ** 53).astype(np.int64)
    e = e.astype(np.int64) - 53
    e[mant == 0] = np.iinfo(np.int64).max
    emin = e.min(axis=1, keepdims=True)
    emin[emin == np.iinfo(np.int64).max] = 0
    shift = np.where(mant == 0, 0, e - emin)
    return mant.astype(object) << shift.astype(object)


def _orient3d_exact_rows(rows: np.ndarray) -> np.ndarray:
    """Exact orient3d signs for rows ``[a, b, c, d]`` of 12 coordinates."""
    X = _exact_int_rows(rows)
    ax, ay, az = X[:, 0], X[:, 1], X[:, 2]
    bax, bay, baz = X[:, 3] - ax, X[:, 4] - ay, X[:, 5] - az
    cax, cay, caz = X[:, 6] - ax, X[:, 7] - ay, X[:, 8] - az
    dax, day, daz = X[:, 9] - ax, X[:, 10] - ay, X[:, 11] - az
    det = (bax * (cay * daz - caz * day) - bay * (cax * daz - caz * dax)
           + baz * (cax * day - cay * dax))
    return (det > 0).astype(np.int8) - (det < 0).astype(np.int8)


def signed_volumes(tets_xyz: np.ndarray) -> np.ndarray:
    """Signed volume of each ``(4, 3)`` tetrahedron (plain floating point)."""
    t = np.asarray(tets_xyz, dtype=float)
    e = t[:, 1:] - t[:, :1]
    return np.einsum("ij,ij->i", e[:, 0], np.cross(e[:, 1], e[:, 2])) / 6.0


# ------------------------------------------------------------- ray / triangle


@dataclass(frozen=True)
class RayHit:
    t: float
    face: int
    aligned: bool


def ray_triangle(origin, direction, triangle, face: int = -1,
                 t_min: float = RAY_T_MIN) -> RayHit | None:
    """Intersect a ray with a closed triangle (Moller-Trumbore).

    Returns ``None`` when the ray misses, is parallel to the triangle plane,
    or meets it closer than ``t_min``.
    """
    o = np.asarray(origin, dtype=float)
    dvec = np.asarray(direction, dtype=float)
    a, b, c = (np.asarray(p, dtype=float) for p in triangle)
    e1 = b - a
    e2 = c - a
    pvec = np.cross(dvec, e2)
    det = float(e1 @ pvec)
    if det == 0.0:
        return None
    inv = 1.0 / det
    s = o - a
    u = float(s @ pvec) * inv
    if u < 0.0 or u > 1.0:
        return None
    q = np.cross(s, e1)
    v = float(dvec @ q) * inv
    if v < 0.0 or u + v > 1.0:
        return None
    t = float(e2 @ q) * inv
    if t < t_min:
        return None
    normal = np.cross(e1, e2)
    return RayHit(t=t, face=face, aligned=bool(dvec @ normal > 0.0))


def axis_ray_hits(point, axis: int, tris: np.ndarray):
    """Hit parameters of the line ``point + t * e_axis`` with many triangles.

    ``tris`` has shape ``(m, 3, 3)`` and ``point`` either ``(3,)`` or one
    point per triangle ``(m, 3)``.  Returns ``(hit, t, normal_component)``
    where ``hit`` flags closed-triangle crossings of the full line, ``t`` the
    signed parameter and ``normal_component`` the axis component of the
    (unnormalised, right-handed) face normal.  Used to vote along +axis and
    -axis from one gather.
    """
    point = np.asarray(point, dtype=float)
    u, v = (axis + 1) % 3, (axis + 2) % 3
    pu, pv = point[..., u], point[..., v]
    au, av = tris[:, 0, u] - pu, tris[:, 0, v] - pv
    bu, bv = tris[:, 1, u] - pu, tris[:, 1, v] - pv
    cu, cv = tris[:, 2, u] - pu, tris[:, 2, v] - pv
    w0 = bu * cv - bv * cu
    w1 = cu * av - cv * au
    w2 = au * bv - av * bu
    n_axis = w0 + w1 + w2  # twice the projected signed area
    inside = (((w0 >= 0) & (w1 >= 0) & (w2 >= 0))
              | ((w0 <= 0) & (w1 <= 0) & (w2 <= 0))) & (n_axis != 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        hit_axis = (w0 * tris[:, 0, axis] + w1 * tris[:, 1, axis]
                    + w2 * tris[:, 2, axis]) / n_axis
    t = hit_axis - point[..., axis]
    return inside, t, n_axis


# ------------------------------------------------------- triangle / triangle


def _segment_crosses_triangle(p, q, a, b, c) -> bool:
    s1 = orient3d(a, b, c, p)
    s2 = orient3d(a, b, c, q)
    if s1 * s2 >= 0:
        return False
    o1 = orient3d(p, q, a, b)
    o2 = orient3d(p, q, b, c)
    o3 = orient3d(p, q, c, a)
    if (o1 >= 0 and o2 >= 0 and o3 >= 0) or (o1 <= 0 and o2 <= 0 and o3 <= 0):
        return not (o1 == 0 and o2 == 0 and o3 == 0)
    return False


def _collinear3d(a, b, c) -> bool:
    return all(orient2d((a[i], a[j]), (b[i], b[j]), (c[i], c[j])) == 0
               for i, j in ((0, 1), (1, 2), (0, 2)))


def _coplanar_overlap(t1, t2) -> bool:
    n = np.cross(np.subtract(t1[1], t1[0]), np.subtract(t1[2], t1[0]))
    drop = int(np.argmax(np.abs(n)))
    keep = [i for i in range(3) if i != drop]
    p = [tuple(float(x[k]) for k in keep) for x in t1]
    q = [tuple(float(x[k]) for k in keep) for x in t2]
    if orient2d(*p) < 0:
        p = [p[0], p[2], p[1]]
    if orient2d(*q) < 0:
        q = [q[0], q[2], q[1]]
    # proper edge crossings
    for i in range(3):
        a, b = p[i], p[(i + 1) % 3]
        for j in range(3):
            c, d = q[j], q[(j + 1) % 3]
            if (orient2d(a, b, c) * orient2d(a, b, d) < 0
                    and orient2d(c, d, a) * orient2d(c, d, b) < 0):
                return True

    def strictly_in(x, tri):
        return all(orient2d(tri[i], tri[(i + 1) % 3], x) > 0 for i in range(3))

    if any(strictly_in(x, q) for x in p) or any(strictly_in(x, p) for x in q):
        return True
    # identical triangles
    return sorted(p) == sorted(q)


def tri_tri_intersect(t1, t2) -> bool:
    """Proper intersection of two triangles given as ``3 x 3`` coordinates.

    True when an edge of one triangle crosses the other transversally
    through its closed area, or when coplanar triangles overlap in area.
    Touching contacts and degenerate triangles give False.
    """
    t1 = [tuple(map(float, p)) for p in t1]
    t2 = [tuple(map(float, p)) for p in t2]
    if _collinear3d(*t1) or _collinear3d(*t2):
        return False
    s2 = [orient3d(*t1, p) for p in t2]
    if all(s > 0 for s in s2) or all(s < 0 for s in s2):
        return False
    s1 = [orient3d(*t2, p) for p in t1]
    if all(s > 0 for s in s1) or all(s < 0 for s in s1):
        return False
    if all(s == 0 for s in s2):
        return _coplanar_overlap(t1, t2)
    for i in range(3):
        if _segment_crosses_triangle(t1[i], t1[(i + 1) % 3], *t2):
            return True
        if _segment_crosses_triangle(t2[i], t2[(i + 1) % 3], *t1):
            return True
    return False


# ---------------------------------------------------------- tet / triangle

_TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_EDGE_ID = {e: k for k, e in enumerate(_TET_EDGES)}
# face opposite vertex i as a cycle of tet edges (edge id, direction)
_FACE_CYCLES = []
for _i in range(4):
    _a, _b, _c = [k for k in range(4) if k != _i]
    _FACE_CYCLES.append(((_EDGE_ID[(_a, _b)], 1), (_EDGE_ID[(_b, _c)], 1),
                         (_EDGE_ID[(_a, _c)], -1)))
_TRI_EDGES = ((0, 1), (1, 2), (2, 0))


def _same_strict(s1, s2, s3):
    return ((s1 > 0) & (s2 > 0) & (s3 > 0)) | ((s1 < 0) & (s2 < 0) & (s3 < 0))


def tet_triangle_intersect_many(tets: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Does each closed triangle meet the open interior of its tetrahedron?

    ``tets`` is ``(m, 4, 3)`` and ``tris`` ``(m, 3, 3)``; pairs are tested
    row by row.  A pair intersects when a triangle vertex is strictly inside
    the tetrahedron, a triangle edge crosses a tetrahedron face through its
    relative interior, or a tetrahedron edge crosses the triangle interior.
    Zero-volume tetrahedra count as intersecting.
    """
    tets = np.asarray(tets, dtype=float)
    tris = np.asarray(tris, dtype=float)
    m = len(tets)
    if m == 0:
        return np.zeros(0, dtype=bool)
    orient = orient3d_many(tets[:, 0], tets[:, 1], tets[:, 2], tets[:, 3])
    degenerate = orient == 0
    neg = orient < 0
    if neg.any():
        tets = tets.copy()
        tets[neg, 0], tets[neg, 1] = tets[neg, 1].copy(), tets[neg, 0].copy()

    # side[v][i] > 0: triangle vertex v is on the inner side of face i
    side = np.empty((3, 4, m), dtype=np.int8)
    for v in range(3):
        x = tris[:, v]
        side[v, 0] = orient3d_many(x, tets[:, 1], tets[:, 2], tets[:, 3])
        side[v, 1] = orient3d_many(tets[:, 0], x, tets[:, 2], tets[:, 3])
        side[v, 2] = orient3d_many(tets[:, 0], tets[:, 1], x, tets[:, 3])
        side[v, 3] = orient3d_many(tets[:, 0], tets[:, 1], tets[:, 2], x)
    hit = np.zeros(m, dtype=bool)
    for v in range(3):
        hit |= np.all(side[v] > 0, axis=0)

    # edge_edge[j, k] = orient3d(tri edge j, tet edge k)
    edge_edge = np.empty((3, 6, m), dtype=np.int8)
    for j, (p, q) in enumerate(_TRI_EDGES):
        for k, (x, y) in enumerate(_TET_EDGES):
            edge_edge[j, k] = orient3d_many(tris[:, p], tris[:, q],
                                            tets[:, x], tets[:, y])

    # triangle edge through a tetrahedron face interior
    for j, (p, q) in enumerate(_TRI_EDGES):
        for i in range(4):
            straddle = side[p, i].astype(np.int16) * side[q, i] < 0
            if not straddle.any():
                continue
            (k1, d1), (k2, d2), (k3, d3) = _FACE_CYCLES[i]
            hit |= straddle & _same_strict(d1 * edge_edge[j, k1],
                                           d2 * edge_edge[j, k2],
                                           d3 * edge_edge[j, k3])

    # tetrahedron edge through the triangle interior
    plane = np.empty((4, m), dtype=np.int8)
    for v in range(4):
        plane[v] = orient3d_many(tris[:, 0], tris[:, 1], tris[:, 2], tets[:, v])
    for k, (x, y) in enumerate(_TET_EDGES):
        straddle = plane[x].astype(np.int16) * plane[y] < 0
        if not straddle.any():
            continue
        hit |= straddle & _same_strict(edge_edge[0, k], edge_edge[1, k],
                                       edge_edge[2, k])
    # the generic events above miss contacts that start on a tet edge or
    # face and then enter the interior; any zero sign marks such a row
    tied = ((side == 0).any(axis=(0, 1)) | (edge_edge == 0).any(axis=(0, 1))
            | (plane == 0).any(axis=0))
    # rows already separated by a tet face plane or the triangle plane
    separated = (side <= 0).all(axis=0).any(axis=0)
    separated |= (plane >= 0).all(axis=0) | (plane <= 0).all(axis=0)
    redo = np.flatnonzero(tied & ~hit & ~degenerate & ~separated)
    if len(redo):
        hit[redo] = _tet_triangle_exact_rows(tets[redo], tris[redo])
    return hit | degenerate


def _tet_triangle_exact_rows(tets: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Exact open-tet / closed-triangle test by separating directions.

    The two sets miss each other iff some facet normal of ``tet - tri``
    weakly separates them.  Candidates: tet face normals, the triangle
    normal and every tet edge x triangle edge cross product.
    """
    m = len(tets)
    X = _exact_int_rows(np.concatenate([tets.reshape(m, 12), tris.reshape(m, 9)], axis=1))
    P = X.reshape(m, 7, 3)
    T, R = P[:, :4], P[:, 4:]

    def cross(u, v):
        return np.stack([u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1],
                         u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2],
                         u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]], axis=1)

    tet_e = [T[:, j] - T[:, i] for i, j in _TET_EDGES]
    tri_e = [R[:, j] - R[:, i] for i, j in _TRI_EDGES]
    normals = [cross(tet_e[a], tet_e[b]) for a, b in ((0, 1), (0, 2), (1, 2), (3, 4))]
    normals.append(cross(tri_e[0], tri_e[1]))
    normals += [cross(u, v) for u in tet_e for v in tri_e]
    separated = np.zeros(m, dtype=bool)
    for n in normals:
        nz = (n != 0).any(axis=1)
        pt = np.einsum("mkj,mj->mk", T, n)
        pr = np.einsum("mkj,mj->mk", R, n)
        sep = (pt.max(axis=1) <= pr.min(axis=1)) | (pt.min(axis=1) >= pr.max(axis=1))
        separated |= nz & sep
    return ~separated


def tet_triangle_intersect(tet, tri) -> bool:
    """Scalar form of :func:`tet_triangle_intersect_many`."""
    tet = np.asarray(tet, dtype=float)[None]
    tri = np.asarray(tri, dtype=float)[None]
    return bool(tet_triangle_intersect_many(tet, tri)[0])


class Location(Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def point_in_tet(p, tet) -> Location:
    a, b, c, d = (tuple(map(float, x)) for x in tet)
    p = tuple(map(float, p))
    o = orient3d(a, b, c, d)
    if o == 0:
        raise ValueError("degenerate tetrahedron")
    s = [orient3d(p, b, c, d), orient3d(a, p, c, d),
         orient3d(a, b, p, d), orient3d(a, b, c, p)]
    s = [x * o for x in s]
    if any(x < 0 for x in s):
        return Location.OUTSIDE
    if all(x > 0 for x in s):
        return Location.INSIDE
    return Location.BOUNDARY


def segment_crosses_segment_2d(a, b, c, d) -> bool:
    """Proper (interior) crossing of segments ab and cd."""
    return (orient2d(a, b, c) * orient2d(a, b, d) < 0
            and orient2d(c, d, a) * orient2d(c, d, b) < 0)


def triangle_segment_intersect_2d(tri, seg) -> bool:
    """Closed segment against the open interior of a 2D triangle."""
    a, b, c = (tuple(map(float, p[:2])) for p in tri)
    o = orient2d(a, b, c)
    if o == 0:
        return True
    if o < 0:
        b, c = c, b
    p, q = (tuple(map(float, x[:2])) for x in seg)
    edges = ((a, b), (b, c), (c, a))
    for x in (p, q):
        if all(orient2d(e0, e1, x) > 0 for e0, e1 in edges):
            return True
    for e0, e1 in edges:
        if segment_crosses_segment_2d(p, q, e0, e1):
            return True
    # segment passing exactly through a vertex into the interior
    for v in (a, b, c):
        if orient2d(p, q, v) == 0 and _strictly_between(p, q, v):
            others = [w for w in (a, b, c) if w is not v]
            s = [orient2d(p, q, w) for w in others]
            if s[0] * s[1] < 0:
                return True
    return False


def _strictly_between(p, q, v) -> bool:
    from fractions import Fraction

    dp = [Fraction(v[i]) - Fraction(p[i]) for i in range(2)]
    dq = [Fraction(v[i]) - Fraction(q[i]) for i in range(2)]
    return dp[0] * dq[0] + dp[1] * dq[1] < 0
