"""Independent reference implementations used only by the tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def _F(p):
    return [Fraction(float(x)) for x in p]


def _det3(m):
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def sign(x) -> int:
    return (x > 0) - (x < 0)


def orient3d_exact(a, b, c, d) -> int:
    """Sign of det[b-a, c-a, d-a] in rational arithmetic."""
    a, b, c, d = (_F(p) for p in (a, b, c, d))
    return sign(_det3([[b[k] - a[k] for k in range(3)], [c[k] - a[k] for k in range(3)],
                       [d[k] - a[k] for k in range(3)]]))


def orient2d_exact(a, b, c) -> int:
    """Positive for a counter-clockwise turn."""
    a, b, c = (_F(p) for p in (a, b, c))
    return sign((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]))


def _lifted4(a, b, c, d, e):
    """Sign of the 4x4 lifted determinant (rows p - e, |p - e|^2)."""
    rows = []
    E = _F(e)
    for p in (a, b, c, d):
        P = _F(p)
        v = [P[k] - E[k] for k in range(3)]
        rows.append(v + [v[0] * v[0] + v[1] * v[1] + v[2] * v[2]])
    # 4x4 determinant by cofactor expansion along the last column
    det = Fraction(0)
    for r in range(4):
        minor = [row[:3] for i, row in enumerate(rows) if i != r]
        det += (-1) ** (r + 3) * rows[r][3] * _det3(minor)
    return sign(det)


# orient the raw determinant so that "inside a positively oriented tet" is +1
_INSPHERE_SIGN = _lifted4((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0.25, 0.25, 0.25))


def insphere_exact(a, b, c, d, e) -> int:
    """Raw lifted-determinant sign; +1 means inside when orient3d(a, b, c, d) > 0."""
    return _INSPHERE_SIGN * _lifted4(a, b, c, d, e)


def incircle_exact(a, b, c, d) -> int:
    D = _F(d)
    rows = []
    for p in (a, b, c):
        P = _F(p)
        v = [P[0] - D[0], P[1] - D[1]]
        rows.append(v + [v[0] * v[0] + v[1] * v[1]])
    return sign(_det3(rows))


def tet_triangle_exact(tet, tri) -> bool:
    """Does the closed triangle meet the open interior of the tetrahedron?

    Clips the triangle by the four closed face half-spaces in rational
    arithmetic.  The clipped convex polygon meets the open tet exactly when
    its vertex average lies strictly inside.  Zero-volume tets count as
    intersecting.
    """
    T = [_F(p) for p in tet]
    poly = [_F(p) for p in tri]

    def orient(a, b, c, d):
        return _det3([[a[k] - d[k] for k in range(3)], [b[k] - d[k] for k in range(3)],
                      [c[k] - d[k] for k in range(3)]])

    vol = orient(*T)
    if vol == 0:
        return True
    if vol < 0:
        T[0], T[1] = T[1], T[0]
    faces = [(1, 2, 3, 0), (0, 3, 2, 1), (0, 1, 3, 2), (0, 2, 1, 3)]

    def g(f, x):
        # positive on the side of the opposite vertex
        i, j, k, _ = faces[f]
        return orient(T[i], T[j], T[k], x)

    sgn = [sign(g(f, T[faces[f][3]])) for f in range(4)]
    for f in range(4):
        out = []
        n = len(poly)
        for idx in range(n):
            p, q = poly[idx], poly[(idx + 1) % n]
            gp, gq = sgn[f] * g(f, p), sgn[f] * g(f, q)
            if gp >= 0:
                out.append(p)
            if (gp > 0 and gq < 0) or (gp < 0 and gq > 0):
                t = gp / (gp - gq)
                out.append([p[k] + t * (q[k] - p[k]) for k in range(3)])
        poly = out
        if not poly:
            return False
    c = [sum(p[k] for p in poly) / len(poly) for k in range(3)]
    return all(sgn[f] * g(f, c) > 0 for f in range(4))


def bellman_ford(n, edges, weights, source):
    d = [float("inf")] * n
    d[source] = 0.0
    for _ in range(n - 1):
        changed = False
        for (u, v), w in zip(edges, weights):
            if d[u] + w < d[v]:
                d[v] = d[u] + w
                changed = True
            if d[v] + w < d[u]:
                d[u] = d[v] + w
                changed = True
        if not changed:
            break
    return np.array(d)


def winding_numbers(points, positions, faces, chunk=200):
    """Generalised winding number of each point w.r.t. a triangle soup."""
    points = np.asarray(points, float)
    tri = positions[faces]
    out = np.zeros(len(points))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        a = tri[None, :, 0] - p[:, None]
        b = tri[None, :, 1] - p[:, None]
        c = tri[None, :, 2] - p[:, None]
        la, lb, lc = (np.linalg.norm(x, axis=2) for x in (a, b, c))
        det = np.einsum("pfi,pfi->pf", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("pfi,pfi->pf", a, b) * lc
               + np.einsum("pfi,pfi->pf", b, c) * la + np.einsum("pfi,pfi->pf", c, a) * lb)
        out[s:s + chunk] = np.arctan2(det, den).sum(axis=1) / (2 * np.pi)
    return out


def winding_2d(points, seg_xy):
    """Winding number of each 2D point w.r.t. closed oriented segments."""
    points = np.asarray(points, float).reshape(-1, 2)
    out = np.zeros(len(points))
    for i, q in enumerate(points):
        s = seg_xy - q
        a = np.arctan2(s[:, 0, 1], s[:, 0, 0])
        b = np.arctan2(s[:, 1, 1], s[:, 1, 0])
        out[i] = (((b - a + np.pi) % (2 * np.pi)) - np.pi).sum() / (2 * np.pi)
    return out


def brute_nearest(queries, targets):
    d = np.linalg.norm(np.asarray(queries)[:, None] - np.asarray(targets)[None], axis=2)
    return np.argmin(d, axis=1)  # first minimum = lowest index on ties


def convex_hull_volume(points) -> float:
    from scipy.spatial import ConvexHull

    return float(ConvexHull(points).volume)
