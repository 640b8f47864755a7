"""Mesh file I/O.

Surfaces: OBJ (``v``/``f`` records), OFF, PLY (ascii and binary).  Polygons
with more than three vertices are fan-triangulated from their first vertex.
Tet meshes: VTK legacy unstructured grid (cell type 10) and Medit ``.mesh``.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path

import numpy as np

from .mesh import INTERIOR, TWIN_MINUS, TWIN_PLUS, SurfaceMesh, TetMesh

logger = logging.getLogger(__name__)

SURFACE_FORMATS = ("obj", "ply", "off")
TET_FORMATS = ("vtk", "medit")


class MeshFormatError(ValueError):
    """Malformed or unsupported mesh file."""


def _infer(path, fmt, allowed):
    if fmt is None:
        ext = Path(path).suffix.lower().lstrip(".")
        fmt = {"mesh": "medit", "vtk-legacy": "vtk"}.get(ext, ext)
    fmt = {"vtk-legacy": "vtk", "mesh": "medit"}.get(fmt, fmt)
    if fmt not in allowed:
        raise MeshFormatError(f"unsupported format {fmt!r} for {path}")
    return fmt


def _fan(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


# ------------------------------------------------------------------ surfaces


def load_surface(path, fmt: str | None = None) -> SurfaceMesh:
    """Read a triangle surface; quads and n-gons are fan-split."""
    fmt = _infer(path, fmt, SURFACE_FORMATS)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        pos, faces = {"obj": _read_obj, "off": _read_off, "ply": _read_ply}[fmt](path)
    except MeshFormatError:
        raise
    except (ValueError, IndexError, StopIteration, UnicodeDecodeError) as exc:
        raise MeshFormatError(f"cannot parse {path}: {exc}") from exc
    if len(faces) == 0:
        raise MeshFormatError(f"{path}: mesh has no faces")
    mesh = SurfaceMesh(pos, faces)
    logger.info("loaded %s: %s", path, mesh.summary())
    return mesh


def _read_obj(path):
    pos, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                pos.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(pos) + i)
                if len(idx) < 3:
                    raise MeshFormatError(f"{path}: face with < 3 vertices")
                faces.extend(_fan(idx))
    return np.array(pos, float).reshape(-1, 3), np.array(faces, np.int64).reshape(-1, 3)


def _tokens(fh):
    for line in fh:
        line = line.split("#", 1)[0]
        yield from line.split()


def _read_off(path):
    with open(path) as fh:
        tok = _tokens(fh)
        head = next(tok)
        if not head.endswith("OFF"):
            raise MeshFormatError(f"{path}: missing OFF header")
        nv, nf, _ = int(next(tok)), int(next(tok)), int(next(tok))
        pos = np.array([float(next(tok)) for _ in range(3 * nv)]).reshape(-1, 3)
        faces = []
        for _ in range(nf):
            k = int(next(tok))
            idx = [int(next(tok)) for _ in range(k)]
            faces.extend(_fan(idx))
    return pos, np.array(faces, np.int64).reshape(-1, 3)


_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _read_ply(path):
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise MeshFormatError(f"{path}: missing ply magic")
        fmt = None
        elements = []
        while True:
            line = fh.readline()
            if not line:
                raise MeshFormatError(f"{path}: truncated header")
            parts = line.decode("ascii").split()
            if not parts or parts[0] in ("comment", "obj_info"):
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if parts[1] == "list":
                    elements[-1][2].append((parts[4], ("list", parts[2], parts[3])))
                else:
                    elements[-1][2].append((parts[2], parts[1]))
            elif parts[0] == "end_header":
                break
        if fmt == "ascii":
            data = _ply_ascii(fh, elements)
        elif fmt in ("binary_little_endian", "binary_big_endian"):
            data = _ply_binary(fh, elements, "<" if fmt == "binary_little_endian" else ">")
        else:
            raise MeshFormatError(f"{path}: unknown ply format {fmt!r}")
    vert = data.get("vertex")
    if vert is None:
        raise MeshFormatError(f"{path}: no vertex element")
    pos = np.column_stack([vert["x"], vert["y"], vert["z"]]).astype(float)
    faces = []
    face_el = data.get("face", {})
    lists = face_el.get("vertex_indices", face_el.get("vertex_index", []))
    for poly in lists:
        faces.extend(_fan([int(i) for i in poly]))
    return pos, np.array(faces, np.int64).reshape(-1, 3)


def _ply_ascii(fh, elements):
    text = fh.read().decode("ascii").split()
    it = iter(text)
    out = {}
    for name, count, props in elements:
        cols = {p: [] for p, _ in props}
        for _ in range(count):
            for p, t in props:
                if isinstance(t, tuple):
                    k = int(next(it))
                    cols[p].append([float(next(it)) for _ in range(k)])
                else:
                    cols[p].append(float(next(it)))
        out[name] = cols
    return out


def _ply_binary(fh, elements, order):
    out = {}
    for name, count, props in elements:
        if not any(isinstance(t, tuple) for _, t in props):
            dt = np.dtype([(p, order + _PLY_TYPES[t]) for p, t in props])
            arr = np.frombuffer(fh.read(dt.itemsize * count), dtype=dt, count=count)
            out[name] = {p: arr[p] for p, _ in props}
            continue
        cols = {p: [] for p, _ in props}
        for _ in range(count):
            for p, t in props:
                if isinstance(t, tuple):
                    ct = np.dtype(order + _PLY_TYPES[t[1]])
                    it = np.dtype(order + _PLY_TYPES[t[2]])
                    k = int(np.frombuffer(fh.read(ct.itemsize), ct)[0])
                    cols[p].append(np.frombuffer(fh.read(it.itemsize * k), it).tolist())
                else:
                    st = np.dtype(order + _PLY_TYPES[t])
                    cols[p].append(np.frombuffer(fh.read(st.itemsize), st)[0])
        out[name] = cols
    return out


def save_surface(mesh: SurfaceMesh, path, fmt: str | None = None,
                 colors: np.ndarray | None = None, binary: bool = False) -> None:
    fmt = _infer(path, fmt, SURFACE_FORMATS)
    pos, faces = mesh.positions, mesh.faces
    if fmt == "obj":
        with open(path, "w") as fh:
            for p in pos:
                fh.write("v %r %r %r\n" % tuple(float(x) for x in p))
            for f in faces:
                fh.write("f %d %d %d\n" % tuple(f + 1))
    elif fmt == "off":
        with open(path, "w") as fh:
            fh.write(f"OFF\n{len(pos)} {len(faces)} 0\n")
            for p in pos:
                fh.write("%r %r %r\n" % tuple(float(x) for x in p))
            for f in faces:
                fh.write("3 %d %d %d\n" % tuple(f))
    else:
        _write_ply(path, pos, faces, colors, binary)


def _write_ply(path, pos, faces, colors, binary):
    head = ["ply", "format %s 1.0" % ("binary_little_endian" if binary else "ascii"),
            f"element vertex {len(pos)}",
            "property double x", "property double y", "property double z"]
    if colors is not None:
        head += ["property uchar red", "property uchar green", "property uchar blue"]
    head += [f"element face {len(faces)}", "property list uchar int vertex_indices",
             "end_header"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(head) + "\n").encode("ascii"))
        if binary:
            fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
            if colors is not None:
                fields += [("r", "u1"), ("g", "u1"), ("b", "u1")]
            v = np.empty(len(pos), dtype=fields)
            v["x"], v["y"], v["z"] = pos[:, 0], pos[:, 1], pos[:, 2]
            if colors is not None:
                v["r"], v["g"], v["b"] = colors[:, 0], colors[:, 1], colors[:, 2]
            fh.write(v.tobytes())
            f = np.empty(len(faces), dtype=[("n", "u1"), ("i", "<i4", (3,))])
            f["n"] = 3
            f["i"] = faces
            fh.write(f.tobytes())
        else:
            lines = []
            for i, p in enumerate(pos):
                s = "%r %r %r" % tuple(float(x) for x in p)
                if colors is not None:
                    s += " %d %d %d" % tuple(int(c) for c in colors[i])
                lines.append(s)
            lines += ["3 %d %d %d" % tuple(f) for f in faces]
            fh.write(("\n".join(lines) + "\n").encode("ascii"))


GREEN = np.array([0, 255, 0], float)
RED = np.array([255, 0, 0], float)


def scalar_colors(scalars, scale: float) -> np.ndarray:
    """Green-to-red ramp: ``lerp(green, red, clamp(s / scale, 0, 1))``."""
    if scale <= 0:
        raise ValueError("color scale must be positive")
    s = np.asarray(scalars, float)
    f = np.clip(np.nan_to_num(s / scale, nan=1.0, posinf=1.0), 0.0, 1.0)
    return np.rint(GREEN + f[:, None] * (RED - GREEN)).astype(np.uint8)


def save_colored_surface(sm: SurfaceMesh, scalars, path, scale: float = 0.01,
                         binary: bool = False) -> None:
    scalars = np.asarray(scalars, float)
    if len(scalars) != sm.n_vertices:
        raise ValueError("need exactly one scalar per vertex")
    _write_ply(path, sm.positions, sm.faces, scalar_colors(scalars, scale), binary)


# ----------------------------------------------------------------- tet meshes

_KIND_CODE = {INTERIOR: 0, TWIN_PLUS: 1, TWIN_MINUS: 2}


def save_tet_mesh(tm: TetMesh, path, fmt: str | None = None) -> None:
    fmt = _infer(path, fmt, TET_FORMATS)
    if fmt == "vtk":
        _write_vtk(tm, path)
    else:
        _write_medit(tm, path)


def load_tet_mesh(path, fmt: str | None = None) -> TetMesh:
    fmt = _infer(path, fmt, TET_FORMATS)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        return _read_vtk(path) if fmt == "vtk" else _read_medit(path)
    except MeshFormatError:
        raise
    except (ValueError, IndexError, StopIteration) as exc:
        raise MeshFormatError(f"cannot parse {path}: {exc}") from exc


def _write_vtk(tm, path):
    n, m = tm.n_vertices, tm.n_tets
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 4.2\ntwintet tetrahedral mesh\nASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n} double\n")
        for p in tm.positions:
            fh.write("%r %r %r\n" % tuple(float(x) for x in p))
        fh.write(f"CELLS {m} {5 * m}\n")
        for t in tm.tets:
            fh.write("4 %d %d %d %d\n" % tuple(t))
        fh.write(f"CELL_TYPES {m}\n")
        if m:
            fh.write("10\n" * m)
        fh.write(f"POINT_DATA {n}\n")
        fh.write("SCALARS provenance_kind int 1\nLOOKUP_TABLE default\n")
        fh.write("".join(f"{int(k)}\n" for k in tm.kind))
        fh.write("SCALARS provenance_source int 1\nLOOKUP_TABLE default\n")
        fh.write("".join(f"{int(s)}\n" for s in tm.source))


def _read_vtk(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 4 or not lines[0].startswith("# vtk"):
        raise MeshFormatError(f"{path}: not a VTK legacy file")
    if lines[2].strip().upper() != "ASCII":
        raise MeshFormatError(f"{path}: only ASCII VTK is supported")
    tok = " ".join(lines[3:]).split()
    pos = None
    cells = []
    kind = source = None
    types = None
    i = 0
    while i < len(tok):
        key = tok[i].upper()
        if key == "POINTS":
            n = int(tok[i + 1])
            pos = np.array(tok[i + 3:i + 3 + 3 * n], float).reshape(-1, 3)
            i += 3 + 3 * n
        elif key == "CELLS":
            m, size = int(tok[i + 1]), int(tok[i + 2])
            if tok[i + 3].upper() == "OFFSETS":
                raise MeshFormatError(f"{path}: VTK 5.x cell layout not supported")
            raw = np.array(tok[i + 3:i + 3 + size], np.int64)
            cells, j = [], 0
            for _ in range(m):
                k = raw[j]
                cells.append(raw[j + 1:j + 1 + k])
                j += k + 1
            i += 3 + size
        elif key == "CELL_TYPES":
            m = int(tok[i + 1])
            types = np.array(tok[i + 2:i + 2 + m], np.int64)
            i += 2 + m
        elif key == "SCALARS":
            name = tok[i + 1]
            ncomp = 1
            j = i + 3
            if tok[j].upper() != "LOOKUP_TABLE":
                ncomp = int(tok[j])
                j += 1
            j += 2
            vals = np.array(tok[j:j + len(pos) * ncomp], float)
            if name == "provenance_kind":
                kind = vals.astype(np.int8)
            elif name == "provenance_source":
                source = vals.astype(np.int64)
            i = j + len(pos) * ncomp
        else:
            i += 1
    if pos is None:
        raise MeshFormatError(f"{path}: no POINTS section")
    if types is None:
        types = np.zeros(0, np.int64)
    tets = [c for c, t in zip(cells, types) if t == 10]
    dropped = len(types) - len(tets)
    if dropped:
        logger.info("%s: ignored %d non-tetra cells", path, dropped)
    return TetMesh(pos, np.array(tets, np.int64).reshape(-1, 4), kind, source)


def _write_medit(tm, path):
    with open(path, "w") as fh:
        fh.write("MeshVersionFormatted 2\nDimension 3\n")
        fh.write(f"Vertices\n{tm.n_vertices}\n")
        for p, k, s in zip(tm.positions, tm.kind, tm.source):
            ref = 0 if k == INTERIOR else (s + 1 if k == TWIN_PLUS else -(s + 1))
            fh.write("%r %r %r %d\n" % (float(p[0]), float(p[1]), float(p[2]), ref))
        fh.write(f"Tetrahedra\n{tm.n_tets}\n")
        for t in tm.tets:
            fh.write("%d %d %d %d 0\n" % tuple(t + 1))
        fh.write("End\n")


def _read_medit(path):
    with open(path) as fh:
        tok = _tokens(fh)
        pos = np.zeros((0, 3))
        refs = np.zeros(0, np.int64)
        tets = np.zeros((0, 4), np.int64)
        for word in tok:
            w = word.lower()
            if w == "vertices":
                n = int(next(tok))
                vals = np.array([next(tok) for _ in range(4 * n)], float).reshape(-1, 4)
                pos, refs = vals[:, :3], vals[:, 3].astype(np.int64)
            elif w == "tetrahedra":
                m = int(next(tok))
                vals = np.array([next(tok) for _ in range(5 * m)], np.int64).reshape(-1, 5)
                tets = vals[:, :4] - 1
            elif w == "end":
                break
            elif w in ("meshversionformatted", "dimension"):
                next(tok)
            elif w in ("triangles", "edges", "corners", "ridges", "requiredvertices"):
                k = {"triangles": 4, "edges": 3}.get(w, 1)
                cnt = int(next(tok))
                for _ in range(cnt * k):
                    next(tok)
    kind = np.where(refs > 0, TWIN_PLUS, np.where(refs < 0, TWIN_MINUS, INTERIOR))
    source = np.where(refs == 0, -1, np.abs(refs) - 1)
    return TetMesh(pos, tets, kind.astype(np.int8), source)


def read_points(path) -> np.ndarray:
    """Whitespace-separated ``x y z`` rows (the ``.xyz`` convention)."""
    pts = np.loadtxt(path, dtype=float, ndmin=2, comments="#")
    if pts.shape[1] < 3:
        raise MeshFormatError(f"{path}: expected 3 columns")
    return pts[:, :3]
