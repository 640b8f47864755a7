"""Command-line interface: ``twintet <subcommand> ...``.

Exit codes: 0 success, 1 computation error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .delaunay import DelaunayError, delaunay3d, empty_sphere_violations
from .io import (MeshFormatError, load_surface, load_tet_mesh, read_points, save_colored_surface,
                 save_surface, save_tet_mesh)
from .mesh import MeshError, SurfaceMesh, TetMesh, extract_boundary_surface
from .pipeline import THREADS_ENV, PipelineError, PipelineParams, default_threads, run_pipeline

logger = logging.getLogger("twintet")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or unusable paths; maps to exit code 2."""


# ------------------------------------------------------------------ helpers


def _positive(kind=float):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v

    return parse


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _flood_seed(text):
    if text == "auto":
        return "auto"
    parts = text.split(",")
    try:
        xyz = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("flood seed must be 'auto' or x,y,z")
    if len(xyz) != 3:
        raise argparse.ArgumentTypeError("flood seed must have three coordinates")
    return xyz


def _need_file(path):
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")


def _writable(path):
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise UsageError(f"cannot write to {parent}")


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_any_mesh(path):
    """Tet mesh for .vtk/.mesh, surface mesh otherwise."""
    ext = Path(path).suffix.lower()
    if ext in (".vtk", ".mesh"):
        return load_tet_mesh(path)
    return load_surface(path)


def _boundary(mesh):
    """(surface, vertex ids in the originating mesh) for a tet or surface mesh."""
    if isinstance(mesh, TetMesh):
        surface, _, vmap = extract_boundary_surface(mesh)
        return surface, vmap
    return mesh, np.arange(mesh.n_vertices)


# -------------------------------------------------------------- subcommands


def cmd_tet(args) -> int:
    _need_file(args.input)
    _writable(args.out)
    _writable(args.stats)
    params = PipelineParams(epsilon=args.epsilon, radius=args.radius,
                            max_consecutive_failures=args.max_fail,
                            voxel_size=args.voxel_size, rng_seed=args.seed,
                            flood_seed=args.flood_seed, seed_mode=args.seed_mode,
                            threads=args.threads)
    surface = load_surface(args.input)
    try:
        params.resolve(surface)
    except (ValueError, MeshError) as exc:
        raise UsageError(str(exc))
    run = run_pipeline(surface, params)
    if args.out:
        save_tet_mesh(run.mesh, args.out, args.format)
        logger.info("wrote %s", args.out)
    if args.stats:
        _write_json(args.stats, run.stats)
    out = run.stats["output"]
    print(f"{out['tets']} tets, {out['vertices']} vertices, "
          f"{run.stats['components']['count']} components after cut, "
          f"{out['inverted_tets']} inverted")
    return EXIT_OK


def cmd_metric(args) -> int:
    from .metric import connectivity_scores, select_landmarks, surface_scores

    _need_file(args.ref)
    _need_file(args.mesh)
    for p in (args.csv, args.colored, args.summary):
        _writable(p)
    ref = load_surface(args.ref)
    if args.landmarks > ref.n_vertices:
        raise UsageError(f"--landmarks {args.landmarks} exceeds {ref.n_vertices} reference vertices")
    mesh = _load_any_mesh(args.mesh)
    lm = select_landmarks(ref, args.landmarks, args.landmark_mode)
    if isinstance(mesh, TetMesh):
        rep = connectivity_scores(mesh, ref, lm, threads=args.threads)
    else:
        rep = surface_scores(mesh, ref, lm)
    if args.csv:
        rep.write_csv(args.csv)
    if args.colored:
        save_colored_surface(rep.surface, rep.scores, args.colored, args.color_scale)
    summary = rep.summary()
    if args.summary:
        _write_json(args.summary, summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_smooth(args) -> int:
    from .sim import SmoothParams, smooth, smooth_tet_mesh

    _need_file(args.mesh)
    _writable(args.out)
    try:
        params = SmoothParams(args.iters, args.lam, args.snapshot_every)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.snapshot_every and not args.out_dir:
        raise UsageError("--snapshot-every needs --out-dir")
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    mesh = _load_any_mesh(args.mesh)
    if isinstance(mesh, TetMesh):
        surface, vmap = _boundary(mesh)
        res = smooth_tet_mesh(mesh, params, move_all=args.move_all)
        final = res.positions[vmap]
        snaps = [(it, p[vmap]) for it, p in res.snapshots]
    else:
        surface = mesh
        res = smooth(mesh.graph(), mesh.positions, params)
        final, snaps = res.positions, res.snapshots
    for it, pos in snaps:
        path = Path(args.out_dir) / f"smooth_{it:05d}.ply"
        save_surface(SurfaceMesh(pos, surface.faces), path)
    out = args.out or (str(Path(args.out_dir) / "smooth_final.ply") if args.out_dir else None)
    if out:
        save_surface(SurfaceMesh(final, surface.faces), out)
        logger.info("wrote %s", out)
    moved = float(np.linalg.norm(final - surface.positions, axis=1).max()) if len(final) else 0.0
    print(f"{params.iterations} iterations, {len(snaps)} snapshots, max displacement {moved:.6g}")
    return EXIT_OK


def cmd_delaunay(args) -> int:
    _need_file(args.input)
    _writable(args.out)
    _writable(args.stats)
    ext = Path(args.input).suffix.lower()
    if ext in (".obj", ".ply", ".off"):
        pts = load_surface(args.input).positions
    else:
        pts = read_points(args.input)
    dt = delaunay3d(pts)
    stats = {"points": int(len(pts)), "tets": int(dt.n_tets)}
    if args.check:
        stats["empty_sphere_violations"] = empty_sphere_violations(dt)
    if args.out:
        n = len(pts)
        tm = TetMesh(pts, dt.tets, np.zeros(n, np.int8), np.full(n, -1, np.int64))
        save_tet_mesh(tm, args.out)
    if args.stats:
        _write_json(args.stats, stats)
    print(json.dumps(stats, sort_keys=True))
    return EXIT_OK


def cmd_fixtures(args) -> int:
    if args.name not in fixtures.FIXTURES:
        raise UsageError(f"unknown fixture {args.name!r}; choose from {', '.join(fixtures.FIXTURES)}")
    _writable(args.out)
    kw = {}
    if args.overlap is not None:
        kw["overlap"] = args.overlap
    if args.drop is not None:
        kw["drop"] = args.drop
    if args.vertices is not None:
        kw["n_vertices"] = args.vertices
    mesh = fixtures.by_name(args.name, **kw)
    save_surface(mesh, args.out)
    print(json.dumps({"fixture": args.name, **mesh.summary()}, sort_keys=True, default=str))
    return EXIT_OK


def cmd_report(args) -> int:
    from .metric import lower_median, read_scores_csv
    from .plotting import score_histogram, score_scatter

    for p in args.csv:
        _need_file(p)
    if args.mesh:
        _need_file(args.mesh)
    if args.colored and not args.mesh:
        raise UsageError("--colored needs --mesh")
    _writable(args.colored)
    _writable(args.summary)
    labels = args.labels.split(",") if args.labels else [Path(p).stem for p in args.csv]
    if len(labels) != len(args.csv):
        raise UsageError("--labels needs one label per CSV file")
    series = {}
    summary = {}
    for label, path in zip(labels, args.csv):
        try:
            ids, scores = read_scores_csv(path)
        except (KeyError, ValueError) as exc:
            raise UsageError(f"{path}: not a score file ({exc})")
        series[label] = (ids, scores)
        finite = scores[np.isfinite(scores)]
        summary[label] = {"vertices": int(len(scores)), "infinite": int(len(scores) - len(finite)),
                          "median": float(lower_median(finite[:, None])[0]) if len(finite)
                          else float("inf")}
    first_ids, first_scores = series[labels[0]]
    if args.mesh:
        surface, vmap = _boundary(_load_any_mesh(args.mesh))
        lookup = {int(v): i for i, v in enumerate(vmap)}
        per_vertex = np.full(surface.n_vertices, np.inf)
        missing = 0
        for vid, s in zip(first_ids.tolist(), first_scores.tolist()):
            i = lookup.get(vid)
            if i is None:
                missing += 1
            else:
                per_vertex[i] = s
        if missing:
            raise UsageError(f"{missing} CSV vertex ids are not on the mesh boundary")
        if args.colored:
            save_colored_surface(surface, per_vertex, args.colored, args.color_scale)
            logger.info("wrote %s", args.colored)
        if args.figures:
            Path(args.figures).mkdir(parents=True, exist_ok=True)
            score_scatter(surface.positions, per_vertex, Path(args.figures) / "scores_map.png",
                          scale=args.color_scale)
    if args.figures:
        Path(args.figures).mkdir(parents=True, exist_ok=True)
        score_histogram({k: v[1] for k, v in series.items()},
                        Path(args.figures) / "scores_hist.png")
    if args.summary:
        _write_json(args.summary, summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    threads_help = f"worker threads (default: ${THREADS_ENV} or 1)"
    p = argparse.ArgumentParser(prog="twintet", description=__doc__.splitlines()[0])
    p.add_argument("--log-level", default="WARNING",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging verbosity")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tet", help="tetrahedralize a surface mesh")
    t.add_argument("input", help="surface mesh (.obj, .ply, .off)")
    t.add_argument("--epsilon", type=_positive(), default=1e-9,
                   help="twin offset in mesh units (clamped to 1%% of the shortest edge)")
    t.add_argument("--radius", type=_positive(), default=None,
                   help="minimum interior point spacing r (default: average edge length)")
    t.add_argument("--max-fail", type=_positive(int), default=1000,
                   help="stop sampling after this many consecutive spacing rejections")
    t.add_argument("--voxel-size", type=_positive(), default=None,
                   help="voxel edge length (default: average edge length)")
    t.add_argument("--seed", type=int, default=0, help="random seed")
    t.add_argument("--flood-seed", type=_flood_seed, default="auto",
                   help="'auto' or x,y,z inside the component to keep")
    t.add_argument("--seed-mode", choices=["seeded", "largest"], default="seeded",
                   help="keep the seeded component or the largest one")
    t.add_argument("--out", help="output tet mesh path")
    t.add_argument("--format", choices=["vtk", "medit"], default=None,
                   help="output format (default: from the file extension)")
    t.add_argument("--stats", help="write pipeline statistics as JSON")
    t.add_argument("--threads", type=_positive(int), default=None, help=threads_help)
    t.set_defaults(func=cmd_tet)

    m = sub.add_parser("metric", help="landmark connectivity score of a mesh")
    m.add_argument("--ref", required=True, help="reference surface (.obj, .ply, .off)")
    m.add_argument("--mesh", required=True, help="candidate tet mesh (.vtk, .mesh) or surface")
    m.add_argument("--landmarks", type=_positive(int), default=32, help="number of landmarks")
    m.add_argument("--landmark-mode", choices=["fps", "stride"], default="fps",
                   help="geodesic farthest-point sampling or index stride")
    m.add_argument("--csv", help="per-vertex scores (vertex_id, x, y, z, closest_ref, C)")
    m.add_argument("--colored", help="boundary surface PLY coloured by score")
    m.add_argument("--color-scale", type=_positive(), default=0.01,
                   help="score mapped to full red")
    m.add_argument("--summary", help="summary statistics as JSON")
    m.add_argument("--threads", type=_positive(int), default=None, help=threads_help)
    m.set_defaults(func=cmd_metric)

    s = sub.add_parser("smooth", help="neighbour-average smoothing of a mesh surface")
    s.add_argument("--mesh", required=True, help="surface or tet mesh (boundary is smoothed)")
    s.add_argument("--iters", type=_nonneg_int, default=100, help="iterations")
    s.add_argument("--lambda", dest="lam", type=_positive(), default=0.5,
                   help="step factor in (0, 1]")
    s.add_argument("--snapshot-every", type=_nonneg_int, default=0,
                   help="write a PLY every N iterations (0: none)")
    s.add_argument("--out-dir", help="directory for snapshots and the final surface")
    s.add_argument("--out", help="final smoothed surface path")
    s.add_argument("--move-all", action="store_true",
                   help="move interior tet vertices too, along tet edges")
    s.set_defaults(func=cmd_smooth)

    d = sub.add_parser("delaunay", help="Delaunay tetrahedralization of a point cloud")
    d.add_argument("input", help="points (.xyz) or a surface whose vertices are used")
    d.add_argument("--out", help="output .vtk or .mesh")
    d.add_argument("--stats", help="write counts as JSON")
    d.add_argument("--check", action="store_true", help="brute-force empty-sphere check")
    d.set_defaults(func=cmd_delaunay)

    f = sub.add_parser("fixtures", help="write a synthetic test surface")
    f.add_argument("name", help="one of: " + ", ".join(fixtures.FIXTURES))
    f.add_argument("out", help="output surface path (.obj, .ply, .off)")
    f.add_argument("--overlap", type=float, default=None,
                   help="fused-spheres interpenetration depth in tube radii")
    f.add_argument("--drop", type=float, default=None,
                   help="sphere-hole fraction of faces removed")
    f.add_argument("--vertices", type=_positive(int), default=None,
                   help="vertex count for sphere fixtures")
    f.set_defaults(func=cmd_fixtures)

    r = sub.add_parser("report", help="figures and coloured PLY from score CSV files")
    r.add_argument("csv", nargs="+", help="score CSV files written by 'metric --csv'")
    r.add_argument("--labels", help="comma-separated series labels (default: file stems)")
    r.add_argument("--mesh", help="mesh the first CSV was computed on")
    r.add_argument("--colored", help="coloured PLY of the first CSV's scores")
    r.add_argument("--color-scale", type=_positive(), default=0.01,
                   help="score mapped to full red")
    r.add_argument("--figures", help="directory for PNG figures")
    r.add_argument("--summary", help="per-file medians as JSON")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", "absent") is None:
        args.threads = default_threads()
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"twintet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"twintet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MeshFormatError as exc:
        print(f"twintet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PipelineError, DelaunayError, MeshError, ValueError, RuntimeError) as exc:
        print(f"twintet: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
