"""Command-line driver: ``pacal <command> --config FILE [flags]``.

Exit codes: 0 success, 2 usage or config error, 3 domain, limit or numeric
failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import discrete, infinitesimal
from .applications import geodesic_residual, geodesic_trace
from .config import RunConfig, load_config
from .errors import DomainError, LimitError, NumericError, PacalError, UsageError
from .gallery import GallerySpace, build
from .limits import observed_order, richardson_limit
from .space import is_affine_flat
from .verify import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4


# helpers --------------------------------------------------------------------

def thread_count() -> int:
    raw = os.environ.get("PACAL_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"PACAL_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"PACAL_THREADS must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items, threads):
    """``[fn(x) for x in items]`` evaluated by up to ``threads`` workers, in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def fmt(x) -> str:
    """Shortest round-trip decimal form of a double."""
    return repr(float(x))


def parse_vector(text: str, dim: int, what: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if len(vals) != dim:
        raise UsageError(f"{what}: expected {dim} components, got {len(vals)}")
    return np.array(vals)


def parse_vector_list(text: str, dim: int, what: str) -> list[np.ndarray]:
    parts = [t for t in text.split(";") if t.strip()]
    if not parts:
        raise UsageError(f"{what}: empty list")
    return [parse_vector(t, dim, what) for t in parts]


def to_json(obj) -> object:
    """Convert arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {k: to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(to_json(data), indent=2) + "\n")


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def out_dir(args, cfg: RunConfig) -> Path:
    path = Path(args.out if args.out is not None else cfg.output.path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def space_summary(space: GallerySpace) -> dict:
    dom = space.system.domain
    return {"kind": space.spec.kind, "dim": space.spec.dim, "params": space.system.frame.params,
            "domain": {"min": dom.min.tolist(), "max": dom.max.tolist()}}


# curvature ------------------------------------------------------------------

def grid_points(space: GallerySpace, counts) -> list[np.ndarray]:
    """Cell centres of a regular grid over the domain, in lexicographic index order."""
    dom = space.system.domain
    axes = [dom.min[i] + (np.arange(c) + 0.5) * (dom.widths[i] / c) for i, c in enumerate(counts)]
    return [np.array(x) for x in itertools.product(*axes)]


def tensor_headers(n: int) -> list[str]:
    r3 = list(itertools.product(range(n), repeat=3))
    r4 = list(itertools.product(range(n), repeat=4))
    return ([f"x{i}" for i in range(n)]
            + [f"Gamma_{k}_{i}_{j}" for k, i, j in r3]
            + [f"T_{k}_{i}_{j}" for k, i, j in r3]
            + [f"R_{k}_{i}_{j}_{l}" for k, i, j, l in r4]
            + [f"C_{k}_{i}_{j}_{l}" for k, i, j, l in r4])


def curvature_at(space: GallerySpace, p, config) -> dict:
    """Connection coefficients and T, R, C on basis vectors at ``p``.

    ``T[k, i, j]`` is the k-th component of ``T(e_i, e_j)``; ``R[k, i, j, l]``
    and ``C[k, i, j, l]`` likewise for ``(e_i, e_j, e_l)``.
    """
    n = space.system.dim
    eye = np.eye(n)
    try:
        cmap = infinitesimal.connection_map(space.system, p, config=config)
    except (LimitError, DomainError, NumericError) as exc:
        return {"x": p, "status": f"{type(exc).__name__}: {exc}"}
    torsion = np.zeros((n, n, n))
    riem = np.zeros((n, n, n, n))
    for i, j in itertools.product(range(n), repeat=2):
        torsion[:, i, j] = cmap.torsion(eye[i], eye[j])
        for l in range(n):
            riem[:, i, j, l] = cmap.riemann(eye[i], eye[j], eye[l])
    cumulative = riem + torsion[..., None]
    return {"x": p, "gamma": cmap.coefficients, "T": torsion, "R": riem, "C": cumulative,
            "status": "ok"}


def oracle_deviation(space: GallerySpace, rows) -> dict | None:
    if space.oracle is None:
        return None
    n = space.system.dim
    eye = np.eye(n)
    worst = {"gamma": 0.0, "T": 0.0, "R": 0.0}
    for row in rows:
        if row["status"] != "ok":
            continue
        p = row["x"]
        gam = np.transpose([space.oracle.gamma(p, eye[i]) for i in range(n)], (1, 0, 2))
        worst["gamma"] = max(worst["gamma"], float(np.max(np.abs(gam - row["gamma"]))))
        for i, j in itertools.product(range(n), repeat=2):
            t = space.oracle.torsion(p, eye[i], eye[j])
            worst["T"] = max(worst["T"], float(np.max(np.abs(t - row["T"][:, i, j]))))
            for l in range(n):
                r = space.oracle.riemann(p, eye[i], eye[j], eye[l])
                worst["R"] = max(worst["R"], float(np.max(np.abs(r - row["R"][:, i, j, l]))))
    return worst


def cmd_curvature(args, cfg: RunConfig) -> int:
    space = build(cfg.gallery_spec())
    config = cfg.limit_config()
    counts = cfg.grid_counts()
    points = grid_points(space, counts)
    rows = parallel_map(lambda p: curvature_at(space, p, config), points, thread_count())
    n = space.system.dim
    out = out_dir(args, cfg)
    flagged = [r for r in rows if r["status"] != "ok"]
    if cfg.output.format in ("csv", "both"):
        width = n ** 3 * 2 + n ** 4 * 2
        table = []
        for r in rows:
            vals = ([fmt(v) for v in r["x"]] + (
                [fmt(v) for key in ("gamma", "T", "R", "C") for v in np.ravel(r[key])]
                if r["status"] == "ok" else ["nan"] * width))
            table.append(vals + [r["status"]])
        write_csv(out / "curvature.csv", tensor_headers(n) + ["status"], table)
    deviation = oracle_deviation(space, rows)
    if cfg.output.format in ("json", "both"):
        write_json(out / "curvature.json", {
            "space": space_summary(space), "grid": counts,
            "points": [{k: r.get(k) for k in ("x", "gamma", "T", "R", "C", "status") if k in r}
                       for r in rows],
            "oracle_max_abs_deviation": deviation,
            "summary": {"points": len(rows), "flagged": len(flagged)},
        })
    print(f"curvature: {len(rows)} grid points on {space.name} (dim {n}), "
          f"{len(flagged)} flagged; output in {out}")
    if deviation is not None:
        print("oracle max abs deviation: " + ", ".join(f"{k}={v:.3e}" for k, v in deviation.items()))
    for r in flagged:
        print(f"  flagged at {r['x'].tolist()}: {r['status']}")
    return EXIT_RUNTIME if flagged else EXIT_OK


# geodesic -------------------------------------------------------------------

def svg_polyline(points: np.ndarray, domain) -> str:
    """Polyline in a fixed 800x800 viewBox; the domain box fills the view, y points up."""
    lo, wd = domain.min[:2], domain.widths[:2]
    xs = (points[:, 0] - lo[0]) / wd[0] * 800.0
    ys = 800.0 - (points[:, 1] - lo[1]) / wd[1] * 800.0
    coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))
    return ('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 800" '
            'width="800" height="800">\n'
            '  <rect x="0" y="0" width="800" height="800" fill="none" stroke="#999"/>\n'
            f'  <polyline fill="none" stroke="#1f4e99" stroke-width="2" points="{coords}"/>\n'
            '</svg>\n')


def cmd_geodesic(args, cfg: RunConfig) -> int:
    space = build(cfg.gallery_spec())
    sys_ = space.system
    n = sys_.dim
    if args.svg and n != 2:
        raise UsageError("SVG output is only available for dim = 2")
    p0 = parse_vector(args.p0, n, "--p0") if args.p0 else sys_.domain.center
    v = parse_vector(args.v, n, "--v")
    trace = geodesic_trace(sys_, p0, v, args.t_end, args.steps)
    out = out_dir(args, cfg)
    rows = [[fmt(t)] + [fmt(x) for x in pt] for t, pt in zip(trace.times, trace.points)]
    write_csv(out / "geodesic.csv", ["t"] + [f"x{i}" for i in range(n)], rows)
    if args.svg:
        (out / "geodesic.svg").write_text(svg_polyline(trace.points, sys_.domain))
    print(f"geodesic: {args.steps} RK4 steps to t={fmt(args.t_end)}")
    print("endpoint: " + ", ".join(fmt(x) for x in trace.endpoint))
    if trace.points.shape[0] >= 5:
        print(f"body-velocity residual: {geodesic_residual(sys_, trace):.3e}")
    else:
        print("body-velocity residual: n/a (fewer than 5 samples)")
    return EXIT_OK


# transport ------------------------------------------------------------------

def cmd_transport(args, cfg: RunConfig) -> int:
    space = build(cfg.gallery_spec())
    sys_ = space.system
    n = sys_.dim
    v = parse_vector(args.v, n, "--v")
    if (args.path is None) == (args.steps is None):
        raise UsageError("give exactly one of --path (chart points) or --steps (ground vectors)")
    if args.path is not None:
        pts = parse_vector_list(args.path, n, "--path")
        if len(pts) < 2:
            raise UsageError("--path needs at least two points")
        steps = []
        for k in range(len(pts) - 1):
            sys_.check_point(pts[k], f"path point {k}")
            steps.append(sys_.unact(pts[k], pts[k + 1] - pts[k]))
        sys_.check_point(pts[-1], f"path point {len(pts) - 1}")
        start = pts[0]
    else:
        start = parse_vector(args.start, n, "--start") if args.start else sys_.domain.center
        steps = parse_vector_list(args.steps, n, "--steps")
    path = discrete.PolyPath(start, tuple(steps))
    res = discrete.transport(sys_, v, path, full_output=True)
    closed = path.is_closed(sys_)
    defect = float(np.linalg.norm(res.final - res.vectors[0])) if closed else None
    report = {"space": space_summary(space), "start": res.points[0], "initial": res.vectors[0],
              "steps": [{"index": k, "step": steps[k], "point": res.points[k + 1],
                         "vector": res.vectors[k + 1]} for k in range(len(steps))],
              "final": res.final, "closed": closed, "loop_defect": defect}
    out = out_dir(args, cfg)
    write_json(out / "transport.json", report)
    print("initial: " + ", ".join(fmt(x) for x in res.vectors[0]))
    for k in range(len(steps)):
        print(f"step {k}: at " + ", ".join(fmt(x) for x in res.points[k + 1])
              + " -> " + ", ".join(fmt(x) for x in res.vectors[k + 1]))
    print("final: " + ", ".join(fmt(x) for x in res.final))
    if closed:
        print(f"loop defect: {fmt(defect)}")
    else:
        print("loop defect: omitted (path is open)")
    return EXIT_OK


# flatness -------------------------------------------------------------------

def cmd_flatness(args, cfg: RunConfig) -> int:
    space = build(cfg.gallery_spec())
    rep = is_affine_flat(space.system, sample_count=args.samples, seed=cfg.seed, tol=args.tol)
    out = out_dir(args, cfg)
    write_json(out / "flatness.json", {"space": space_summary(space), "flat": rep.flat,
                                       "max_residual": rep.max_residual, "witness": rep.witness,
                                       "samples": rep.samples, "resampled": rep.resampled,
                                       "tol": args.tol})
    print(f"flatness: {'flat' if rep.flat else 'not flat'} "
          f"(max residual {rep.max_residual:.3e} over {rep.samples} samples)")
    if rep.witness is not None and not rep.flat:
        w = rep.witness
        print(f"witness: p={w['p']} u={w['u']} v={w['v']}")
    return EXIT_OK


# verify ---------------------------------------------------------------------

def cmd_verify(args, cfg: RunConfig) -> int:
    space = build(cfg.gallery_spec())
    report = run_suite(space, args.suite, cfg.seed, cfg.limit_config(), thread_count(),
                       cfg.vector_fields())
    out = out_dir(args, cfg)
    write_json(out / "verify.json", report)
    for r in report["identities"]:
        value = "error" if r["value"] is None else f"{float(r['value']):.3e}"
        mark = "PASS" if r["passed"] else "FAIL"
        print(f"{mark} {r['suite']:<14} {r['name']:<42} {value} {r['relation']} {r['bound']:.1e}")
    s = report["summary"]
    print(f"verify: {s['passed']}/{s['total']} passed")
    return EXIT_OK if s["failed"] == 0 else EXIT_VERIFY


# limits ---------------------------------------------------------------------

def _local_orders(taus, values, reference, ratio):
    errs = [float(np.max(np.abs(np.asarray(v) - reference))) for v in values]
    orders = [None]
    for a, b in zip(errs, errs[1:]):
        orders.append(float(np.log(a / b) / np.log(ratio)) if a > 1e-14 and b > 1e-14 else None)
    return orders


def cmd_limits(args, cfg: RunConfig) -> int:
    space = build(cfg.gallery_spec())
    sys_ = space.system
    n = sys_.dim
    config = cfg.limit_config()
    p = parse_vector(args.p, n, "--p") if args.p else sys_.domain.center
    u = parse_vector(args.u, n, "--u") if args.u else np.eye(n)[0]
    if args.field:
        vf = cfg.field(args.field)
        if not hasattr(vf, "dim"):
            raise UsageError(f"field {args.field!r} is scalar; --field needs a vector field")
        v = vf(p)
    else:
        v = parse_vector(args.v, n, "--v") if args.v else np.eye(n)[-1]
    p = sys_.check_point(p)
    quotient = infinitesimal.pseudo_quotient(sys_, u, v, p)
    sides = {"+": richardson_limit(quotient, config, early_exit=False, direction=1.0),
             "-": richardson_limit(quotient, config, early_exit=False, direction=-1.0)}
    out = out_dir(args, cfg)
    rows = []
    print(f"limits: quotient D_(tau u) v(p) / tau on {space.name} at p={p.tolist()}")
    print(f"        u={np.asarray(u).tolist()} v={np.asarray(v).tolist()}")
    for side, est in sides.items():
        ref = est.value
        q_ord = _local_orders(est.taus, est.quotients, ref, config.ratio)
        d_ord = _local_orders(est.taus, est.diagonals, ref, config.ratio)
        print(f"\nside {side}  (converged: {est.converged}, err {est.err:.3e})")
        print(f"{'k':>2} {'tau':>10}  {'|quotient|':>12}  {'|diagonal|':>12}  "
              f"{'q-order':>7}  {'d-order':>7}")
        for k, tau in enumerate(est.taus):
            qo = "-" if q_ord[k] is None else f"{q_ord[k]:.2f}"
            do = "-" if d_ord[k] is None else f"{d_ord[k]:.2f}"
            print(f"{k:>2} {tau:>10.3e}  {np.linalg.norm(est.quotients[k]):>12.6e}  "
                  f"{np.linalg.norm(est.diagonals[k]):>12.6e}  {qo:>7}  {do:>7}")
            rows.append([side, str(k), fmt(tau)]
                        + [fmt(x) for x in est.quotients[k]] + [fmt(x) for x in est.diagonals[k]]
                        + ["" if q_ord[k] is None else fmt(q_ord[k]),
                           "" if d_ord[k] is None else fmt(d_ord[k])])
        errs = np.abs(est.quotients - ref).max(axis=-1)
        if errs.max() > 1e-14:
            print(f"raw quotient order (log-log slope): "
                  f"{observed_order(est.taus, est.quotients, ref):.3f}")
        else:
            print("raw quotient order: exact at every tau")
        print("limit estimate: " + ", ".join(fmt(x) for x in est.value))
    gap = float(np.max(np.abs(sides["+"].value - sides["-"].value)))
    scale = max(1.0, float(np.max(np.abs(sides["+"].value))))
    both = sides["+"].converged and sides["-"].converged
    print()
    if not both:
        print("NOT CONVERGED: the Richardson diagonals did not settle")
    if gap > config.tol * scale:
        print(f"NOT CONVERGED: one-sided limits differ by {gap:.3e}; the two-sided limit does not exist")
    elif both:
        print(f"limit exists: one-sided limits agree to {gap:.3e}")
    header = (["side", "k", "tau"] + [f"q{i}" for i in range(n)] + [f"d{i}" for i in range(n)]
              + ["q_order", "d_order"])
    write_csv(out / "limits.csv", header, rows)
    return EXIT_OK


# entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pacal", description="Pointwise affine calculus toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (default: output.path)")
        return p

    add("curvature", "Gamma, T, R and C on a grid")

    p = add("geodesic", "trace an affine geodesic with RK4")
    p.add_argument("--p0", help="start point, comma separated (default: domain centre)")
    p.add_argument("--v", required=True, help="body velocity, comma separated")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--svg", action="store_true", help="also write an SVG polyline (dim 2)")

    p = add("transport", "transport a vector along a polygonal path")
    p.add_argument("--v", required=True, help="vector, comma separated")
    p.add_argument("--path", help="chart points 'x,y;x,y;...'; steps are derived from them")
    p.add_argument("--steps", help="ground-vector steps 'a,b;c,d;...'")
    p.add_argument("--start", help="start point for --steps (default: domain centre)")

    p = add("flatness", "sample the flatness residual")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-12)

    p = add("verify", "run identity suites and write a JSON report")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")

    p = add("limits", "tabulate a pseudo-derivative limit")
    p.add_argument("--p", help="base point (default: domain centre)")
    p.add_argument("--u", help="direction (default: e_0)")
    p.add_argument("--v", help="vector (default: e_{n-1})")
    p.add_argument("--field", help="named vector field from the config, evaluated at p")
    return parser


COMMANDS = {"curvature": cmd_curvature, "geodesic": cmd_geodesic, "transport": cmd_transport,
            "flatness": cmd_flatness, "verify": cmd_verify, "limits": cmd_limits}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"pacal: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        extra = []
        if exc.parameter is not None:
            extra.append(f"parameter={exc.parameter!r}")
        if exc.step is not None:
            extra.append(f"step={exc.step}")
        if exc.point is not None:
            extra.append(f"point={np.asarray(exc.point).tolist()}")
        print(f"pacal: domain error: {exc}" + (f" ({', '.join(extra)})" if extra else ""),
              file=sys.stderr)
        return EXIT_RUNTIME
    except (LimitError, NumericError, PacalError) as exc:
        print(f"pacal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
