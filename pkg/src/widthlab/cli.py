"""widthlab command line: systems, distances, widths, constructions, experiments."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .metricspace import DomainError, MetricSpec
from .subspace import Subspace, distance, random_subspace

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed (default 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker pool cap (default: available cores)")
    p.add_argument("--out", default=None, help="output path; a manifest is written next to it")
    p.add_argument("--format", choices=("csv", "json", "svg"), default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="widthlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"widthlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a function system matrix")
    g.add_argument("system", choices=("walsh", "dft", "trig", "orthonormal", "lacunary", "signs",
                                      "sample"))
    g.add_argument("--k", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--points", type=int)
    g.add_argument("--funcs", type=int)
    g.add_argument("--lam", type=float)
    g.add_argument("--profile", default="cos")
    g.add_argument("--delta", type=float, default=1.0)
    g.add_argument("--model", default="rademacher")
    g.add_argument("--trials", type=int, default=1)

    d = sub.add_parser("dist", parents=[common], help="distance from vectors to a subspace")
    d.add_argument("--input", required=True, help="matrix whose columns are the vectors")
    d.add_argument("--basis", help="matrix whose columns span the subspace")
    d.add_argument("--random-dim", type=int, help="use a Haar subspace of this dimension")
    d.add_argument("--metric", default="l2")
    d.add_argument("--column", type=int, default=None, help="only this column")

    w = sub.add_parser("width", parents=[common], help="width engines")
    w.add_argument("engine", choices=("exact-l2", "mc", "eckart-young", "binom"))
    w.add_argument("--input")
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--k", type=int)
    w.add_argument("--metric", default="L1")
    w.add_argument("--strategy", default="RandomSubspace")
    w.add_argument("--trials", type=int, default=20)

    lr = sub.add_parser("lowrank", parents=[common], help="rank-n approximation by altmin")
    lr.add_argument("--input", required=True)
    lr.add_argument("--n", type=int, required=True)
    lr.add_argument("--metric", default="fro")
    lr.add_argument("--restarts", type=int, default=3)
    lr.add_argument("--iters", type=int, default=50)

    c = sub.add_parser("construct", parents=[common], help="explicit approximation constructions")
    c.add_argument("construction", choices=("walsh", "dft", "trig", "sparse", "monomial", "fejer",
                                            "lambda-set"))
    c.add_argument("--k", type=int)
    c.add_argument("--lambda", dest="lam", type=float, default=1.0)
    c.add_argument("--s0", type=int)
    c.add_argument("--mode", choices=("materialize", "sample"), default=None)
    c.add_argument("--count", type=int, default=10 ** 6)
    c.add_argument("--N", type=int)
    c.add_argument("--n", type=int)
    c.add_argument("--m", type=int, nargs="+")
    c.add_argument("--p", type=float)
    c.add_argument("--eps", type=float)
    c.add_argument("--trials", type=int, default=2000)
    c.add_argument("--coeffs", type=float, nargs="+", help="monomial coefficients c_0..c_d")

    e = sub.add_parser("experiment", parents=[common], help="config-driven experiments")
    e.add_argument("action", choices=("run", "validate"))
    e.add_argument("config")

    r = sub.add_parser("report", parents=[common], help="re-print manifests or format results")
    r.add_argument("input")
    r.add_argument("--x", default="aux1", help="CSV column for the x axis of the SVG")
    r.add_argument("--y", default="value", help="CSV column for the y axis of the SVG")
    return parser


# --------------------------------------------------------------------------
# helpers


def _metric(text: str) -> MetricSpec:
    return MetricSpec.parse(text)


def _load_matrix(path) -> np.ndarray:
    from .systems import read_matrix

    if str(path).endswith(".csv"):
        with open(path) as fh:
            rows = [r for r in csv.reader(fh) if r]
        try:
            return np.array([[float(v) for v in r] for r in rows])
        except ValueError:
            return np.array([[complex(v.replace("i", "j")) for v in r] for r in rows])
    return read_matrix(path)


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} needs {', '.join(missing)}")


def _emit(args, payload, manifest: dict, text: Optional[str] = None) -> None:
    """Write the payload to --out (or stdout) and the manifest next to it."""
    body = text if text is not None else json.dumps(payload, indent=2, sort_keys=True)
    manifest = {"command": args.command, "version": __version__, "seed": args.seed,
                "threads": args.threads, "resolved": manifest}
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(body if body.endswith("\n") else body + "\n")
        manifest["outputs"] = [args.out]
        with open(_manifest_path(args.out), "w") as fh:
            fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(body if body.endswith("\n") else body + "\n")
        sys.stderr.write("manifest: " + json.dumps(manifest, sort_keys=True) + "\n")


def _manifest_path(out: str) -> str:
    return os.path.splitext(out)[0] + ".manifest.json"


def _jsonable(v):
    from .experiments import _jsonable as conv

    return conv(v)


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> None:
    from . import systems as S

    if args.system == "walsh":
        _need(args, "k")
        A, resolved = S.walsh_system(args.k).samples, {"system": "walsh", "k": args.k}
    elif args.system == "dft":
        _need(args, "N")
        A, resolved = S.dft_system(args.N).samples, {"system": "dft", "N": args.N}
    elif args.system == "trig":
        _need(args, "N", "points")
        A = S.trig_grid_system(args.N, args.points).samples
        resolved = {"system": "trig", "n_freq": args.N, "points": args.points}
    elif args.system == "orthonormal":
        _need(args, "points", "funcs")
        A = S.orthonormal_system(args.points, args.funcs, seed=args.seed).samples
        resolved = {"system": "orthonormal", "points": args.points, "funcs": args.funcs}
    elif args.system == "lacunary":
        _need(args, "lam", "N", "points")
        from .experiments import PROFILES

        if args.profile not in PROFILES:
            raise UsageError(f"unknown profile {args.profile!r}")
        A = S.lacunary_system(PROFILES[args.profile], args.lam, args.N, args.points).samples
        resolved = {"system": "lacunary", "profile": args.profile, "lambda": args.lam,
                    "N": args.N, "points": args.points}
    elif args.system == "signs":
        _need(args, "N")
        A = S.piecewise_constant_random_system(args.N, args.delta, seed=args.seed).samples
        resolved = {"system": "signs", "N": args.N, "delta": args.delta}
    else:
        _need(args, "N")
        from .experiments import make_model

        A = S.sample(make_model(args.model, args.N), args.trials, seed=args.seed).T
        resolved = {"system": "sample", "model": args.model, "N": args.N, "trials": args.trials}
    fmt = args.format or ("csv" if args.out and args.out.endswith(".csv") else "wlab")
    resolved["shape"] = list(A.shape)
    if args.out is None:
        raise UsageError("gen needs --out")
    if fmt == "csv":
        S.write_csv(args.out, A)
    elif fmt == "wlab":
        S.write_matrix(args.out, A)
    else:
        raise UsageError("gen writes csv or the binary matrix format")
    manifest = {"command": "gen", "version": __version__, "seed": args.seed, "threads": args.threads,
                "resolved": resolved, "outputs": [args.out]}
    with open(_manifest_path(args.out), "w") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_dist(args) -> None:
    X = _load_matrix(args.input)
    if X.ndim == 1:
        X = X[:, None]
    M = X.shape[0]
    if args.basis:
        Q = Subspace.span(_load_matrix(args.basis))
    elif args.random_dim is not None:
        Q = random_subspace(M, args.random_dim, seed=args.seed)
    else:
        raise UsageError("dist needs --basis or --random-dim")
    m = _metric(args.metric)
    cols = range(X.shape[1]) if args.column is None else [args.column]
    out = []
    for j in cols:
        r = distance(X[:, j], Q, m, seed=args.seed + j)
        out.append({"column": j, "value": r.value, "status": r.status, "gap": r.gap})
    resolved = {"input": args.input, "basis": args.basis, "random_dim": args.random_dim,
                "metric": m.label(), "columns": list(cols)}
    _emit_table(args, out, resolved)


def _emit_table(args, rows: list, resolved: dict) -> None:
    if (args.format or "json") == "csv":
        keys = list(rows[0].keys()) if rows else []
        lines = [",".join(keys)] + [",".join(_cell(r[k]) for k in keys) for r in rows]
        _emit(args, None, resolved, "\n".join(lines) + "\n")
    else:
        _emit(args, _jsonable(rows), resolved)


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_width(args) -> None:
    from . import widths as W
    from .systems import FunctionSystem

    if args.engine == "binom":
        _need(args, "k")
        exact, bound = W.binom_tail(args.k, args.n)
        _emit(args, {"exact": exact, "bound": bound}, {"engine": "binom", "k": args.k, "d": args.n})
        return
    _need(args, "input")
    A = _load_matrix(args.input)
    resolved = {"engine": args.engine, "input": args.input, "n": args.n}
    if args.engine == "exact-l2":
        res = W.exact_l2_avg_width(FunctionSystem(A), args.n)
        payload = {"value": res.value, "certainty": res.certainty}
    elif args.engine == "eckart-young":
        res = W.eckart_young_truncation(A, args.n)
        payload = {"value": res.error, "certainty": res.certainty}
    else:
        m = _metric(args.metric)
        res = W.mc_avg_width_upper(FunctionSystem(A), args.n, m, args.strategy, args.trials,
                                   args.seed)
        payload = {"value": res.value, "certainty": res.certainty, "stderr": res.stderr}
        resolved.update(metric=m.label(), strategy=args.strategy, trials=args.trials)
    if args.out is None and (args.format or "json") == "json":
        print(repr(payload["value"]))
        sys.stderr.write("manifest: " + json.dumps({"command": "width", "resolved": resolved,
                                                    "seed": args.seed}, sort_keys=True) + "\n")
        return
    _emit(args, payload, resolved)


def cmd_lowrank(args) -> None:
    from .systems import write_matrix
    from .widths import altmin_lowrank

    A = _load_matrix(args.input)
    m = _metric(args.metric)
    res = altmin_lowrank(A, args.n, m, restarts=args.restarts, iters=args.iters, seed=args.seed)
    resolved = {"input": args.input, "n": args.n, "metric": m.label(), "restarts": args.restarts,
                "iters": args.iters}
    payload = {"error": res.error, "certainty": res.certainty, "rank": res.rank, "notes": res.notes}
    if args.out and (args.format or "json") != "json":
        raise UsageError("lowrank writes JSON; factors go next to it")
    if args.out:
        base = os.path.splitext(args.out)[0]
        write_matrix(base + ".left.wlab", res.left)
        write_matrix(base + ".right.wlab", res.right)
    _emit(args, _jsonable(payload), resolved)


def cmd_construct(args) -> None:
    from . import constructions as C

    kind = args.construction
    if kind == "walsh":
        _need(args, "k")
        mode = args.mode or ("materialize" if 4 ** args.k <= 2 ** 26 else "sample")
        _, rep = C.walsh_lowrank(args.k, args.lam, mode, args.count, args.seed)
    elif kind == "dft":
        _need(args, "k", "s0")
        mode = args.mode or ("materialize" if 4 ** args.k <= 2 ** 26 else "sample")
        _, rep = C.dft_lowrank(args.k, args.lam, args.s0, mode, args.count, args.seed)
    elif kind == "trig":
        _need(args, "N", "m", "p")
        reps = [C.trig_width_report(args.N, m, args.p, args.seed) for m in args.m]
        if args.format == "svg":
            pts = [(r.rank_measured, r.measured) for r in reps]
            _emit(args, None, {"construction": "trig", "N": args.N, "m": args.m, "p": args.p},
                  pareto_svg(pts, "|Lambda|", "max error"))
            return
        _emit(args, [r.to_dict() for r in reps],
              {"construction": "trig", "N": args.N, "m": args.m, "p": args.p})
        return
    elif kind == "sparse":
        _need(args, "p", "N", "n", "eps")
        rep = C.sparse_nonrigidity_sim(args.p, args.N, args.n, args.eps, args.trials, args.seed,
                                       args.threads)
    elif kind == "monomial":
        _need(args, "k", "coeffs")
        info = C.monomial_rank_matrix(args.k, args.coeffs)
        _emit(args, info, {"construction": "monomial", "k": args.k, "coeffs": args.coeffs})
        return
    elif kind == "fejer":
        _need(args, "m")
        from .constructions.trig import fejer_pointwise_bound

        out = []
        for m in args.m:
            T, vals = C.fejer_kernel(m)
            grid = np.arange(vals.size) / vals.size
            row = {"m": m, "K0": float(vals[0]),
                   "pointwise_ok": bool(np.all(vals <= fejer_pointwise_bound(m, grid) * (1 + 1e-12)))}
            if args.p is not None:
                row["norm"] = T.norm(args.N or 8 * max(args.m), args.p)
            out.append(row)
        _emit(args, out, {"construction": "fejer", "m": args.m, "p": args.p, "N": args.N})
        return
    else:
        _need(args, "N", "m")
        cover = C.lambda_set(args.N, args.m[0], args.seed)
        _emit(args, {"size": cover.size, "tau": cover.tau, "size_bound": cover.size_bound,
                     "attempts": cover.attempts, "verified": cover.verify()},
              {"construction": "lambda-set", "N": args.N, "m": args.m[0]})
        return
    resolved = {"construction": kind, **rep.params}
    _emit(args, rep.to_dict(), resolved)


def cmd_experiment(args) -> None:
    from .experiments import ExperimentConfig, run

    cfg = ExperimentConfig.from_toml(args.config, threads=os.cpu_count() or 1)
    if args.threads_given:
        cfg.threads = args.threads
    if args.action == "validate":
        print(json.dumps(_jsonable(cfg.to_dict()), sort_keys=True))
        return
    rec = run(cfg)
    out = args.out or cfg.output_path
    resolved = {"config": _jsonable(cfg.to_dict()), "config_path": args.config}
    if out is None:
        sys.stdout.write(rec.csv_text())
        sys.stderr.write("manifest: " + json.dumps(resolved, sort_keys=True) + "\n")
        return
    fmt = args.format or "csv"
    if fmt == "csv":
        paths = list(rec.write(out))
    elif fmt == "json":
        with open(out, "w") as fh:
            fh.write(rec.json_text() + "\n")
        paths = [out]
    else:
        cols = rec.columns
        xi = cols.index("aux1") if "aux1" in cols else 0
        pts = [(float(r[xi]), float(r[2])) for r in rec.rows]
        with open(out, "w") as fh:
            fh.write(pareto_svg(pts, cols[xi], "value"))
        paths = [out]
    manifest = {"command": "experiment", "version": __version__, "seed": cfg.seed,
                "threads": args.threads, "resolved": resolved, "outputs": paths}
    with open(_manifest_path(out), "w") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_report(args) -> None:
    path = args.input
    if path.endswith(".json"):
        with open(path) as fh:
            data = json.load(fh)
        if "resolved" not in data:
            raise UsageError(f"{path} is not a manifest")
        text = json.dumps(data["resolved"], indent=2, sort_keys=True) + "\n"
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise UsageError(f"{path} has no rows")
    for key in (args.x, args.y):
        if key not in rows[0]:
            raise UsageError(f"column {key!r} not in {path}")
    pts = [(float(r[args.x]), float(r[args.y])) for r in rows]
    fmt = args.format or "svg"
    if fmt == "svg":
        text = pareto_svg(pts, args.x, args.y)
    else:
        front = pareto_front(pts)
        text = json.dumps({"points": pts, "pareto": front}, indent=2) if fmt == "json" else \
            "x,y\n" + "".join(f"{x!r},{y!r}\n" for x, y in front)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# SVG


def pareto_front(points: Sequence[tuple]) -> list:
    """Points not dominated in (smaller x, smaller y), sorted by x."""
    front = []
    best = math.inf
    for x, y in sorted(points):
        if y < best:
            front.append((x, y))
            best = y
    return front


def pareto_svg(points: Sequence[tuple], xlabel: str, ylabel: str, width: int = 480,
               height: int = 320) -> str:
    """Scatter of all points plus the Pareto front as a polyline."""
    pts = [(float(x), float(y)) for x, y in points if math.isfinite(x) and math.isfinite(y)]
    pad = 48
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">'
           f'{_esc(xlabel)}</text>',
           f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 14 {height / 2:.1f})">{_esc(ylabel)}</text>',
           f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:.4g}</text>',
           f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" text-anchor="end">{x1:.4g}</text>',
           f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.4g}</text>',
           f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>']
    for x, y in pts:
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="steelblue"/>')
    front = pareto_front(pts)
    if front:
        poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in front)
        out.append(f'<polyline points="{poly}" fill="none" stroke="crimson" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# --------------------------------------------------------------------------
# entry point

COMMANDS = {"gen": cmd_gen, "dist": cmd_dist, "width": cmd_width, "lowrank": cmd_lowrank,
            "construct": cmd_construct, "experiment": cmd_experiment, "report": cmd_report}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    from .experiments import ValidationError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.seed < 0 or args.seed >= 2 ** 64:
        sys.stderr.write("widthlab: --seed must be an unsigned 64-bit integer\n")
        return EXIT_VALIDATION
    args.threads_given = args.threads is not None
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    if args.threads < 1:
        sys.stderr.write("widthlab: --threads must be positive\n")
        return EXIT_VALIDATION
    try:
        COMMANDS[args.command](args)
    except (UsageError, ValidationError, DomainError, FileNotFoundError) as exc:
        sys.stderr.write(f"widthlab: {exc}\n")
        return EXIT_VALIDATION
    except Exception as exc:  # runtime failure: report, never traceback to the user
        sys.stderr.write(f"widthlab: runtime failure: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
