"""Command-line front end.

Every command writes CSV and JSON into ``--out``; the JSON embeds the full
configuration and the package version.  Exit codes: 0 success, 2 invalid
configuration, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import (
    general_sheet,
    reconstruct_profile,
    simple_branch,
    special_sheet,
)
from .checks import run_checks
from .config import ConfigError, build_config, load_config
from .errors import (
    CorruptFileError,
    HydroelasticError,
    NoConvergenceError,
    NotSimpleError,
    PreconditionError,
    RefusalError,
    SchemaVersionError,
    SingularParameterError,
)
from .linear import curve_Ak, double_points, pk_roots
from .storage import SheetStore, load_sheet, save_sheet, sheet_csv
from .svg import DISPERSION_COLUMNS, Panel, dispersion_svg_from_csv, figure

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class SolverFailure(HydroelasticError):
    """Raised after partial outputs and a failure manifest were written."""


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def _manifest(cfg, command: str, **results) -> str:
    return json.dumps({"tool": "hydroelastic", "version": __version__, "command": command,
                       "config": cfg.to_dict(), "results": results},
                      indent=2, sort_keys=True) + "\n"


def _t_grid(t_max: float, n: int) -> list:
    """n points symmetric about 0 (0 included when n is odd)."""
    if n == 1:
        return [0.0]
    return [float(v) for v in np.linspace(-t_max, t_max, n)]


# -- commands ---------------------------------------------------------------


def cmd_dispersion(cfg, out: Path) -> int:
    sec = cfg.section("dispersion")
    p, m = cfg.params_base, cfg.model
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DISPERSION_COLUMNS)
    summary = {}
    for name, (xl, yl) in sec["windows"].items():
        counts = {}
        for k in range(sec["k_min"], sec["k_max"] + 1):
            c = curve_Ak(k, xl, sec["n_samples"], p.g, p.rho, m.E11, m.E22, lambda2_range=yl)
            for x, y in zip(c.lambda1, c.lambda2):
                writer.writerow([name, k, repr(float(x)), repr(float(y))])
            counts[k] = len(c)
        summary[name] = counts
    text = buf.getvalue()
    _write(out, "dispersion.csv", text)
    _write(out, "dispersion.svg", dispersion_svg_from_csv(text, sec["windows"]))
    roots = {k: list(pk_roots(k, p.g, p.rho, m.E11, m.E22)[:2])
             for k in range(sec["k_min"], sec["k_max"] + 1)}
    _write(out, "dispersion.json", _manifest(cfg, "dispersion", points=summary, roots=roots))
    return EXIT_OK


def cmd_double_points(cfg, out: Path) -> int:
    sec = cfg.section("double_points")
    p, m = cfg.params_base, cfg.model
    rows = []
    for k in range(1, sec["k_max"] + 1):
        for l in range(k + 1, sec["l_max"] + 1):
            rows += [dp.to_dict() for dp in double_points(k, l, p.g, p.rho, m.E11, m.E22)]
    buf = io.StringIO()
    cols = ["k", "l", "lambda1", "lambda2", "resonant", "nondegenerate", "mismatch"]
    writer = csv.DictWriter(buf, cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({c: repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols})
    _write(out, "double_points.csv", buf.getvalue())
    _write(out, "double_points.json", _manifest(cfg, "double-points", double_points=rows))
    return EXIT_OK


def cmd_branch(cfg, out: Path) -> int:
    sec = cfg.section("branch")
    p = cfg.params_base
    ts = _t_grid(sec["t_max"], sec["n_grid"])
    try:
        sheet = simple_branch(sec["k"], sec["lambda1"], ts, p, cfg.model, cfg.disc,
                              free=sec["free"])
    except NoConvergenceError as exc:
        _write(out, "failure.json", _manifest(cfg, "branch", error=str(exc),
                                              history=exc.history))
        raise SolverFailure(str(exc)) from None
    _write(out, "branch.csv", sheet_csv(sheet, cfg.data["csv_coeffs"]))
    save_sheet(sheet, out / "branch.jsonl")
    pos = sorted(t for t in ts if t > 0)[:3]
    results = {"points": len(sheet)}
    if len(pos) >= 2 and sec["free"] == "lambda2":
        vals = [sheet.points[(t, float(sec["lambda1"]))].lam[1] for t in pos]
        results["lambda2_limit"] = _limit_in_t2(pos, vals)
    _write(out, "branch.json", _manifest(cfg, "branch", **results))
    _branch_svg(sheet, out / "branch.svg")
    return EXIT_OK


def _limit_in_t2(ts, values) -> float:
    """Value at t = 0 of the interpolant in t^2 (lambda2 is even in t)."""
    s = np.square(ts)
    coef = np.polyfit(s, values, len(ts) - 1)
    return float(np.polyval(coef, 0.0))


def _branch_svg(sheet, path: Path):
    pts = sheet.ordered()
    ts = [k[0] for k, _ in pts]
    l2 = [p.lam[1] for _, p in pts]
    if len(ts) < 2:
        return
    pad = 1e-12 + 0.05 * (max(l2) - min(l2))
    panel = Panel("branch lambda2(t)", (min(ts), max(ts)), (min(l2) - pad, max(l2) + pad),
                  "t", "lambda2")
    panel.add("lambda2", ts, l2)
    path.write_text(figure([panel]), encoding="utf-8")


def cmd_sheet(cfg, out: Path, workers: int, seed: int) -> int:
    sec = cfg.section("sheet")
    p, m = cfg.params_base, cfg.model
    k, l = sec["k"], sec["l"]
    ts = _t_grid(sec["t_max"], sec["n_grid"])
    if sec["kind"] == "simple":
        l1 = sec["lambda1"] if sec["lambda1"] is not None else m.E11 + 1.0
        sheet = simple_branch(k, l1, ts, p, m, cfg.disc)
        return _finish_sheet(cfg, out, sheet)
    dps = [dp for dp in double_points(min(k, l), max(k, l), p.g, p.rho, m.E11, m.E22)]
    if not dps:
        raise ConfigError([f"sheet: the curves A_{k} and A_{l} do not cross"])
    dp = dps[0]
    if sec["kind"] == "special":
        l1s = [dp.lambda1] if sec["lambda1"] is None else [sec["lambda1"]]
        sheet = special_sheet(k, dp, [(t, x) for x in l1s for t in ts], p, m, cfg.disc)
        return _finish_sheet(cfg, out, sheet)
    store_path = out / "sheet.jsonl.partial"
    provenance = {"double_point": dp.to_dict(), "t1_grid": ts, "t2_grid": ts,
                  "config": cfg.to_dict()}
    store = SheetStore(store_path, "general", (dp.k, dp.l), provenance)
    sheet = general_sheet(dp, ts, ts, p, m, cfg.disc, workers=workers, seed=seed, store=store)
    sheet.provenance = provenance
    return _finish_sheet(cfg, out, sheet, store_path)


def _finish_sheet(cfg, out: Path, sheet, store_path: Path | None = None) -> int:
    save_sheet(sheet, out / "sheet.jsonl")
    if store_path is not None and store_path.exists():
        store_path.unlink()
    _write(out, "sheet.csv", sheet_csv(sheet, cfg.data["csv_coeffs"]))
    failures = {repr(list(k)): v for k, v in sorted(sheet.failures.items())}
    _write(out, "sheet.json", _manifest(cfg, "sheet", kind=sheet.kind, modes=list(sheet.modes),
                                        points=len(sheet), failures=failures))
    if failures:
        raise SolverFailure(f"{len(failures)} grid points did not converge; see sheet.json")
    return EXIT_OK


def cmd_check(cfg, out: Path) -> int:
    results = run_checks(cfg)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {msg}" for name, ok, msg in results]
    print("\n".join(lines))
    _write(out, "check.json", _manifest(cfg, "check", checks=[
        {"name": n, "passed": bool(ok), "message": msg} for n, ok, msg in results]))
    if not all(ok for _, ok, _ in results):
        raise SolverFailure("some invariant checks failed")
    return EXIT_OK


def cmd_profile(cfg, out: Path) -> int:
    sec = cfg.section("profile")
    if not sec["sheet"]:
        raise ConfigError(["profile.sheet: path to a sheet file is required"])
    sheet = load_sheet(sec["sheet"])
    pts = sheet.ordered()
    if not pts:
        raise ConfigError(["profile.sheet: the sheet has no points"])
    if sec["index"] is None:
        idx = int(np.argmax([np.linalg.norm(p.coeffs) for _, p in pts]))
    else:
        idx = int(sec["index"])
        if not 0 <= idx < len(pts):
            raise ConfigError([f"profile.index: out of range 0..{len(pts) - 1}"])
    key, point = pts[idx]
    prof = reconstruct_profile(point, cfg.params_base, cfg.model, sec["n_plot"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau", "x", "y", "stretch", "curvature"])
    for row in zip(prof.tau, prof.x, prof.y, prof.stretch, prof.curvature):
        writer.writerow([repr(float(v)) for v in row])
    _write(out, "profile.csv", buf.getvalue())
    _write(out, "profile.json", _manifest(cfg, "profile", key=list(key), lam=list(point.lam),
                                          c=prof.c, c0=prof.c0, d=prof.d,
                                          mean_shift=prof.mean_shift))
    ys = prof.y
    pad = 1e-12 + 0.1 * (float(ys.max()) - float(ys.min()))
    panel = Panel("surface profile", (float(prof.x.min()), float(prof.x.max())),
                  (float(ys.min()) - pad, float(ys.max()) + pad), "x", "y")
    order = np.argsort(prof.x)
    panel.add("profile", prof.x[order], ys[order])
    _write(out, "profile.svg", figure([panel]))
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default=None, help="output directory (default: out)")
    common.add_argument("--workers", type=int, default=None, help="worker processes")
    common.add_argument("--seed", type=int, default=None, help="ordering seed")
    common.add_argument("--k", type=int, default=None, help="mode k")
    common.add_argument("--l", type=int, default=None, help="second mode l")
    common.add_argument("--lambda1", type=float, default=None, help="lambda1 value")
    common.add_argument("--t-max", type=float, default=None, help="largest amplitude")
    common.add_argument("--grid", type=int, default=None, help="grid points per axis")

    parser = argparse.ArgumentParser(prog="hydroelastic", parents=[common],
                                     description="Small-amplitude hydroelastic travelling waves")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dispersion", parents=[common], help="curves A_k and their SVG")
    sub.add_parser("double-points", parents=[common], help="table of double points")
    sub.add_parser("branch", parents=[common], help="simple-eigenvalue branch")
    sp = sub.add_parser("sheet", parents=[common], help="simple, special or general sheet")
    sp.add_argument("--kind", choices=["simple", "special", "general"], default=None)
    sub.add_parser("check", parents=[common], help="run the invariant suites")
    pp = sub.add_parser("profile", parents=[common], help="surface of a stored point")
    pp.add_argument("--sheet", default=None, help="sheet file (.jsonl)")
    pp.add_argument("--index", type=int, default=None, help="point index in key order")
    return parser


def _overrides(args) -> dict:
    """Command-line overrides as a config fragment."""
    over: dict = {}
    for key in ("workers", "seed"):
        if getattr(args, key) is not None:
            over[key] = getattr(args, key)
    cmd = args.command
    section = {"dispersion": "dispersion", "double-points": "double_points",
               "branch": "branch", "sheet": "sheet", "profile": "profile"}.get(cmd)
    sec: dict = {}
    if cmd == "dispersion" and args.k is not None:
        sec["k_max"] = args.k
    elif cmd == "double-points":
        if args.k is not None:
            sec["k_max"] = args.k
        if args.l is not None:
            sec["l_max"] = args.l
    elif cmd in ("branch", "sheet"):
        for flag, key in (("k", "k"), ("lambda1", "lambda1"), ("t_max", "t_max"),
                          ("grid", "n_grid")):
            if getattr(args, flag) is not None:
                sec[key] = getattr(args, flag)
        if cmd == "sheet":
            if args.l is not None:
                sec["l"] = args.l
            if args.kind is not None:
                sec["kind"] = args.kind
    elif cmd == "profile":
        if args.sheet is not None:
            sec["sheet"] = args.sheet
        if args.index is not None:
            sec["index"] = args.index
    if sec:
        over[section] = sec
    return over


def _merge_into(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge_into(out[key], val)
        else:
            out[key] = val
    return out


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        base = {}
        if args.config:
            base = load_config(args.config).data
        cfg = build_config(_merge_into(base, _overrides(args)))
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or "out")
    try:
        out.mkdir(parents=True, exist_ok=True)
        workers, seed = cfg.data["workers"], cfg.data["seed"]
        if args.command == "dispersion":
            return cmd_dispersion(cfg, out)
        if args.command == "double-points":
            return cmd_double_points(cfg, out)
        if args.command == "branch":
            return cmd_branch(cfg, out)
        if args.command == "sheet":
            return cmd_sheet(cfg, out, workers, seed)
        if args.command == "check":
            return cmd_check(cfg, out)
        return cmd_profile(cfg, out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (RefusalError, NotSimpleError, SingularParameterError, PreconditionError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CorruptFileError, SchemaVersionError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HydroelasticError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
