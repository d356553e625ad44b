"""Command-line front end: ``verify``, ``spectrum`` and ``gl``.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid parameters,
3 more than 20% of sampled points could not be evaluated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np

from . import curvlab as cl
from . import orbifold as ob
from . import reduction as rd
from .clifford import PARA, QUAT
from .projplane import GeometryError, SamplingError

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_SAMPLING = 0, 1, 2, 3
FAILURE_RATE_MAX = 0.2

DEFAULT_TOLS = {
    "closed": 1e-9,
    "fd": 1e-3,
    "einstein": 1e-3,
    "weyl": 1e-3,
    "weyl_other": 1e-2,
    "witness": 0.1,
}

VERIFY_COLUMNS = [
    "seed", "n2", "tol_scale", "closed_l1", "closed_l2", "closed_l3", "matrix_l1", "matrix_l2",
    "matrix_l3", "fd_l1", "fd_l2", "fd_l3", "fd_rel_err", "tol_fd", "einstein",
    "tol_einstein", "spread_closed", "spread_fd", "weyl_small", "weyl_large", "tol_weyl",
    "passed",
]
SPECTRUM_COLUMNS = ["n2", "raw_l1", "raw_l2", "raw_l3", "l1", "l2", "l3", "gap"]
GL_COLUMNS = ["p", "q", "positive", "sect_lower", "sect_upper", "pinch_lower", "pinch_upper",
              "crosscheck"]


class UsageError(Exception):
    pass


def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("report.schema.json").read_text())


def _num(v: float) -> float:
    """Round to 12 significant digits so reports do not depend on evaluation order."""
    v = float(v)
    if not math.isfinite(v) or v == 0.0:
        return v
    return float(f"{v:.12g}")


def _nums(values) -> list:
    """Round a tuple to 12 significant digits of its largest entry."""
    values = [float(v) for v in values]
    top = max((abs(v) for v in values if math.isfinite(v)), default=0.0)
    if top == 0.0:
        return values
    digits = 11 - math.floor(math.log10(top))
    return [_num(round(v, digits)) + 0.0 for v in values]


def _check(value, tol, passed) -> dict:
    if isinstance(value, (list, tuple, np.ndarray)):
        value = _nums(value)
    else:
        value = _num(value)
    return {"value": value, "tol": tol, "pass": bool(passed)}


def _tag(name: str):
    return {"para": PARA, "quat": QUAT}[name]


def _point_seed(seed: int, k: int) -> int:
    return seed * 1_000_003 + k


def _evaluate(job):
    params, s, cal, ndirs = job
    try:
        return cl.evaluate_point(params, s, cal, ndirs=ndirs)
    except (GeometryError, SamplingError, np.linalg.LinAlgError) as exc:
        return f"{type(exc).__name__}: {exc}"


def _map(jobs, n_jobs):
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_evaluate, jobs))
    return [_evaluate(j) for j in jobs]


# -- verify -----------------------------------------------------------------------

def run_verify(p: int, q: int, points: int, seed: int, *, tag: str = "para", jobs: int = 1,
               tols: dict | None = None, ndirs: int = 6) -> tuple[int, dict]:
    tols = {**DEFAULT_TOLS, **(tols or {})}
    params = rd.ReductionParams(p, q, _tag(tag))
    cal = cl.calibrate(params, seed=seed)
    results = _map([(params, _point_seed(seed, k), cal, ndirs) for k in range(points)], jobs)
    evals = [r for r in results if isinstance(r, cl.PointEvaluation)]
    failures = [{"seed": _point_seed(seed, k), "error": r}
                for k, r in enumerate(results) if isinstance(r, str)]
    three_c = 3.0 * params.cbar_sign_convention * params.cbar

    records, halves = [], []
    for e in evals:
        scale = max(1.0, float(np.max(np.abs(e.closed))))
        small = {}
        for name, (wp, wm) in e.weyl.items():
            small[name] = (min(wp, wm), max(wp, wm), 0 if wp <= wm else 1)
        best = min(small, key=lambda k: small[k][0])
        halves.append(small[best][2])
        rec = {
            "seed": e.seed,
            "n2": _num(e.n2),
            "tolerance_scale": _num(scale),
            "closed_form": _check(e.closed, tols["closed"], True),
            "raw_formula": _check(e.raw, tols["closed"], True),
            "matrix_path": _check(e.matrix, tols["closed"],
                                  np.max(np.abs(np.subtract(e.matrix, e.closed))) <= tols["closed"] * scale),
            "trace": _check(sum(e.closed), tols["closed"],
                            abs(sum(e.closed) - three_c) <= tols["closed"] * scale),
            "fd": _check(e.fd, tols["fd"], e.fd_rel_err <= tols["fd"]),
            "fd_rel_err": _check(e.fd_rel_err, tols["fd"], e.fd_rel_err <= tols["fd"]),
            "einstein_residual": _check(e.einstein, tols["einstein"], e.einstein <= tols["einstein"] * scale),
            "osserman_spread_closed": _check(e.spread_closed, tols["closed"],
                                             e.spread_closed <= tols["closed"] * scale),
            "osserman_spread_fd": _check(e.spread_fd, tols["fd"], e.spread_fd <= tols["fd"] * scale),
            "weyl_small_half": _check(small[best][0], tols["weyl"], small[best][0] <= tols["weyl"] * scale),
            "weyl_other_half": _check(small[best][1], tols["weyl_other"], True),
            "weyl_orientation": best,
        }
        rec["passed"] = all(v["pass"] for v in rec.values() if isinstance(v, dict))
        records.append(rec)

    lam3 = [e.closed[2] for e in evals]
    variation = (max(lam3) - min(lam3)) if lam3 else 0.0
    if p != q:
        witness = _check(variation, tols["witness"], variation > tols["witness"])
    else:
        witness = _check(variation, tols["closed"], variation <= tols["closed"])
    other_max = max((r["weyl_other_half"]["value"] for r in records), default=0.0)
    verdicts = {
        "closed_form": all(r["matrix_path"]["pass"] and r["trace"]["pass"] for r in records),
        "oracle_spectrum": all(r["fd"]["pass"] for r in records),
        "einstein": all(r["einstein_residual"]["pass"] for r in records),
        "pointwise_osserman": all(r["osserman_spread_closed"]["pass"]
                                  and r["osserman_spread_fd"]["pass"] for r in records),
        "self_dual": all(r["weyl_small_half"]["pass"] for r in records)
        and len(set(halves)) <= 1 and other_max > tols["weyl_other"],
        "non_homogeneity" if p != q else "globally_osserman": witness["pass"],
    }
    failure_rate = len(failures) / points if points else 1.0
    if failure_rate > FAILURE_RATE_MAX or not evals:
        code = EXIT_SAMPLING
    elif all(verdicts.values()):
        code = EXIT_OK
    else:
        code = EXIT_FAIL
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "params": {"p": p, "q": q, "tag": tag, "cbar": params.cbar,
                   "cbar_sign_convention": params.cbar_sign_convention,
                   "points": points, "seed": seed, "step": cl.DEFAULT_H},
        "tolerances": tols,
        "calibration": {k: (_num(v) if isinstance(v, float) else v)
                        for k, v in cal.to_dict().items()},
        "points": records,
        "failures": failures,
        "failure_rate": _num(failure_rate),
        "lambda3_variation": witness,
        "verdicts": verdicts,
        "exit_code": code,
    }
    return code, report


def _verify_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VERIFY_COLUMNS)
    t = report["tolerances"]
    for r in report["points"]:
        w.writerow([r["seed"], r["n2"], r["tolerance_scale"], *r["closed_form"]["value"], *r["matrix_path"]["value"],
                    *r["fd"]["value"], r["fd_rel_err"]["value"], t["fd"],
                    r["einstein_residual"]["value"], t["einstein"],
                    r["osserman_spread_closed"]["value"], r["osserman_spread_fd"]["value"],
                    r["weyl_small_half"]["value"], r["weyl_other_half"]["value"], t["weyl"],
                    int(r["passed"])])
    return buf.getvalue()


# -- spectrum ---------------------------------------------------------------------

def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, num = text.split(":")
        grid = np.linspace(float(start), float(stop), int(num))
    except ValueError as exc:
        raise UsageError(f"grid must be start:stop:num, got {text!r}") from exc
    if np.any(grid == 0.0):
        raise UsageError("grid contains n^2 = 0 (singular set)")
    return grid


def run_spectrum(p: int, q: int, *, points: int = 20, seed: int = 0, grid: str | None = None,
                 tag: str = "para", tols: dict | None = None) -> tuple[int, dict]:
    tols = {**DEFAULT_TOLS, **(tols or {})}
    params = rd.ReductionParams(p, q, _tag(tag))
    if grid is not None:
        n2s = [float(v) for v in _parse_grid(grid)]
        source = "grid"
    else:
        n2s = [rd.sample_point_on_K(params, _point_seed(seed, k)).n2 for k in range(points)]
        source = "sampled"
    rows = []
    for n2 in n2s:
        res = rd.closed_form_spectrum(params, n2)
        rows.append({
            "n2": _num(n2),
            "raw": _nums(res.raw),
            "calibrated": _nums(res.calibrated),
            "gap": _num(abs(res.calibrated[2] - res.calibrated[0])),
        })
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "spectrum",
        "params": {"p": p, "q": q, "tag": tag, "cbar": params.cbar,
                   "cbar_sign_convention": params.cbar_sign_convention,
                   "points": len(n2s), "seed": seed, "source": source},
        "tolerances": tols,
        "rows": rows,
        "exit_code": EXIT_OK,
    }
    return EXIT_OK, report


def _spectrum_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPECTRUM_COLUMNS)
    for r in report["rows"]:
        w.writerow([r["n2"], *r["raw"], *r["calibrated"], r["gap"]])
    return buf.getvalue()


# -- gl ------------------------------------------------------------------------------

def coprime_pairs(max_value: int):
    return [(p, q) for p in range(1, max_value + 1) for q in range(1, max_value + 1)
            if math.gcd(p, q) == 1]


def gl_row(p: int, q: int, crosscheck: int = 0, seed: int = 0, tols: dict | None = None) -> dict:
    tols = {**DEFAULT_TOLS, **(tols or {})}
    gp = ob.GLParams(p, q)
    positive = ob.positivity_predicate(gp)
    lo, hi = ob.gl_sectional_bounds(gp)
    pinch = [_num(v) for v in ob.pinching_bounds(gp)] if positive else "n/a"
    row = {"p": p, "q": q, "positive": positive, "sectional_bounds": [_num(lo), _num(hi)],
           "pinching_bounds": pinch}
    if crosscheck:
        rep = ob.gl_numeric_crosscheck(gp, crosscheck, seed, tol_sectional=tols["fd"],
                                       tol_spectrum=tols["fd"])
        row["crosscheck"] = {
            "lambda_u_sq_range": _check(rep.lambda_u_range, 1e-9, rep.lambda_u_ok),
            "sectional_range": _check(rep.sectional_range, tols["fd"], rep.sectional_ok),
            "spectrum_rel_err": _check(rep.spectrum_rel_err, tols["fd"], rep.spectrum_ok),
            "spectrum_sign": rep.spectrum_sign,
            "passed": rep.passed,
        }
    return row


def run_gl(p: int | None, q: int | None, *, sweep: int | None = None, crosscheck: int = 0,
           seed: int = 0, tols: dict | None = None) -> tuple[int, dict]:
    tols = {**DEFAULT_TOLS, **(tols or {})}
    pairs = coprime_pairs(sweep) if sweep else [(p, q)]
    rows = [gl_row(a, b, crosscheck, seed, tols) for a, b in pairs]
    ok = all(r.get("crosscheck", {"passed": True})["passed"] for r in rows)
    code = EXIT_OK if ok else EXIT_FAIL
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "gl",
        "params": {"p": p, "q": q, "sweep": sweep, "points": crosscheck, "seed": seed},
        "tolerances": tols,
        "rows": rows,
        "exit_code": code,
    }
    return code, report


def _gl_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GL_COLUMNS)
    for r in report["rows"]:
        pinch = r["pinching_bounds"]
        pl, pu = ("n/a", "n/a") if pinch == "n/a" else pinch
        cc = r.get("crosscheck")
        w.writerow([r["p"], r["q"], str(r["positive"]).lower(), *r["sectional_bounds"], pl, pu,
                    "" if cc is None else str(cc["passed"]).lower()])
    return buf.getvalue()


# -- entry point -----------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paraosserman", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, points_default):
        sp.add_argument("--p", type=int)
        sp.add_argument("--q", type=int)
        sp.add_argument("--points", type=int, default=points_default)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=_positive_int, default=1)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        for name, value in DEFAULT_TOLS.items():
            sp.add_argument(f"--tol-{name.replace('_', '-')}", type=float, default=value,
                            dest=f"tol_{name}")

    v = sub.add_parser("verify", help="closed form versus oracle at sampled points")
    common(v, 20)
    v.add_argument("--tag", choices=("para", "quat"), default="para")
    v.add_argument("--directions", type=int, default=6)

    s = sub.add_parser("spectrum", help="closed-form Jacobi spectrum table")
    common(s, 20)
    s.add_argument("--tag", choices=("para", "quat"), default="para")
    s.add_argument("--grid", default=None, help="n^2 grid as start:stop:num")

    g = sub.add_parser("gl", help="positivity, curvature and pinching bounds")
    common(g, 0)
    g.add_argument("--sweep", type=int, default=None, help="all coprime pairs up to this value")
    return ap


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    return {"verify": _verify_csv, "spectrum": _spectrum_csv, "gl": _gl_csv}[report["command"]](report)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    tols = {k: getattr(args, f"tol_{k}") for k in DEFAULT_TOLS}
    try:
        if args.command == "gl":
            if args.sweep is None and (args.p is None or args.q is None):
                raise UsageError("gl needs --p and --q, or --sweep")
            if args.sweep is not None and args.sweep < 1:
                raise UsageError("--sweep must be positive")
            if args.sweep is None:
                ob.GLParams(args.p, args.q)
            code, report = run_gl(args.p, args.q, sweep=args.sweep, crosscheck=args.points,
                                  seed=args.seed, tols=tols)
        else:
            if args.p is None or args.q is None:
                raise UsageError(f"{args.command} needs --p and --q")
            rd.ReductionParams(args.p, args.q)
            if args.points < 1 and not (args.command == "spectrum" and args.grid):
                raise UsageError("--points must be positive")
            if args.command == "verify":
                code, report = run_verify(args.p, args.q, args.points, args.seed, tag=args.tag,
                                          jobs=args.jobs, tols=tols, ndirs=args.directions)
            else:
                code, report = run_spectrum(args.p, args.q, points=args.points, seed=args.seed,
                                            grid=args.grid, tag=args.tag, tols=tols)
    except (UsageError, rd.ReductionError, ob.OrbifoldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SamplingError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SAMPLING
    text = _render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
