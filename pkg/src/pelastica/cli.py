"""Command-line interface: ``pelastica <command> ...``.

Exit codes: 0 success, 2 usage, 3 domain error, 4 verification failure.
Reports are JSON on stdout (or ``--report FILE``); curves use the CSV
format of :func:`write_curve`.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import curvekit as ck, elverify as ev, geom, liyau as ly, pelliptic as pe, pinned as pn, spatial as sp

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_FAIL = 0, 2, 3, 4
DEFAULT_TOL = 1e-4
HEADER_KEYS = ("n", "p", "lambda", "ds", "closed", "family", "scale")


class CurveFileError(ValueError):
    """Malformed curve file."""


# ---------------------------------------------------------------------------
# curve files


def _fmt(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _parse(key: str, text: str):
    if text == "null":
        return None
    if key == "n":
        return int(text)
    if key == "closed":
        if text not in ("true", "false"):
            raise CurveFileError(f"closed must be true or false, got {text!r}")
        return text == "true"
    if key == "family":
        return text
    return float(text)


@dataclass(frozen=True)
class CurveFile:
    header: dict
    curve: ck.SampledCurve


def curve_header(c: ck.SampledCurve) -> dict:
    m = c.meta
    return {
        "n": c.dim,
        "p": m.get("p"),
        "lambda": m.get("lambda"),
        "ds": c.step,
        "closed": c.closed,
        "family": m.get("family", "unknown"),
        "scale": m.get("scale"),
    }


def format_curve(c: ck.SampledCurve, header: dict | None = None) -> str:
    header = curve_header(c) if header is None else header
    lines = ["# pelastica-curve 1"]
    lines += [f"# {k}={_fmt(header[k])}" for k in HEADER_KEYS]
    lines.append(",".join(["s"] + [f"x{i + 1}" for i in range(c.dim)]))
    for i, row in enumerate(c.points):
        lines.append(",".join([repr(float(i * c.step))] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def write_curve(path: str, c: ck.SampledCurve, header: dict | None = None) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_curve(c, header))


def parse_curve(text: str) -> CurveFile:
    header, rows, cols = {}, [], None
    for ln, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                if k in HEADER_KEYS:
                    header[k] = _parse(k, v)
            continue
        if cols is None:
            cols = line.split(",")
            if cols[0] != "s":
                raise CurveFileError("first column must be s")
            continue
        try:
            vals = [float(x) for x in line.split(",")]
        except ValueError as exc:
            raise CurveFileError(f"line {ln}: {exc}") from None
        if len(vals) != len(cols):
            raise CurveFileError(f"line {ln}: expected {len(cols)} fields")
        rows.append(vals)
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing or cols is None:
        raise CurveFileError(f"missing header fields: {missing or ['columns']}")
    data = np.array(rows, dtype=float)
    if data.shape[0] < 2:
        raise CurveFileError("need at least two rows")
    if data.shape[1] - 1 != header["n"]:
        raise CurveFileError("column count disagrees with n")
    s = data[:, 0]
    ds = header["ds"]
    if not ds or ds <= 0 or np.max(np.abs(np.diff(s) - ds)) > 1e-9 * max(ds, abs(s[-1])):
        raise CurveFileError("s must be uniformly spaced by ds")
    meta = {k: header[k] for k in ("p", "lambda", "family", "scale") if header[k] is not None}
    c = ck.SampledCurve(data[:, 1:], step=ds, closed=header["closed"], meta=meta)
    return CurveFile(header=header, curve=c)


def read_curve(path: str) -> CurveFile:
    with open(path, encoding="ascii") as fh:
        return parse_curve(fh.read())


def write_plot(path: str, c: ck.SampledCurve) -> None:
    prof = geom.curvature_profile(c)
    cols = ["s", "k", "tau"][: len(prof)]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*prof):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# reports


def null(reason: str) -> dict:
    return {"value": None, "reason": reason}


def _clean(x):
    """JSON-safe copy; non-finite floats become explicit nulls."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else null("non-finite value")
    return x


def report(command: str, params: dict, **sections) -> dict:
    out = {
        "command": command,
        "params": params,
        "constants": sections.pop("constants", {}),
        "residuals": sections.pop("residuals", {}),
        "energies": sections.pop("energies", {}),
        "verdicts": sections.pop("verdicts", {}),
        "seed": sections.pop("seed", None),
        "tool_version": __version__,
    }
    out.update(sections)
    return _clean(out)


def verdict(ok: bool, tol: float, value=None) -> dict:
    d = {"pass": bool(ok), "tol": tol}
    if value is not None:
        d["value"] = value
    return d


def constants_for(p: float) -> dict:
    out = {
        "q_star": pe.q_star(p),
        "varpi_star": pe.varpi_star(p),
        "phi_star": pe.phi_star(p),
        "embeddedness_threshold": ly.embeddedness_threshold(p),
        "regime": pe.regime(p),
    }
    if p > 2.0:
        lam = pe.flat_core_lambda(p)
        ps = sp.ParamSet(p, lam)
        out.update(K_p1=pe.K_p1(p), flat_core_lambda=lam, A_pl=ps.A_pl, T_pl=ps.T_pl, M_p=ps.M_p)
    else:
        why = f"K_p(1) diverges for p={p} <= 2 (no flat-core p-elasticae)"
        out.update(
            K_p1=null(why),
            flat_core_lambda=null(why),
            A_pl=null("defined with the flat-core multiplier, which needs p > 2"),
            T_pl=null(why),
            M_p=null("regularity index defined for p > 2"),
        )
    return out


# ---------------------------------------------------------------------------
# commands


def _tol(args) -> float:
    if args.tol is not None:
        return args.tol
    env = os.environ.get("PELASTICA_TOL")
    return float(env) if env else DEFAULT_TOL


def _emit(args, rep: dict) -> None:
    text = json.dumps(rep, indent=2, sort_keys=False, allow_nan=False)
    if getattr(args, "report", None):
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_constants(args) -> int:
    ps = list(args.p)
    for p in ps:
        pe._check_p(p)
    if args.jobs > 1 and len(ps) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            vals = list(ex.map(constants_for, ps))
    else:
        vals = [constants_for(p) for p in ps]
    consts = vals[0] if len(ps) == 1 else {repr(p): v for p, v in zip(ps, vals)}
    _emit(args, report("constants", {"p": ps if len(ps) > 1 else ps[0]}, constants=consts))
    return EXIT_OK


def _loop_dirs(dim: int, count: int) -> list:
    eye = np.eye(dim)
    return [eye[1 + j % (dim - 1)] for j in range(count)]


def build_curve(args) -> ck.SampledCurve:
    fam, ds = args.family, args.ds
    if fam == "line":
        return ck.line_segment(args.length or 1.0, dim=args.dim or 2, ds=ds)
    if fam == "flat-core-loop":
        return ck.flat_core_loop(args.p, dim=args.dim or 2, ds=ds)
    if fam == "flat-core":
        dim = args.dim or 3
        n = args.loops or 1
        segs = args.seg_lengths or [1.0] * (n + 1)
        spec = ck.FlatCoreSpec(args.p, _loop_dirs(dim, n), segs, shift=args.shift or 0.0, scale=args.scale or 1.0)
        return ck.flat_core_curve(spec, ds=ds)
    if fam == "wavelike":
        if args.q is None:
            raise pe.DomainError("wavelike curves need --q")
        return ck.wavelike_arc(args.p, args.q, (args.s0 or 0.0, args.s1), ds=ds)
    if fam == "figure-eight":
        return ck.figure_eight(args.p, N=2 * (args.folds or 1), ds=ds)
    if fam == "leaf":
        return ck.leaf(args.p, ds=ds)
    if fam == "m-leafed":
        if args.m is None:
            raise pe.DomainError("m-leafed curves need --m")
        return ly.leafed_witness(args.p, args.m, args.dim or 2, ds=ds)
    if fam == "spatial":
        ps = sp.ParamSet(args.p, args.lam, args.C)
        c, _, _ = sp.spatial_elastica(ps, args.w0, args.w0p, args.length or 1.0, step=ds or sp.DEFAULT_STEP)
        return c
    raise pe.DomainError(f"unknown family {fam}")


def cmd_curve(args) -> int:
    c = build_curve(args)
    write_curve(args.out, c)
    if args.emit_plot:
        write_plot(args.emit_plot, c)
    rep = report(
        "curve",
        {"family": args.family, "p": args.p, "ds": c.step, "out": args.out},
        energies={"length": c.length, **({"normalized": geom.bending_energy(c, args.p).normalized} if args.p else {})},
        curve=curve_header(c),
    )
    _emit(args, rep)
    return EXIT_OK


def cmd_verify(args) -> int:
    tol = _tol(args)
    cf = read_curve(args.input)
    c = cf.curve
    p = args.p if args.p is not None else cf.header["p"]
    if p is None:
        raise pe.DomainError("p is neither given nor recorded in the file")
    battery = ev.make_battery(c, pinned=args.pinned)
    residuals, notes = {}, {}
    lam_arg = args.lam
    if lam_arg is None:
        lam_arg = "auto" if cf.header["lambda"] is None else repr(cf.header["lambda"])
    if lam_arg == "auto":
        try:
            lam = ev.estimate_lambda(c, p, battery)
            residuals["lambda"] = lam
            residuals["lambda_source"] = "estimated"
        except ev.CannotEstimateError as exc:
            lam = 0.0
            residuals["lambda"] = null(str(exc))
            residuals["lambda_source"] = "undetermined; residual evaluated at 0"
    else:
        lam = float(lam_arg)
        residuals["lambda"] = lam
        residuals["lambda_source"] = "given"
    res = ev.weak_el_residual(c, p, lam=lam, battery=battery, tol=tol)
    residuals["weak"] = dict(zip(res.labels, res.weak.tolist()))
    residuals["weak_max"] = res.weak_max
    residuals["strong"] = null("strong residuals need curvature and torsion profiles with k > 0; see the spatial command")
    verdicts = {"weak_el": verdict(res.passed, tol, res.weak_max)}
    ok = res.passed
    if args.pinned:
        k0, k1 = ev.endpoint_curvatures(c)
        nb = max(k0, k1) <= args.bc_tol
        verdicts["natural_bc"] = verdict(nb, args.bc_tol, max(k0, k1))
        ok = ok and nb
    e = geom.bending_energy(c, p)
    rep = report(
        "verify",
        {"input": args.input, "p": p, "lambda": lam_arg, "pinned": args.pinned},
        residuals=residuals,
        energies={"length": e.length, "bending": e.bending, "normalized": e.normalized},
        verdicts=verdicts,
    )
    _emit(args, rep)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_liyau(args) -> int:
    tol = args.tol if args.tol is not None else ly.EQUALITY_RTOL
    c = read_curve(args.input).curve
    r = ly.check_liyau(c, args.p, tol=tol)
    rep = report(
        "liyau",
        {"input": args.input, "p": args.p},
        constants={"varpi_star": pe.varpi_star(args.p), "bound": r.bound},
        energies={"normalized": r.measured, "gap": r.gap, "relative_gap": r.gap / r.bound},
        verdicts={
            "liyau": verdict(r.satisfied, tol),
            "leaf_certified": verdict(r.leaf_certified, ly.EQUALITY_RTOL),
        },
        multiplicity=r.m,
        joint=None if r.joint is None else r.joint.tolist(),
        notes=r.notes,
    )
    _emit(args, rep)
    return EXIT_OK if r.satisfied else EXIT_FAIL


def cmd_pinned(args) -> int:
    tol = _tol(args)
    dim = args.dim
    P1 = np.zeros(dim)
    P1[0] = args.ratio * args.length
    prob = pn.PinnedProblem(args.p, np.zeros(dim), P1, args.length)
    c = pn.pinned_minimizer(prob, ds=args.ds)
    if args.out:
        write_curve(args.out, c)
    res = ev.weak_el_residual(c, args.p, battery=ev.make_battery(c, pinned=True), tol=tol)
    k0, k1 = ev.endpoint_curvatures(c)
    e = geom.bending_energy(c, args.p)
    rep = report(
        "pinned",
        {"p": args.p, "ratio": args.ratio, "length": args.length, "dim": dim},
        constants={"q_hat": c.meta["q"], "q_star": pe.q_star(args.p)},
        residuals={"weak_max": res.weak_max, "lambda": res.lam, "endpoint_curvature": [k0, k1]},
        energies={"bending": e.bending, "normalized": e.normalized},
        verdicts={"weak_el": verdict(res.passed, tol, res.weak_max), "natural_bc": verdict(max(k0, k1) <= 1e-6, 1e-6)},
        flat_core_feasible=pn.flat_core_pinned_feasible(prob),
    )
    _emit(args, rep)
    return EXIT_OK if res.passed else EXIT_FAIL


def _pm_value(pair):
    j, mp = pair
    return pe.phi_star_inv(j * math.pi / mp)


def cmd_pm(args) -> int:
    pairs = pe.pm_angles(args.m)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            vals = list(ex.map(_pm_value, pairs))
    else:
        vals = [_pm_value(x) for x in pairs]
    order = np.argsort(vals)
    rep = report(
        "pm",
        {"m": args.m},
        constants={
            "values": [vals[i] for i in order],
            "angles": [f"{pairs[i][0]}pi/{pairs[i][1]}" for i in order],
            "count": len(vals),
            "index_pairs": len(pe.pm_index_pairs(args.m)),
            "pm_star": min(vals),
        },
    )
    _emit(args, rep)
    return EXIT_OK


def cmd_spatial(args) -> int:
    tol = _tol(args)
    ps = sp.ParamSet(args.p, args.lam, args.C)
    c, r, prof = sp.spatial_elastica(ps, args.w0, args.w0p, args.length, step=args.step, tol=tol)
    if args.out:
        write_curve(args.out, c)
    if args.emit_plot:
        write_plot(args.emit_plot, c)
    rep = report(
        "spatial",
        {"p": args.p, "lambda": args.lam, "C": args.C, "w0": args.w0, "w0p": args.w0p, "length": args.length, "step": args.step},
        constants={"A": float(prof.A[0]), "A_pl": ps.A_pl if args.lam > 0 else null("needs lambda > 0"), "M_p": ps.M_p if ps.M_p else null("defined for p > 2")},
        residuals={"weak_max": r.residual.weak_max, "drift_per_length": r.drift_per_length},
        verdicts={
            "weak_el": verdict(r.residual.passed, tol, r.residual.weak_max),
            "conservation": verdict(r.drift_per_length <= 1e-8, 1e-8, r.drift_per_length),
            "affine_dimension_3": verdict(r.affine_dim == 3, 1e-9, r.affine_dim),
        },
        min_k=r.min_k,
        min_abs_tau=r.min_abs_tau,
    )
    _emit(args, rep)
    return EXIT_OK if r.passed else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pelastica", description="p-elliptic functions and p-elasticae")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, tol=True):
        p.add_argument("--report", help="write the JSON report here instead of stdout")
        if tol:
            p.add_argument("--tol", type=float, default=None, help="verdict tolerance (default $PELASTICA_TOL or 1e-4)")

    c = sub.add_parser("constants", help="constants for one or more exponents")
    c.add_argument("--p", type=float, nargs="+", required=True)
    c.add_argument("--jobs", type=int, default=1)
    common(c, tol=False)
    c.set_defaults(func=cmd_constants)

    c = sub.add_parser("curve", help="write a sampled curve")
    c.add_argument("family", choices=["line", "flat-core-loop", "flat-core", "wavelike", "figure-eight", "leaf", "m-leafed", "spatial"])
    c.add_argument("--p", type=float)
    c.add_argument("--q", type=float)
    c.add_argument("--s0", type=float)
    c.add_argument("--s1", type=float)
    c.add_argument("--folds", type=int, help="figure-eight folds (closed, covered this many times)")
    c.add_argument("--m", type=int)
    c.add_argument("--dim", type=int)
    c.add_argument("--length", type=float)
    c.add_argument("--loops", type=int)
    c.add_argument("--seg-lengths", type=float, nargs="+")
    c.add_argument("--shift", type=float)
    c.add_argument("--scale", type=float)
    c.add_argument("--lambda", dest="lam", type=float)
    c.add_argument("--C", type=float, default=0.0)
    c.add_argument("--w0", type=float)
    c.add_argument("--w0p", type=float, default=0.0)
    c.add_argument("--ds", type=float)
    c.add_argument("--out", required=True)
    c.add_argument("--emit-plot", help="also write s,k[,tau] profiles")
    common(c, tol=False)
    c.set_defaults(func=cmd_curve)

    c = sub.add_parser("verify", help="Euler-Lagrange residuals of a curve file")
    c.add_argument("--input", required=True)
    c.add_argument("--p", type=float)
    c.add_argument("--lambda", dest="lam", help="multiplier or 'auto'")
    c.add_argument("--pinned", action="store_true", help="free-slope battery and natural boundary check")
    c.add_argument("--bc-tol", type=float, default=1e-6)
    common(c)
    c.set_defaults(func=cmd_verify)

    c = sub.add_parser("liyau", help="Li-Yau check of a closed curve file")
    c.add_argument("--input", required=True)
    c.add_argument("--p", type=float, required=True)
    common(c)
    c.set_defaults(func=cmd_liyau)

    c = sub.add_parser("pinned", help="pinned minimiser for a chord ratio")
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--ratio", type=float, required=True)
    c.add_argument("--length", type=float, default=1.0)
    c.add_argument("--dim", type=int, default=2)
    c.add_argument("--ds", type=float)
    c.add_argument("--out")
    common(c)
    c.set_defaults(func=cmd_pinned)

    c = sub.add_parser("pm", help="exponents admitting planar closed m-leafed p-elasticae")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--jobs", type=int, default=1)
    common(c, tol=False)
    c.set_defaults(func=cmd_pm)

    c = sub.add_parser("spatial", help="integrate a spatial p-elastica")
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--lambda", dest="lam", type=float, required=True)
    c.add_argument("--C", type=float, required=True)
    c.add_argument("--w0", type=float, required=True)
    c.add_argument("--w0p", type=float, default=0.0)
    c.add_argument("--length", type=float, default=5.0)
    c.add_argument("--step", type=float, default=sp.DEFAULT_STEP)
    c.add_argument("--out")
    c.add_argument("--emit-plot")
    common(c)
    c.set_defaults(func=cmd_spatial)
    return ap


NEEDS_P = {"flat-core-loop", "flat-core", "wavelike", "figure-eight", "leaf", "m-leafed", "spatial"}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "curve":
        if args.family in NEEDS_P and args.p is None:
            ap.error(f"curve {args.family} needs --p")
        if args.family == "spatial" and (args.lam is None or args.w0 is None):
            ap.error("curve spatial needs --lambda and --w0")
    try:
        return args.func(args)
    except (pe.DomainError, ck.CurveError, CurveFileError, ev.BlowUpError) as exc:
        print(f"pelastica: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
