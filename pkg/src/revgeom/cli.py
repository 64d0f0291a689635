"""Command-line interface.

Every sub-command writes one structured-text (JSON) document, or delimited
text with ``--format csv``, carrying provenance: schema version, toolkit
version, surface definition, tolerances and seed.  Exit status is 0 when all
requested checks pass, 1 when a check fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._jit import backend_name, set_num_threads
from .errors import (
    HypothesisViolated,
    InvalidParameter,
    NoComparisonTriangle,
    RevGeomError,
    ValidationFailure,
)

SCHEMA = "revgeom.cli/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text, n, what):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    if len(vals) != n:
        raise UsageError(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--surface", default="ellipsoid:1,2",
                        help="builtin 'sphere:H', 'ellipsoid:a,b[,grid]', 'exotic' or a JSON file")
    common.add_argument("--rescale", action="store_true", help="scale so that 2a = pi")
    common.add_argument("--tol", type=float, default=1e-10, help="integration tolerance")
    common.add_argument("--samples", type=int, default=100)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="revgeom", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"revgeom {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sub.add_parser("surface", parents=[common], help="describe and validate a surface")

    g = sub.add_parser("geodesic", parents=[common], help="integrate a geodesic")
    g.add_argument("--start", required=True, help="r,theta,phi_degrees")
    g.add_argument("--length", type=float, required=True)
    g.add_argument("--jacobi", action="store_true", help="also report the first conjugate time")

    d = sub.add_parser("distance", parents=[common], help="distance between two points")
    d.add_argument("--from", dest="p_from", required=True, help="r,theta")
    d.add_argument("--to", dest="p_to", required=True, help="r,theta")
    d.add_argument("--method", choices=("shooting", "quadrature", "both"), default="shooting")

    c = sub.add_parser("cutlocus", parents=[common], help="cut locus of a point")
    c.add_argument("--point", required=True, help="r,theta")
    c.add_argument("--grid", type=int, default=33)

    t = sub.add_parser("triangle", parents=[common], help="comparison triangle from side lengths")
    t.add_argument("--sides", required=True, help="d_px,d_py,d_xy")

    k = sub.add_parser("compare", parents=[common], help="angle comparison against a test space")
    k.add_argument("--test", default="self",
                   help="'sphere:K', 'self' or 'self:n' (n-dimensional model of the surface)")

    sub.add_parser("verify", parents=[common], help="run the verification suite (a)-(e)")

    r = sub.add_parser("rigidity", parents=[common], help="isometry check on the n-model")
    r.add_argument("--n", type=int, default=3)
    r.add_argument("--isometry", choices=("identity", "reflection", "rotation", "random"),
                   default="rotation")
    return p


def _provenance(args, model) -> dict:
    from .profiles import surface_to_dict

    return {
        "schema": SCHEMA,
        "toolkit_version": __version__,
        "command": args.command,
        "surface": surface_to_dict(model) if model is not None else args.surface,
        "tolerance": args.tol,
        "samples": args.samples,
        "seed": args.seed,
        "backend": backend_name(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _load(args):
    from .profiles import load_surface, rescale_model

    try:
        model = load_surface(args.surface)
    except (InvalidParameter, ValueError, KeyError, OSError) as exc:
        raise UsageError(f"--surface {args.surface!r}: {exc}")
    return rescale_model(model) if args.rescale else model


def _point(model, text, what):
    from .geodesics import SurfacePoint

    r, th = _floats(text, 2, what)
    if not (0.0 <= r <= model.length * (1 + 1e-12)):
        raise UsageError(f"{what}: r={r} outside [0, {model.length}]")
    return SurfacePoint(min(r, model.length), th)


def _csv(rows, header):
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(f"{v:.15g}" if isinstance(v, float) else str(v) for v in row))
    return "\n".join(out) + "\n"


def cmd_surface(args, model):
    from .profiles import validate_model

    rep = validate_model(model, strict=False)
    body = {"length": model.length, "scale": model.scale, "monotone_G": model.monotone_G,
            "trend": rep.trend, "report": rep.to_dict()}
    ok = True
    try:
        validate_model(model, strict=True)
    except ValidationFailure as exc:
        ok = False
        body["failure"] = {"condition": exc.condition, "location": exc.location}
    csv = _csv([(float(r), float(g)) for r, g in rep.samples], ["r", "G"])
    return ok, body, csv


def cmd_geodesic(args, model):
    from .geodesics import GeodesicState, clairaut_drift, first_conjugate_time, integrate_geodesic

    r, th, deg = _floats(args.start, 3, "--start")
    if args.length <= 0:
        raise UsageError("--length must be positive")
    start = GeodesicState.at(model, r, th, math.radians(deg))
    path = integrate_geodesic(model, start, args.length, args.tol)
    end = path.endpoint
    body = {"start": [start.point.r, start.point.theta, start.phi], "nu": path.nu,
            "length": path.length, "endpoint": [end.r, end.theta],
            "pole_crossings": list(path.pole_crossings), "samples": int(path.t.size),
            "clairaut_drift": clairaut_drift(path, model)}
    if args.jacobi:
        body["first_conjugate_time"] = first_conjugate_time(model, path, args.tol)
    return True, body, path.to_delimited()


def cmd_distance(args, model):
    from .distances import distance

    x, y = _point(model, args.p_from, "--from"), _point(model, args.p_to, "--to")
    res = distance(model, x, y, args.tol, method=args.method)
    body = res.to_dict()
    csv = _csv([(res.distance, res.multiplicity, int(res.saturated))],
               ["distance", "multiplicity", "saturated"])
    return True, body, csv


def cmd_cutlocus(args, model):
    from .distances import cut_locus

    x = _point(model, args.point, "--point")
    res = cut_locus(model, x, grid=args.grid)
    body = res.to_dict()
    ok = res.max_theta_deviation <= 1e-3
    if not ok:
        body["failure"] = "cut locus on the opposite half meridian"
    return ok, body, res.to_delimited()


def cmd_triangle(args, model):
    from .comparison import TriangleSides, comparison_triangle, perimeter_check

    a, b, c = _floats(args.sides, 3, "--sides")
    try:
        sides = TriangleSides(a, b, c)
    except InvalidParameter as exc:
        raise UsageError(str(exc))
    try:
        cfg = comparison_triangle(model, sides, args.tol)
    except NoComparisonTriangle as exc:
        return False, {"failure": "no comparison triangle", "detail": str(exc),
                       "feasible_range": exc.feasible_range}, ""
    body = {"delta_theta": cfg.delta_theta,
            "sides": [sides.d_px, sides.d_py, sides.d_xy],
            "realized": [cfg.realized.d_px, cfg.realized.d_py, cfg.realized.d_xy],
            "angles": {"p": cfg.angles[0], "x": cfg.angles[1], "y": cfg.angles[2]},
            "side_defect": cfg.side_defect,
            "perimeter_margin": perimeter_check(model, cfg)}
    csv = _csv([(cfg.delta_theta, *cfg.angles)], ["delta_theta", "angle_p", "angle_x", "angle_y"])
    return True, body, csv


def _test_space(args, model):
    from .comparison import ModelTestSpace, RoundSphere

    spec = args.test
    if spec.startswith("sphere:"):
        try:
            return RoundSphere(float(spec.split(":", 1)[1]))
        except ValueError:
            raise UsageError(f"--test {spec!r}: bad curvature")
    if spec == "self" or spec.startswith("self:"):
        n = int(spec.split(":", 1)[1]) if ":" in spec else 2
        return ModelTestSpace(model, n, args.tol)
    raise UsageError(f"--test {spec!r}: expected 'sphere:K' or 'self[:n]'")


def cmd_compare(args, model):
    from .comparison import compare

    ts = _test_space(args, model)
    try:
        rep = compare(ts, model, args.samples, args.seed)
    except HypothesisViolated as exc:
        return False, {"failure": "curvature domination hypothesis", "detail": str(exc)}, ""
    body = rep.to_dict()
    if not rep.passed:
        body["failure"] = "angle comparison"
    rows = [(*r.sides, *r.margins) for r in rep.records]
    return rep.passed, body, _csv(rows, ["d_px", "d_py", "d_xy", "margin_p", "margin_x",
                                         "margin_y"])


def cmd_verify(args, model):
    from .comparison import verify_lemma_suite

    if abs(model.length - math.pi) > 1e-9:
        raise UsageError("verify needs a model with 2a = pi (pass --rescale)")
    rep = verify_lemma_suite(model, args.samples, args.seed)
    body = rep.to_dict()
    if not rep.passed:
        body["failure"] = rep.failed_checks
    rows = [(k, c["name"], int(c["passed"])) for k, c in sorted(rep.checks.items())]
    return rep.passed, body, _csv(rows, ["check", "name", "passed"])


def cmd_rigidity(args, model):
    from .comparison import rigidity_isometry_check

    if args.n < 2:
        raise UsageError("--n must be >= 2")
    rep = rigidity_isometry_check(model, args.n, args.samples, args.seed, args.isometry)
    if not rep["passed"]:
        rep["failure"] = rep["name"]
    return rep["passed"], rep, _csv([(rep["n"], rep["pairs"], rep["max_defect"])],
                                    ["n", "pairs", "max_defect"])


COMMANDS = {
    "surface": cmd_surface,
    "geodesic": cmd_geodesic,
    "distance": cmd_distance,
    "cutlocus": cmd_cutlocus,
    "triangle": cmd_triangle,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "rigidity": cmd_rigidity,
}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _emit(text, out):
    if out in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def run(argv=None) -> int:
    threads = os.environ.get("REVGEOM_THREADS")
    if threads:
        try:
            set_num_threads(int(threads))
        except (ValueError, RuntimeError):
            pass
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a sub-command is required")
        if not (0 < args.tol < 1e-2):
            raise UsageError("--tol must lie in (0, 1e-2)")
        if args.samples < 1:
            raise UsageError("--samples must be >= 1")
        model = _load(args)
        ok, body, csv = COMMANDS[args.command](args, model)
    except UsageError as exc:
        sys.stderr.write(f"revgeom: usage error: {exc}\n")
        return EXIT_USAGE
    except RevGeomError as exc:
        sys.stderr.write(f"revgeom: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    if args.format == "csv":
        _emit(csv, args.out)
    else:
        doc = {"provenance": _provenance(args, model), "passed": bool(ok), "result": body}
        _emit(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n", args.out)
    if not ok:
        failed = body.get("failure", "check") if isinstance(body, dict) else "check"
        sys.stderr.write(f"revgeom: check failed: {failed}\n")
    return EXIT_OK if ok else EXIT_FAIL


def main():  # pragma: no cover - console entry point
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
