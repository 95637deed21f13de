"""Command-line front end: ``crgeo <command> --model NAME [options]``.

Reports are written as JSON (schema ``crgeo-report/1``) to stdout or
``--output``; a short human-readable summary goes to stderr.  Exit codes:
0 all checks pass, 1 a check failed, 2 usage error, 3 the model could not be
loaded or validated.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, curvature
from .exprjet import ExprError, parse_expr
from .models import BUILTINS, ModelDecl, ModelError, resolve
from .report import Report, jsonable
from .riemann import adapted_metric_report, connection_form_identities, critical_set, isoparametric_check, level_surface_report
from .soliton import check_cr_soliton, check_pseudo_gradient, conserved_quantities, harnack_residual
from .structure import halton, validate

SCHEMA = "crgeo-report/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_MODEL = 0, 1, 2, 3
ARRAY_LIMIT = 16
DEFAULT_CONFORMAL = "0.1*x*y + 0.05*t^2"
COMMANDS = ("validate", "curvature", "check-soliton", "harnack", "conformal", "adapted-metric", "level-sets", "critical-set", "all")


class UsageError(Exception):
    pass


# argument parsing -------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _point(text: str) -> list[float]:
    vals = _floats(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"a point needs 3 coordinates, got {len(vals)}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--model", choices=BUILTINS, help="built-in model name")
    src.add_argument("--model-file", help="model declaration file")
    common.add_argument("--seed", type=int, default=7, help="Halton scrambling seed (default 7)")
    common.add_argument("--samples", type=int, default=256, help="number of sample points (default 256)")
    common.add_argument("--order", type=int, default=5, help="jet order for geometry (default 5)")
    common.add_argument("--tolerance", type=float, default=None, help="override the default pass tolerance")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", default="json", help="JSON report (default)")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text", help="plain-text summary")
    common.add_argument("--output", help="write the report to this file instead of stdout")

    parser = argparse.ArgumentParser(
        prog="crgeo",
        description="Pointwise verification of pseudohermitian geometry and CR Yamabe soliton identities.",
        epilog="Model parameters are passed as --<name> <value>, for example --mu 1.",
    )
    parser.add_argument("--version", action="version", version=f"crgeo {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    sub.add_parser("validate", parents=[common], help="check the contact form and frame normalizations")
    p = sub.add_parser("curvature", parents=[common], help="connection, torsion, Webster curvature, Cartan tensor and Q")
    p.add_argument("--point", type=_point, help="evaluate at a single point x,y,t")
    sub.add_parser("check-soliton", parents=[common], help="soliton equations for the model's potential")
    sub.add_parser("harnack", parents=[common], help="Harnack quantity for a contact-field soliton")
    p = sub.add_parser("conformal", parents=[common], help="transformation law of R1 under theta -> exp(2g) theta")
    p.add_argument("--g", default=DEFAULT_CONFORMAL, help=f"conformal factor expression (default {DEFAULT_CONFORMAL!r})")
    p = sub.add_parser("adapted-metric", parents=[common], help="Ricci curvature of the adapted metrics")
    p.add_argument("--lambda", dest="lams", type=_floats, default=[0.5, 1.0, 2.0], help="comma-separated lambda values")
    p = sub.add_parser("level-sets", parents=[common], help="second fundamental form and curvature of level surfaces")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--levels", type=_floats, default=[0.5, 1.0, 2.0])
    p.add_argument("--level-samples", type=int, default=64)
    p = sub.add_parser("critical-set", parents=[common], help="critical set of the potential and diffeomorphism type")
    p.add_argument("--nodes", type=int, default=65, help="grid nodes per axis (default 65)")
    p.add_argument("--eps", type=float, default=1e-3, help="critical threshold on |grad phi| (default 1e-3)")
    p = sub.add_parser("all", parents=[common], help="run every applicable check")
    p.add_argument("--lambda", dest="lams", type=_floats, default=[0.5, 1.0, 2.0])
    p.add_argument("--levels", type=_floats, default=[0.5, 1.0, 2.0])
    p.add_argument("--level-samples", type=int, default=64)
    p.add_argument("--g", default=DEFAULT_CONFORMAL)
    p.add_argument("--nodes", type=int, default=65)
    p.add_argument("--eps", type=float, default=1e-3)
    return parser


def parse_params(extra: list[str]) -> dict[str, float]:
    """Turn ``--name value`` pairs left over by argparse into model parameters."""
    params: dict[str, float] = {}
    i = 0
    while i < len(extra):
        key = extra[i]
        if not key.startswith("--") or len(key) < 3:
            raise UsageError(f"unexpected argument {key!r}")
        name, _, inline = key[2:].partition("=")
        if inline:
            value = inline
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"parameter --{name} needs a value")
            value = extra[i + 1]
            i += 2
        try:
            params[name] = float(value)
        except ValueError:
            raise UsageError(f"parameter --{name} expects a number, got {value!r}") from None
        if not math.isfinite(params[name]):
            raise UsageError(f"parameter --{name} must be finite")
    return params


# running -------------------------------------------------------------------------


def _samples(model: ModelDecl, args) -> np.ndarray:
    return halton(model.chart, args.samples, args.seed).points


def _tol(args, default: float) -> float:
    return args.tolerance if args.tolerance is not None else default


def _need_potential(model: ModelDecl, kind: str | None = None):
    if model.potential is None:
        raise UsageError(f"model {model.name} declares no potential")
    if kind and model.kind != kind:
        raise UsageError(f"this command needs a {kind} potential; model {model.name} has a {model.kind} potential")
    return model.candidate()


def run_validate(model, args) -> list[Report]:
    return [validate(model.structure, _samples(model, args), _tol(args, 1e-9))]


def run_curvature(model, args) -> list[Report]:
    pts = np.array([args.point]) if getattr(args, "point", None) else _samples(model, args)
    return [curvature.curvature_report(model.structure, pts, args.order, _tol(args, 1e-9))]


def run_soliton(model, args) -> list[Report]:
    c = _need_potential(model)
    pts = _samples(model, args)
    tol = _tol(args, 1e-7)
    if c.kind == "contact":
        return [check_cr_soliton(c, pts, args.order, tol)]
    return [check_pseudo_gradient(c, pts, args.order, tol), conserved_quantities(c, pts, args.order, tol)]


def run_harnack(model, args) -> list[Report]:
    c = _need_potential(model, "contact")
    return [harnack_residual(c, _samples(model, args), args.order, _tol(args, 1e-7))]


def run_conformal(model, args) -> list[Report]:
    try:
        g = parse_expr(args.g, model.chart.coords, tuple(model.params))
    except ExprError as exc:
        raise UsageError(f"--g: {exc}") from None
    _, rep = curvature.conformal_change(model.structure, g, _samples(model, args), order=args.order, tol=_tol(args, 1e-6))
    rep.values["g"] = args.g
    return [rep]


def run_adapted(model, args) -> list[Report]:
    pts = _samples(model, args)
    out = []
    for lam in args.lams:
        if lam <= 0:
            raise UsageError(f"lambda must be positive, got {lam:g}")
        out.append(adapted_metric_report(model.structure, lam, pts, args.order, args.seed))
        out.append(connection_form_identities(model.structure, lam, pts, args.order))
    return out


def run_levels(model, args) -> list[Report]:
    c = _need_potential(model, "gradient")
    lam = getattr(args, "lam", None) or 1.0
    if lam <= 0:
        raise UsageError(f"lambda must be positive, got {lam:g}")
    return [
        level_surface_report(c, lam, args.levels, args.level_samples, args.seed, args.order),
        isoparametric_check(c, lam, args.levels, args.level_samples, args.seed, args.order),
    ]


def run_critical(model, args) -> list[Report]:
    c = _need_potential(model, "gradient")
    res = critical_set(c, args.nodes, args.eps, dict(model.hypotheses), args.seed)
    rep = Report("critical set")
    rep.values.update(res.to_dict())
    rep.flags.update(res.flags)
    return [rep]


def run_all(model, args) -> list[Report]:
    reports = run_validate(model, args) + run_curvature(model, args) + run_conformal(model, args) + run_adapted(model, args)
    if model.potential is not None:
        reports += run_soliton(model, args)
        if model.kind == "contact":
            reports += run_harnack(model, args)
        else:
            reports += run_levels(model, args) + run_critical(model, args)
    return reports


RUNNERS = {
    "validate": run_validate,
    "curvature": run_curvature,
    "check-soliton": run_soliton,
    "harnack": run_harnack,
    "conformal": run_conformal,
    "adapted-metric": run_adapted,
    "level-sets": run_levels,
    "critical-set": run_critical,
    "all": run_all,
}


# output ------------------------------------------------------------------------


def _compact(obj):
    """Summarize long arrays by min/max/mean so reports stay readable."""
    if isinstance(obj, dict):
        return {k: _compact(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_compact(v) for v in obj]
    if isinstance(obj, np.ndarray) and obj.size > ARRAY_LIMIT and obj.dtype.kind in "fc":
        if obj.dtype.kind == "c":
            return {"re": _compact(obj.real), "im": _compact(obj.imag)}
        return {"min": float(obj.min()), "max": float(obj.max()), "mean": float(obj.mean()), "count": int(obj.size)}
    return obj


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def document(command: str, model: ModelDecl, args, reports: list[Report]) -> dict:
    docs = []
    for r in reports:
        d = r.to_dict()
        d["values"] = jsonable(_compact(r.values))
        for chk in d["checks"]:
            chk["seed"] = args.seed
        docs.append(d)
    return _finite(
        {
            "schema": SCHEMA,
            "tool": {"name": "crgeo", "version": __version__},
            "command": command,
            "model": jsonable(model.identity()),
            "config": {"seed": args.seed, "samples": args.samples, "order": args.order, "tolerance": args.tolerance},
            "reports": docs,
            "pass": all(r.passed for r in reports),
        }
    )


def render_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_text(reports: list[Report]) -> str:
    parts = []
    for r in reports:
        parts.append(r.summary())
        table = r.values.get("table")
        if table:
            keys = [k for k in table[0] if not isinstance(table[0][k], dict)]
            parts.append("  " + "  ".join(f"{k:>16}" for k in keys))
            for row in table:
                parts.append("  " + "  ".join(f"{row[k]:>16.9g}" if isinstance(row[k], float) else f"{row[k]:>16}" for k in keys))
        if "diffeo" in r.values:
            dr = r.values["diffeo"]
            parts.append(f"  case {dr['case']}: {dr['concluded']} ({dr['caveat']})")
        for k, v in r.flags.items():
            parts.append(f"  flag {k}: {v}")
    return "\n".join(parts) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        params = parse_params(extra)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    except UsageError as exc:
        print(f"crgeo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.model and not args.model_file:
        print("crgeo: error: one of --model or --model-file is required", file=sys.stderr)
        return EXIT_USAGE
    if args.samples < 1 or args.order < 2:
        print("crgeo: error: --samples must be positive and --order at least 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        model = resolve(args.model, args.model_file, params)
    except (ModelError, ExprError, ValueError) as exc:
        print(f"crgeo: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    try:
        reports = RUNNERS[args.command](model, args)
    except UsageError as exc:
        print(f"crgeo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = document(args.command, model, args, reports)
    out = render_json(doc) if args.fmt == "json" else render_text(reports)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    for r in reports:
        print(r.summary().splitlines()[0], file=sys.stderr)
    return EXIT_OK if doc["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
