"""Command-line interface.

Commands::

    approximate <job.json> -o <report.json>
    verify <a.json> <b.json> --s <real>
    dimension <set.json>
    profile <a.json> <b.json> -o <out.csv>
    loja <f> <g> <domain.json>
    mesh <set.json> --radius <r> -o <out.csv>

Exit codes: 0 success, 1 input error, 2 verification failure,
3 exponent or projection search exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import approximator, metric, presentation
from .config import SamplerConfig
from .errors import (
    AlgApproxError,
    EmptyAtRadius,
    ExponentSearchExhausted,
    HypothesisViolated,
    InsufficientData,
    ProjectionSearchExhausted,
    SchemaError,
)
from .polycore import parse
from .sampling import sample_points
from .schemas import JOB_SCHEMA, REPORT_SCHEMA, SET_SCHEMA, validate

EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_EXHAUSTED = 0, 1, 2, 3
MESH_LEVELS = 32

log = logging.getLogger("algapprox")


class InputError(Exception):
    """Unreadable file or invalid argument (exit code 1)."""


# ---------------------------------------------------------------------------
# documents

def read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def dumps(document: dict) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, no NaN."""
    return json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_set(path: str, cfg: SamplerConfig | None = None):
    doc = read_json(path)
    validate(doc, SET_SCHEMA, f"set document {path}")
    return presentation.load(doc, cfg=cfg), doc


def make_config(options: dict | None, args: argparse.Namespace) -> SamplerConfig:
    """Document options first, then command-line overrides."""
    data = dict(options or {})
    if args.seed is not None:
        data["seed"] = args.seed
    if args.samples is not None:
        data["samples_per_radius"] = args.samples
    if args.radii is not None:
        data["radii"] = args.radii
    if args.max_exponent is not None:
        data["max_exponent"] = args.max_exponent
    try:
        return SamplerConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad options: {exc}") from exc


def _radii(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad radius list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty radius list")
    return values


def _emit(text: str, output: str | None, quiet: bool) -> None:
    if output:
        Path(output).write_text(text)
    elif not quiet:
        sys.stdout.write(text)


def _finish_report(report: dict, args: argparse.Namespace, started: float) -> str:
    if args.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - started, 3)}
    validate(report, REPORT_SCHEMA, "report")
    return dumps(report)


# ---------------------------------------------------------------------------
# commands

def cmd_approximate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    job = read_json(args.job)
    validate(job, JOB_SCHEMA, f"job document {args.job}")
    cfg = make_config(job.get("options"), args)
    set_doc = {k: job[k] for k in ("variables", "pieces", "declared_dimension") if k in job}
    desc = presentation.load(set_doc, cfg=cfg)
    s = float(job["s"])
    report = {"command": "approximate", "input": job, "config": cfg.to_dict(), "s": s, "warnings": []}
    code = EXIT_OK
    try:
        result = approximator.run(desc, s, cfg)
    except (ExponentSearchExhausted, ProjectionSearchExhausted) as exc:
        failures = [{"m": m, "reason": why} for m, why in getattr(exc, "failures", [])]
        report.update({"pass": False, "error": {"kind": type(exc).__name__, "message": str(exc),
                                               "failures": failures}})
        print(f"search exhausted: {exc}", file=sys.stderr)
        code = EXIT_EXHAUSTED
    else:
        body = result.to_dict()
        report["result"] = body
        report["tables"] = [{"piece": k, "rows": [list(row) for row in metric.profile_rows(*r.final_report)]}
                            for k, r in enumerate(result.results)]
        report["warnings"] = list(body["warnings"]) + [w for p in body["pieces"] for w in p["warnings"]]
        report["pass"] = result.passed
        if not result.passed:
            code = EXIT_FAIL
        if not args.quiet:
            for k, r in enumerate(result.results):
                eqs = ", ".join(p.expression_string() for p in r.equations)
                print(f"piece {k}: {eqs}  [{'pass' if r.passed else 'FAIL'}]", file=sys.stderr)
    _emit(_finish_report(report, args, started), args.output, args.quiet)
    return code


def cmd_verify(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = make_config(None, args)
    a, doc_a = load_set(args.a, cfg)
    b, doc_b = load_set(args.b, cfg)
    if a.n != b.n or doc_a["variables"] != doc_b["variables"]:
        raise InputError("both sets must use the same variable list")
    if args.s < 1:
        raise InputError("--s must be at least 1")
    reports = metric.check_equiv(a, b, args.s, cfg, label="verify")
    passed = all(r.passed for r in reports)
    report = {"command": "verify", "input": {"a": doc_a, "b": doc_b}, "config": cfg.to_dict(), "s": args.s,
              "reports": [r.to_dict() for r in reports],
              "tables": [{"piece": 0, "rows": [list(row) for row in metric.profile_rows(*reports)]}],
              "pass": passed, "warnings": []}
    _emit(_finish_report(report, args, started), args.output, args.quiet)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_dimension(args: argparse.Namespace) -> int:
    cfg = make_config(None, args)
    desc, _ = load_set(args.set, cfg)
    print(presentation.estimate_local_dimension(desc, cfg))
    return EXIT_OK


def cmd_profile(args: argparse.Namespace) -> int:
    cfg = make_config(None, args)
    a, doc_a = load_set(args.a, cfg)
    b, doc_b = load_set(args.b, cfg)
    if doc_a["variables"] != doc_b["variables"]:
        raise InputError("both sets must use the same variable list")
    ab, ba = metric.check_equiv(a, b, args.s, cfg, label="profile")
    _emit(metric.profile_csv(ab, ba), args.output, args.quiet)
    return EXIT_OK


def cmd_loja(args: argparse.Namespace) -> int:
    cfg = make_config(None, args)
    domain, doc = load_set(args.domain, cfg)
    f = parse(args.f, doc["variables"])
    g = parse(args.g, doc["variables"])
    try:
        est = metric.estimate_lojasiewicz(f, g, domain, cfg, domain_radius=args.domain_radius)
    except HypothesisViolated as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(repr(est.alpha_hat))
    return EXIT_OK


def mesh_points(desc, radius: float, cfg: SamplerConfig, levels: int = MESH_LEVELS) -> np.ndarray:
    """Samples of ``V ∩ B(O, radius)`` from ``levels`` nested spheres, checked against the set."""
    chunks = []
    for k in range(1, levels + 1):
        r = radius * k / levels
        pts = sample_points(desc, r, cfg, label="mesh")
        if len(pts):
            chunks.append(pts[desc.contains(pts, cfg.on_set_tol)])
    chunks = [c for c in chunks if len(c)]
    return np.vstack(chunks) if chunks else np.zeros((0, desc.n))


def cmd_mesh(args: argparse.Namespace) -> int:
    cfg = make_config(None, args)
    desc, doc = load_set(args.set, cfg)
    if not (0 < args.radius < 1):
        raise InputError("--radius must lie in (0, 1)")
    pts = mesh_points(desc, args.radius, cfg)
    if len(pts) == 0:
        raise EmptyAtRadius(args.radius, "no mesh point converged")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(doc["variables"])
    for row in pts:
        writer.writerow([format(float(v), ".17g") for v in row])
    _emit(buf.getvalue(), args.output, args.quiet)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root seed for every randomized routine")
    common.add_argument("--samples", type=int, default=None, help="samples per radius")
    common.add_argument("--radii", type=_radii, default=None, help="comma separated decreasing radii in (0, 1)")
    common.add_argument("--max-exponent", type=int, default=None, help="largest odd exponent tried")
    common.add_argument("--quiet", action="store_true", help="no progress or report on stdout")
    common.add_argument("--timing", action="store_true", help="add wall-clock timing to reports")
    common.add_argument("-v", "--verbose", action="store_true", help="log search progress")

    parser = argparse.ArgumentParser(prog="algapprox", description="Algebraic approximation of semialgebraic germs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approximate", parents=[common], help="approximate a set by an algebraic set")
    p.add_argument("job")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("verify", parents=[common], help="test s-equivalence of two sets")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("dimension", parents=[common], help="estimate the local dimension at the origin")
    p.add_argument("set")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("profile", parents=[common], help="per-radius delta table as CSV")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("loja", parents=[common], help="estimate a Lojasiewicz exponent")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("domain")
    p.add_argument("--domain-radius", type=float, default=0.5)
    p.set_defaults(func=cmd_loja)

    p = sub.add_parser("mesh", parents=[common], help="sample the set inside a ball as CSV")
    p.add_argument("set")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_mesh)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (InputError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ExponentSearchExhausted, ProjectionSearchExhausted) as exc:
        print(f"search exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except (AlgApproxError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
