"""``bielecki`` command line.

Exit codes: 0 success, 2 certificate failed (or no weight could be built),
3 configuration or parse error, 4 no convergence within ``max_iter``.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import CATALOG
from .config import ConfigError, ProblemConfig, compile_config, load_config
from .errors import (
    AdmissibilityError,
    CertificateError,
    ConvergenceError,
    DivergenceError,
    InfeasibleError,
    InterpolationError,
    KernelEvaluationError,
)
from .grid import trapezoid_measure, validate_relation
from .renorm import Weight, spectral_radius_sequence
from .solver import _resolve_weight, solve_integral, solve_presic

EXIT_OK = 0
EXIT_CERTIFICATE = 2
EXIT_CONFIG = 3
EXIT_NO_CONVERGENCE = 4

__all__ = ["Outcome", "execute", "main", "format_csv"]


@dataclass
class Outcome:
    status: int
    grid: object
    x: np.ndarray | None
    report: object
    message: str


def _problem_errors():
    return (ConfigError, AdmissibilityError, InterpolationError, KernelEvaluationError, InfeasibleError)


def execute(cfg: ProblemConfig) -> Outcome:
    """Run a solve in memory; maps failures onto exit codes."""
    compiled = compile_config(cfg)
    grid = compiled.grid
    try:
        if cfg.kind == "presic":
            x, report = solve_presic(compiled.problem, compiled.weight, compiled.solver_config)
        elif cfg.kind == "cauchy":
            from .cauchy import to_integral_problem

            x, report = solve_integral(to_integral_problem(compiled.problem), "auto", compiled.solver_config)
        else:
            x, report = solve_integral(compiled.problem, compiled.weight, compiled.solver_config)
    except CertificateError as exc:
        return Outcome(EXIT_CERTIFICATE, grid, None, exc.report, str(exc))
    except DivergenceError as exc:
        return Outcome(EXIT_CERTIFICATE, grid, None, None, f"no weight could be built: {exc}")
    except ConvergenceError as exc:
        return Outcome(EXIT_NO_CONVERGENCE, grid, None, exc.report, str(exc))
    return Outcome(EXIT_OK, grid, x, report, f"converged in {report.iterations} iterations, q = {report.q:.6g}, bound = {report.bound:.3e}")


def format_csv(grid, columns, names) -> str:
    """Rows of node coordinates followed by the given columns, ``%.17g``."""
    header = [f"t{i + 1}" for i in range(grid.dimension)] + list(names)
    data = np.column_stack([grid.coords, np.asarray(columns, dtype=float).reshape(grid.size, -1)])
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    np.savetxt(buf, data, fmt="%.17g", delimiter=",")
    return buf.getvalue()


def _report_payload(outcome: Outcome, cfg: ProblemConfig) -> dict:
    status = {EXIT_OK: "converged", EXIT_CERTIFICATE: "certificate_failed", EXIT_NO_CONVERGENCE: "not_converged"}
    payload = {"status": status[outcome.status], "kind": cfg.kind, "message": outcome.message}
    if outcome.report is not None:
        payload.update(outcome.report.record(outcome.grid))
    return payload


def _finite_or_none(v):
    if isinstance(v, dict):
        return {k: _finite_or_none(u) for k, u in v.items()}
    if isinstance(v, list):
        return [_finite_or_none(u) for u in v]
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


def _dump_json(payload) -> str:
    # non-finite entries (e.g. no residual after a failed solve) become null
    return json.dumps(_finite_or_none(payload), indent=2) + "\n"


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _parse_nodes(text):
    try:
        nodes = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise ConfigError(f"--grid expects counts like 401 or 101x101, got {text!r}") from None
    if any(n < 1 for n in nodes):
        raise ConfigError("--grid node counts must be positive")
    return nodes


def _load(args, kind=None) -> ProblemConfig:
    cfg = load_config(args.config)
    if kind is not None and cfg.kind != kind:
        raise ConfigError(f"the '{kind}' command needs a config with kind = '{kind}'")
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    if getattr(args, "max_iter", None) is not None:
        cfg.max_iter = args.max_iter
    if getattr(args, "margin", None) is not None:
        cfg.margin = args.margin
    if getattr(args, "grid", None):
        cfg = cfg.with_nodes(_parse_nodes(args.grid))
    return cfg


def _cmd_solve(args, kind=None):
    cfg = _load(args, kind)
    outcome = execute(cfg)
    report_text = _dump_json(_report_payload(outcome, cfg))
    if args.format == "report":
        _write(args.output, report_text)
    else:
        if args.output not in (None, "-"):
            Path(str(args.output) + ".report.json").write_text(report_text)
        elif outcome.status != EXIT_OK:
            sys.stderr.write(report_text)
        if outcome.status == EXIT_OK:
            names = [f"x{c + 1}" for c in range(cfg.m)]
            _write(args.output, format_csv(outcome.grid, outcome.x, names))
    print(f"{cfg.kind}: {outcome.message}", file=sys.stderr)
    return outcome.status


def _cmd_radius(args):
    cfg = _load(args)
    grid = cfg.grid()
    relation = cfg.relation_for(grid)
    if args.depth < 1:
        raise ConfigError("--depth must be at least 1")
    est = spectral_radius_sequence(relation, trapezoid_measure(grid), args.depth)
    names = [f"r{k}" for k in range(1, args.depth + 1)]
    _write(args.output, format_csv(grid, est.r.T, names))
    print(f"radius: r_{args.depth} at the last node = {est.r[-1, -1]:.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_weight(args):
    cfg = _load(args)
    compiled = compile_config(cfg)
    grid = compiled.grid
    try:
        if cfg.kind == "presic":
            w = compiled.weight if isinstance(compiled.weight, Weight) else Weight.uniform(grid)
        elif cfg.kind == "cauchy":
            from .cauchy import to_integral_problem

            w = _resolve_weight(to_integral_problem(compiled.problem), "auto", compiled.solver_config)
        else:
            w = _resolve_weight(compiled.problem, compiled.weight, compiled.solver_config)
    except DivergenceError as exc:
        print(f"weight: no weight could be built: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    _write(args.output, format_csv(grid, w.ell, ["ell"]))
    print(f"weight: max ell = {float(np.max(w.ell)):.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args):
    cfg = _load(args)
    grid = cfg.grid()
    report = validate_relation(cfg.relation_for(grid))
    payload = {"relation": cfg.relation_kind, "ok": report.ok, **report.as_dict()}
    _write(args.output, _dump_json(payload))
    return EXIT_OK if report.ok else EXIT_CERTIFICATE


def _run_entry(entry):
    outcome = execute(entry.config())
    if outcome.status != entry.expected_exit:
        return False, f"exit {outcome.status}, expected {entry.expected_exit}: {outcome.message}"
    return entry.oracle(outcome.grid, outcome.x, outcome.report)


def _cmd_catalog(args):
    if args.action == "list":
        width = max(len(n) for n in CATALOG)
        for name, entry in CATALOG.items():
            print(f"{name:<{width}}  {entry.description}")
        return EXIT_OK
    if args.name is None:
        raise ConfigError(f"catalog {args.action} needs an entry name")
    names = list(CATALOG) if args.action == "run" and args.name == "all" else [args.name]
    unknown = [n for n in names if n not in CATALOG]
    if unknown:
        raise ConfigError(f"unknown catalog entry {unknown[0]!r}; try 'bielecki catalog list'")
    if args.action == "show":
        sys.stdout.write(CATALOG[names[0]].config_text.lstrip())
        return EXIT_OK
    failed = 0
    for name in names:
        passed, detail = _run_entry(CATALOG[name])
        failed += not passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return EXIT_OK if failed == 0 else 1


def _solver_flags(p):
    p.add_argument("--tol", type=float, help="stopping tolerance on the a-posteriori bound")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--margin", type=float, help="certificate passes iff q <= 1 - margin")


def _common(p, output_help):
    p.add_argument("config", help="TOML problem config")
    p.add_argument("--grid", help="override node counts, e.g. 401 or 101x101")
    p.add_argument("--output", "-o", help=output_help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bielecki", description="Certified Picard solvers under weighted sup-metrics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve any configured problem"),
        ("cauchy", "solve a config of kind 'cauchy'"),
        ("presic", "solve a config of kind 'presic'"),
    ):
        p = sub.add_parser(name, help=help_text)
        _common(p, "solution CSV path (report goes to <output>.report.json); stdout if omitted")
        _solver_flags(p)
        p.add_argument("--format", choices=("csv", "report"), default="csv")
    p = sub.add_parser("radius", help="per-node spectral radius sequence r_1..r_K")
    _common(p, "CSV path; stdout if omitted")
    p.add_argument("--depth", type=int, default=8)
    p = sub.add_parser("weight", help="emit the weight ell as CSV")
    _common(p, "CSV path; stdout if omitted")
    _solver_flags(p)
    p = sub.add_parser("validate", help="check the relation axioms")
    _common(p, "JSON path; stdout if omitted")
    p = sub.add_parser("catalog", help="list, show or run pinned examples")
    p.add_argument("action", choices=("list", "show", "run"))
    p.add_argument("name", nargs="?", help="entry name ('all' runs everything)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "cauchy": lambda a: _cmd_solve(a, "cauchy"),
        "presic": lambda a: _cmd_solve(a, "presic"),
        "radius": _cmd_radius,
        "weight": _cmd_weight,
        "validate": _cmd_validate,
        "catalog": _cmd_catalog,
    }
    try:
        return handlers[args.command](args)
    except _problem_errors() as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
