"""Command-line interface: ``proxalm {generate,reference,solve,certify,compare}``.

Exit codes
----------
0  success (generated, converged, all checks passed)
1  I/O failure
2  invalid input: bad spec, bad parameters, solver incompatible with the problem
3  solver stopped without converging (iteration budget or divergence)
4  certification requested without a usable reference solution
5  at least one certificate check failed

Run settings can come from a JSON config file (``--config``) and from a
defaults file named by the ``PROXALM_DEFAULTS`` environment variable. The
precedence is command line > ``--config`` > ``PROXALM_DEFAULTS`` > built-in
defaults. Config keys use the flag names with underscores (``max_iter``,
``tol_step``, ...), plus ``params`` for solver-specific keyword arguments.
"""

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import certify
from ._validation import DivergenceError, ParameterError
from .gen import GenSpec, Reference, generate, reference_solve
from .metric import MetricH
from .model import problem_from_dict, save_problem
from .solvers import SOLVERS, Relaxed, solver_from_trace
from .trace import SolveTrace, Status

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_NO_REFERENCE, EXIT_CHECK_FAILED = range(6)

DEFAULTS = {"r": 1.0, "tau": None, "gamma": None, "max_iter": 100000, "tol": 1e-8,
            "tol_step": 1e-10, "seed": 0, "format": "csv,json", "params": {}}
RUN_KEYS = ("problem", "solver", "solvers", "r", "tau", "gamma", "max_iter", "tol", "tol_step",
            "seed", "out", "format", "params")
# --tau sets the primal (or, for N-PDHG2, dual) prox weight
TAU_NAME = {"palm": "tau", "pdalm": "tau", "npdhg1": "tau", "npdhg2": "sigma"}
CHECKS = ("contraction", "ergodic", "dual-residual", "h-positivity")
RESIDUAL_TARGET = 1e-6


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} {path} is not valid JSON: {exc}", EXIT_INVALID) from exc


def _write(path, writer):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        writer(path)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def sidecar_path(problem_path):
    p = Path(problem_path)
    return p.with_name(p.stem + ".meta.json")


def reference_path(problem_path):
    p = Path(problem_path)
    return p.with_name(p.stem + ".ref.json")


def resolve_config(args):
    """Merge built-in defaults, ``PROXALM_DEFAULTS``, ``--config`` and explicit flags."""
    cfg = dict(DEFAULTS)
    env = os.environ.get("PROXALM_DEFAULTS")
    for source, label in ((env, "PROXALM_DEFAULTS file"), (getattr(args, "config", None), "config")):
        if source:
            doc = _read_json(source, label)
            unknown = set(doc) - set(RUN_KEYS)
            if unknown:
                raise CliError(f"unknown keys in {label}: {sorted(unknown)}", EXIT_INVALID)
            cfg.update(doc)
    for key in RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    extra = dict(cfg.get("params") or {})
    for item in getattr(args, "param", None) or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise CliError(f"--param expects key=value, got {item!r}", EXIT_INVALID)
        try:
            extra[key] = json.loads(raw)
        except json.JSONDecodeError:
            extra[key] = raw
    cfg["params"] = extra
    return cfg


def _parse_inline_spec(text, seed):
    """``gen:KIND[:key=value,...]`` (``gen:rps`` is the named game)."""
    parts = text.split(":", 2)
    kind = parts[1] if len(parts) > 1 else ""
    if kind == "rps":
        return GenSpec("matrix_game", name="rps", seed=seed)
    fields = {}
    if len(parts) == 3 and parts[2]:
        for item in parts[2].split(","):
            key, _, raw = item.partition("=")
            try:
                fields[key.strip()] = int(raw)
            except ValueError as exc:
                raise CliError(f"bad generator field {item!r}", EXIT_INVALID) from exc
    try:
        return GenSpec(kind, seed=seed, **fields)
    except TypeError as exc:
        raise CliError(f"bad generator spec {text!r}: {exc}", EXIT_INVALID) from exc


def load_problem_source(source, seed=0):
    """Return ``(problem, metadata)`` from a JSON path or an inline ``gen:`` spec."""
    if source is None:
        raise CliError("--problem is required", EXIT_INVALID)
    if str(source).startswith("gen:"):
        try:
            out = generate(_parse_inline_spec(str(source), seed))
        except ParameterError as exc:
            raise CliError(str(exc), EXIT_INVALID) from exc
        return out.problem, out.metadata
    doc = _read_json(source, "problem")
    try:
        problem = problem_from_dict(doc)
    except (ParameterError, KeyError, ValueError, TypeError) as exc:
        raise CliError(f"cannot build problem from {source}: {exc}", EXIT_INVALID) from exc
    meta_file = sidecar_path(source)
    meta = _read_json(meta_file, "metadata") if meta_file.exists() else {}
    return problem, meta


def build_solver(solver_id, cfg):
    if solver_id not in SOLVERS:
        raise CliError(f"unknown solver {solver_id!r}; choose from {sorted(SOLVERS)}",
                       EXIT_INVALID)
    cls = SOLVERS[solver_id]
    kwargs = {"r": cfg["r"], "max_iter": cfg["max_iter"], "tol_primal": cfg["tol"],
              "tol_step": cfg["tol_step"]}
    if cfg.get("tau") is not None:
        if solver_id not in TAU_NAME:
            raise CliError(f"{solver_id} has no tau parameter; use --param", EXIT_INVALID)
        kwargs[TAU_NAME[solver_id]] = cfg["tau"]
    kwargs.update(cfg["params"])
    unknown = set(kwargs) - set(cls().get_params())
    if unknown:
        raise CliError(f"{solver_id} does not accept {sorted(unknown)}", EXIT_INVALID)
    solver = cls(**kwargs)
    if cfg.get("gamma") is not None:
        solver = Relaxed(solver, cfg["gamma"])
    return solver


def _start(meta):
    x0, y0 = meta.get("x0"), meta.get("y0")
    return (None if x0 is None else np.array(x0), None if y0 is None else np.array(y0))


def run_solver(solver, problem, meta):
    """Fit ``solver``; parameter or compatibility problems become exit code 2."""
    x0, y0 = _start(meta)
    t0 = time.perf_counter()
    try:
        solver.fit(problem, x0, y0)
    except ParameterError as exc:
        raise CliError(str(exc), EXIT_INVALID) from exc
    except (DivergenceError, np.linalg.LinAlgError) as exc:
        raise CliError(str(exc), EXIT_NOT_CONVERGED) from exc
    return solver.trace_, time.perf_counter() - t0


def _formats(cfg):
    fmts = {f.strip() for f in str(cfg["format"]).split(",") if f.strip()}
    if not fmts or not fmts <= {"csv", "json"}:
        raise CliError(f"--format must list csv and/or json, got {cfg['format']!r}", EXIT_INVALID)
    return fmts


def _summary(trace):
    last = trace.history[-1] if trace.n_iter else [0, np.nan, np.nan, np.nan, np.nan]
    return (f"{trace.solver_id}: status={trace.status.value} iterations={trace.n_iter} "
            f"primal_residual={last[1]:.3e} objective={last[2]:.10g}")


def cmd_generate(args):
    kind = args.kind
    spec_kw = {"seed": args.seed}
    if kind == "rps":
        kind, spec_kw["name"] = "matrix_game", "rps"
    for key in ("m", "n", "sparsity", "p"):
        value = getattr(args, key)
        if value is not None:
            spec_kw[key] = value
    try:
        out = generate(GenSpec(kind, **spec_kw))
    except ParameterError as exc:
        raise CliError(str(exc), EXIT_INVALID) from exc
    _write(args.out, lambda p: save_problem(out.problem, p))
    _write(sidecar_path(args.out),
           lambda p: Path(p).write_text(json.dumps(out.metadata, indent=2)))
    print(f"wrote {args.out} and {sidecar_path(args.out)}")
    return EXIT_OK


def cmd_reference(args):
    problem, _ = load_problem_source(args.problem, args.seed)
    try:
        ref = reference_solve(problem, budget=args.budget, tol=args.tol)
    except ParameterError as exc:
        raise CliError(str(exc), EXIT_INVALID) from exc
    out = args.out or reference_path(args.problem)
    _write(out, lambda p: Path(p).write_text(json.dumps(ref.to_dict())))
    print(f"reference: converged={ref.converged} iterations={ref.n_iter} "
          f"objective={ref.objective:.12g} -> {out}")
    return EXIT_OK if ref.converged else EXIT_NOT_CONVERGED


def cmd_solve(args):
    cfg = resolve_config(args)
    if not cfg.get("solver"):
        raise CliError("--solver is required", EXIT_INVALID)
    fmts = _formats(cfg)
    problem, meta = load_problem_source(cfg.get("problem"), cfg["seed"])
    solver = build_solver(cfg["solver"], cfg)
    trace, _ = run_solver(solver, problem, meta)
    out = Path(cfg.get("out") or ".")
    if "csv" in fmts:
        _write(out / "trace.csv", trace.write_csv)
    if "json" in fmts:
        _write(out / "trace.json", trace.write_json)
    print(_summary(trace))
    return EXIT_OK if trace.status is Status.CONVERGED else EXIT_NOT_CONVERGED


def _load_reference(path, problem):
    if path is None or not Path(path).exists():
        raise CliError("no reference solution found; run `proxalm reference --problem ...` first",
                       EXIT_NO_REFERENCE)
    ref = Reference.from_dict(_read_json(path, "reference"))
    if ref.flagged:
        raise CliError(f"reference {path} did not reach its tolerance; rerun with a larger budget",
                       EXIT_NO_REFERENCE)
    if ref.w.size != problem.dim:
        raise CliError(f"reference {path} does not match the problem size", EXIT_INVALID)
    return ref


def cmd_certify(args):
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = set(checks) - set(CHECKS)
    if bad or not checks:
        raise CliError(f"unknown checks {sorted(bad)}; choose from {list(CHECKS)}", EXIT_INVALID)
    problem, _ = load_problem_source(args.problem)
    try:
        trace = SolveTrace.from_dict(_read_json(args.trace, "trace"))
    except (KeyError, ValueError) as exc:
        raise CliError(f"malformed trace {args.trace}: {exc}", EXIT_INVALID) from exc
    ref_file = args.reference or reference_path(args.problem)
    ref = _load_reference(ref_file, problem)
    try:
        solver = solver_from_trace(trace)
        solver._check_problem(problem)
        H = solver._build(problem).metric
        if not isinstance(H, MetricH):
            raise ParameterError(f"{trace.solver_id} has no contraction metric to certify against")
        reports = []
        if "contraction" in checks:
            reports.append(certify.check_contraction(trace, H, ref.w))
        if "ergodic" in checks:
            probes = np.vstack([ref.w, certify.random_probes(problem, args.probes, args.seed)])
            reports.append(certify.check_ergodic_bound(trace, problem, H, 0,
                                                       max(trace.n_iter - 1, 0), probes))
        if "dual-residual" in checks:
            reports.append(certify.check_dual_residual_rate(trace, H, ref.w))
        if "h-positivity" in checks:
            reports.append(certify.check_h_positive(H, seed=args.seed))
    except ParameterError as exc:
        raise CliError(str(exc), EXIT_INVALID) from exc
    out = args.out or Path(args.trace).with_name("certificate.json")
    _write(out, lambda p: certify.write_reports(reports, p))
    for rep in reports:
        print(f"{'PASS' if rep.passed else 'FAIL'} {rep.name}: worst margin {rep.worst_margin:.3e} "
              f"at {rep.worst_index}")
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print("failing checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _first_below(column, target):
    hits = np.flatnonzero(column <= target)
    return int(hits[0]) + 1 if hits.size else None


def cmd_compare(args):
    cfg = resolve_config(args)
    names = [s.strip() for s in str(cfg.get("solvers") or "").split(",") if s.strip()]
    if not names:
        raise CliError("--solvers needs at least one solver id", EXIT_INVALID)
    problem, meta = load_problem_source(cfg.get("problem"), cfg["seed"])
    runs = []
    for name in names:
        trace, wall = run_solver(build_solver(name, cfg), problem, meta)
        runs.append((name, trace, wall))
    out = Path(cfg.get("out") or ".")
    depth = max(t.n_iter for _, t, _ in runs)

    def write_columns(path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k"] + names)
            cols = [t.column("primal_residual") for _, t, _ in runs]
            for k in range(depth):
                writer.writerow([k + 1] + [repr(float(c[k])) if k < c.size else "" for c in cols])

    summary = []
    for name, trace, wall in runs:
        hit = _first_below(trace.column("primal_residual"), RESIDUAL_TARGET)
        summary.append({"solver": name, "status": trace.status.value, "iterations": trace.n_iter,
                        "iterations_to_1e-6": "" if hit is None else hit,
                        "reached_1e-6": hit is not None, "wall_time_s": round(wall, 6),
                        "final_objective": float(trace.history[-1, 2]) if trace.n_iter else ""})

    def write_summary(path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(summary[0]))
            writer.writeheader()
            writer.writerows(summary)

    _write(out / "compare.csv", write_columns)
    _write(out / "summary.csv", write_summary)
    if "json" in _formats(cfg):
        for name, trace, _ in runs:
            _write(out / f"trace_{name}.json", trace.write_json)
    print(f"{'solver':<10} {'status':<10} {'iters':>8} {'to 1e-6':>8} {'wall [s]':>10}")
    for row in summary:
        to = row["iterations_to_1e-6"] if row["reached_1e-6"] else "never"
        flag = "" if row["reached_1e-6"] else "  (non-convergent)"
        print(f"{row['solver']:<10} {row['status']:<10} {row['iterations']:>8} {to:>8} "
              f"{row['wall_time_s']:>10.4f}{flag}")
    return EXIT_OK if all(t.status is Status.CONVERGED for _, t, _ in runs) else EXIT_NOT_CONVERGED


def _run_flags(p):
    p.add_argument("--problem", help="problem JSON path or inline spec gen:KIND[:m=..,n=..]")
    p.add_argument("--r", type=float)
    p.add_argument("--tau", type=float, help="prox weight (tau, or sigma for npdhg2)")
    p.add_argument("--gamma", type=float, help="relaxation factor in (0, 2)")
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float, help="primal residual tolerance")
    p.add_argument("--tol-step", dest="tol_step", type=float, help="H-step tolerance")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="extra solver keyword argument (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", help="comma list of csv, json")
    p.add_argument("--config", help="JSON config file")


def build_parser():
    parser = argparse.ArgumentParser(prog="proxalm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generated problem and its metadata sidecar")
    g.add_argument("--kind", required=True,
                   help="basis_pursuit, inequality_lp, matrix_game, multiblock_l1, "
                        "quadratic_saddle or rps")
    for key in ("m", "n", "sparsity", "p"):
        g.add_argument(f"--{key}", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reference", help="high-accuracy reference solution for certification")
    r.add_argument("--problem", required=True)
    r.add_argument("--budget", type=int, default=1_000_000)
    r.add_argument("--tol", type=float, default=1e-12)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reference)

    s = sub.add_parser("solve", help="run one solver and write its trace")
    s.add_argument("--solver", choices=sorted(SOLVERS))
    _run_flags(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", help="check a stored trace against the convergence theory")
    c.add_argument("--trace", required=True)
    c.add_argument("--problem", required=True)
    c.add_argument("--reference", help="defaults to <problem>.ref.json")
    c.add_argument("--checks", default=",".join(CHECKS))
    c.add_argument("--probes", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("compare", help="run several solvers on one problem")
    m.add_argument("--solvers", help="comma list of solver ids")
    _run_flags(m)
    m.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
