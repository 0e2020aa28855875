"""Batch front-end.

``oulab verify|spectrum|evolve|converge [config] [--seed N] [--out DIR]
[--jobs N]`` loads a JSON run configuration (the bundled default when the
path is omitted), executes the configured work, and writes CSV artifacts
plus a human-readable summary. Exit codes: 0 all checks pass, 1 some check
failed, 2 configuration error.

Output is deterministic: the same config and seed produce byte-identical
files regardless of ``--jobs``, and every CSV row carries the engine,
budget, and seed needed to reproduce it in isolation.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ConfigError, RunConfig, load_config, load_default_config
from .cylapprox import convergence_study, factorization_check
from .engines.grid import grid_build, grid_apply, grid_spectrum
from .inequalities import (InequalityReport, check_decay, check_entropy,
                           check_gradient_bound, check_invariance,
                           check_logsob, check_poincare,
                           check_positivity_and_contraction,
                           check_submultiplicative)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(rows, header) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _run_one_check(cfg: RunConfig, index: int, check: dict):
    kind = check["kind"]
    seed = int(check.get("seed", cfg.seed + 1000 * index))
    res = cfg.budget("grid_resolution", check)
    paths = int(cfg.budget("mc_paths", check))
    step = float(cfg.budget("mc_step", check))
    samples = int(cfg.budget("samples", check))
    t = float(check.get("t", 0.5))

    if kind == "factorization":
        base = cfg.domain(check["base"])
        fn = cfg.function(check["function"])
        report = factorization_check(
            fn, base, int(check.get("free_dims", 1)), t,
            n_points=int(check.get("points", 10)), n_paths=paths, h=step,
            resolution=res, seed=seed)
        return [report], "monte_carlo+grid", f"paths={paths};h={step};resolution={res}", seed

    dom = cfg.domain(check["domain"])
    fn = cfg.function(check["function"]) if "function" in check else None
    if kind == "poincare":
        reports = [check_poincare(fn, dom, n_samples=samples, seed=seed)]
        return reports, "sampled", f"samples={samples}", seed
    if kind == "log_sobolev":
        reports = [check_logsob(fn, dom, n_samples=samples, seed=seed)]
        return reports, "sampled", f"samples={samples}", seed
    if kind == "gradient_bound":
        reports = [check_gradient_bound(
            fn, dom, t, resolution=res,
            n_steps=int(cfg.budget("cn_steps", check)))]
        return reports, "grid", f"resolution={res}", seed
    if kind == "submultiplicative":
        g = cfg.function(check["function2"])
        reports = [check_submultiplicative(
            fn, g, dom, t, n_panel=int(check.get("panel", 10)),
            n_paths=paths, h=step, seed=seed)]
        return reports, "monte_carlo", f"paths={paths};h={step}", seed
    if kind == "invariance":
        engine = check.get("engine", "monte_carlo")
        reports = [check_invariance(fn, dom, t, engine=engine, n_paths=paths,
                                    h=step, resolution=res, seed=seed)]
        budget = f"resolution={res}" if engine == "grid" \
            else f"paths={paths};h={step}"
        return reports, engine, budget, seed
    if kind == "decay":
        times = [float(v) for v in check.get("times", [0.5, 1.0])]
        reports = check_decay(fn, dom, times, resolution=res)
        return reports, "grid", f"resolution={res}", seed
    if kind == "positivity_contraction":
        reports = [check_positivity_and_contraction(fn, dom, t, resolution=res)]
        return reports, "grid", f"resolution={res}", seed
    if kind == "entropy":
        times = [float(v) for v in check.get(
            "times", np.linspace(0.0, 4.0, 21))]
        reports = check_entropy(fn, dom, times, resolution=res,
                                floor=float(check.get("floor", 1e-6)))
        return reports, "grid", f"resolution={res}", seed
    raise ConfigError(f"check {index}: unhandled kind {kind!r}")


def _apply_rhs_scale(report: InequalityReport, scale: float) -> InequalityReport:
    if scale == 1.0:
        return report
    details = dict(report.details)
    details["rhs_scale"] = scale
    return InequalityReport(name=report.name, lhs=report.lhs,
                            rhs=report.rhs * scale,
                            tolerance=report.tolerance, details=details)


def run_checks(cfg: RunConfig, jobs: int = 1):
    """Execute all configured checks; returns rows for reports.csv."""
    def work(item):
        index, check = item
        reports, engine, budget, seed = _run_one_check(cfg, index, check)
        scale = float(check.get("rhs_scale", 1.0))
        reports = [_apply_rhs_scale(r, scale) for r in reports]
        return index, check, reports, engine, budget, seed

    items = list(enumerate(cfg.checks))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(item) for item in items]

    rows = []
    reports_flat = []
    for index, check, reports, engine, budget, seed in results:
        for j, rep in enumerate(reports):
            label = f"{index}.{j}:{check['kind']}"
            rows.append((label, rep.name, rep.lhs, rep.rhs, rep.margin,
                         rep.tolerance, rep.passed, engine, budget, seed))
            reports_flat.append((label, rep))
    return rows, reports_flat


REPORT_HEADER = ("check", "name", "lhs", "rhs", "margin", "tolerance",
                 "pass", "engine", "budget", "seed")


def cmd_verify(cfg: RunConfig, out_dir: str, jobs: int = 1) -> int:
    rows, reports = run_checks(cfg, jobs=jobs)
    os.makedirs(out_dir, exist_ok=True)
    _write_atomic(os.path.join(out_dir, "reports.csv"),
                  _csv(rows, REPORT_HEADER))
    all_pass = all(rep.passed for _, rep in reports)
    lines = [f"{label}  {rep}" for label, rep in reports]
    lines.append(f"total: {len(reports)} checks, "
                 f"{sum(1 for _, r in reports if r.passed)} passed")
    lines.append("RESULT: PASS" if all_pass else "RESULT: FAIL")
    _write_atomic(os.path.join(out_dir, "summary.txt"), "\n".join(lines) + "\n")
    return 0 if all_pass else 1


def cmd_spectrum(cfg: RunConfig, out_dir: str, jobs: int = 1) -> int:
    spec = cfg.spectrum
    names = spec.get("domains", list(cfg.domains))
    count = int(spec.get("count", 4))
    res = spec.get("resolution", cfg.budget("grid_resolution"))
    rows = []
    for name in names:
        op = grid_build(cfg.domain(name), res,
                        float(cfg.budget("tail_mass")))
        result = grid_spectrum(op, count)
        for i, lam in enumerate(result.eigenvalues):
            rows.append((name, i, float(lam), result.gap, "grid",
                         f"resolution={res}", cfg.seed))
    os.makedirs(out_dir, exist_ok=True)
    _write_atomic(os.path.join(out_dir, "eigenvalues.csv"),
                  _csv(rows, ("domain", "index", "eigenvalue", "gap",
                              "engine", "budget", "seed")))
    return 0


def cmd_evolve(cfg: RunConfig, out_dir: str, jobs: int = 1) -> int:
    spec = cfg.evolve
    dom = cfg.domain(spec["domain"])
    fn = cfg.function(spec["function"])
    times = [float(v) for v in spec.get("times", [0.0, 0.5, 1.0])]
    res = spec.get("resolution", cfg.budget("grid_resolution"))
    op = grid_build(dom, res, float(cfg.budget("tail_mass")))
    u0 = op.sample(fn)
    rows = []
    for t in times:
        u_t = grid_apply(op, u0, t,
                         n_steps=int(cfg.budget("cn_steps")))
        for i in range(op.n_nodes):
            x2 = float(op.nodes[i, 1]) if op.dim == 2 else ""
            rows.append((spec["domain"], spec["function"], t, i,
                         float(op.nodes[i, 0]), x2, float(u_t[i]), "grid",
                         f"resolution={res}", cfg.seed))
    os.makedirs(out_dir, exist_ok=True)
    _write_atomic(os.path.join(out_dir, "evolution.csv"),
                  _csv(rows, ("domain", "function", "t", "node", "x1", "x2",
                              "value", "engine", "budget", "seed")))
    return 0


def cmd_converge(cfg: RunConfig, out_dir: str, jobs: int = 1) -> int:
    spec = cfg.converge
    ball = cfg.domain(spec["ball"])
    fn = cfg.function(spec["function"])
    study = convergence_study(
        ball, fn, float(spec.get("t", 0.5)),
        spec.get("sides", [4, 8, 16, 32, 64]),
        n_points=int(spec.get("points", 20)),
        paths_per_point=int(spec.get("paths_per_point", 5000)),
        h=float(spec.get("step", cfg.budget("mc_step"))),
        seed=cfg.seed)
    rows = [(s, e, se, m, "monte_carlo",
             f"paths_per_point={study.details['paths_per_point']};"
             f"h={study.details['h']}", cfg.seed)
            for (s, e, se, m) in study.csv_rows()]
    os.makedirs(out_dir, exist_ok=True)
    _write_atomic(os.path.join(out_dir, "convergence.csv"),
                  _csv(rows, ("sides", "error", "std_error", "excess_mass",
                              "engine", "budget", "seed")))
    return 0


_COMMANDS = {
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "converge": cmd_converge,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oulab",
        description="verify semigroup inequalities and export spectra, "
                    "snapshots, and convergence tables")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", default=None,
                       help="path to a JSON run configuration "
                            "(bundled default when omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--out", default=None,
                       help="override the configured output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="run independent checks in parallel")
    args = parser.parse_args(argv)

    try:
        cfg = load_default_config() if args.config is None \
            else load_config(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = args.out if args.out is not None else cfg.output_dir
    try:
        return _COMMANDS[args.command](cfg, out_dir, jobs=max(1, args.jobs))
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
