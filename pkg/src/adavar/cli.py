"""Command-line interface.

Subcommands: run, bench, estimate-levelset, estimate-curvature, occupancy,
gradcheck.  All randomness flows from the single master seed (config key
``seed``, overridable with --seed); no other entropy source is consulted.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import (ESTIMATION_STREAM, ConfigError, build_solver_config,
                     effective_config, load_config)
from .estimation import (EmpiricalCdf, PartialResultError, build_cdf_iid,
                         estimate_b1b2_iterative)
from .experiments import (ExperimentConfig, convergence_experiment,
                          occupation_measure, write_curve_csv,
                          write_histogram_csv)
from .objective import finite_diff_grad
from .sampler import derive_stream, uniform_in_box
from .solver import run as run_solver
from .solver import write_trace_csv

_GRADCHECK_TOL = 1e-6


def _write_sidecar(out_dir: str, cfg: dict, master_seed: int, overrides: dict | None = None):
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(effective_config(cfg, master_seed, overrides), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "version.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"adavar {__version__}\n")


def _ensure_out(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _cmd_run(args, cfg):
    solver, seed = build_solver_config(cfg, args.seed, args.iterations)
    trace = run_solver(solver, derive_stream(seed, 0))
    out = _ensure_out(args)
    write_trace_csv(trace, os.path.join(out, "trace.csv"), coords=args.coords)
    _write_sidecar(out, cfg, seed, {"solver.iterations": args.iterations})
    print(f"run: {solver.variant}, {solver.iterations} iterations, "
          f"best_f={trace.best_value:.6g}")
    return 0


def _experiment_config(args, cfg, solver, seed, collect_online=False):
    exp = cfg.get("experiment", {})
    runs = args.runs if args.runs is not None else int(exp.get("runs", 100))
    eps = args.eps if args.eps is not None else float(exp.get("eps", 0.01))
    checkpoints = exp.get("checkpoints")
    if checkpoints is not None:
        checkpoints = np.asarray(checkpoints, dtype=int)
    return ExperimentConfig(
        solver=solver, runs=runs, eps=eps, master_seed=seed,
        checkpoints=checkpoints, jobs=args.jobs, collect_online=collect_online)


def _cmd_bench(args, cfg):
    solver, seed = build_solver_config(cfg, args.seed, args.iterations)
    expcfg = _experiment_config(args, cfg, solver, seed)
    result = convergence_experiment(expcfg)
    out = _ensure_out(args)
    write_curve_csv(result.curve_current, os.path.join(out, "curve_current.csv"))
    write_curve_csv(result.curve_best, os.path.join(out, "curve_best.csv"))
    _write_sidecar(out, cfg, seed, {
        "experiment.runs": expcfg.runs, "experiment.eps": expcfg.eps,
        "solver.iterations": args.iterations,
    })
    print(f"bench: {expcfg.runs} runs, final success (current iterate) "
          f"{result.final_success_current:.3f}, (best-so-far) {result.final_success_best:.3f}")
    return 0


def _cmd_estimate_levelset(args, cfg):
    est = cfg.get("estimate", {})
    levels = est.get("levels")
    if not levels:
        raise ConfigError("estimate.levels", "is required")
    source = est.get("source", "iid")
    solver, seed = build_solver_config(cfg, args.seed, args.iterations)
    objective = solver.objective
    base = objective.expectation() if hasattr(objective, "expectation") else objective
    if source == "iid":
        n = args.samples if args.samples is not None else int(est.get("samples", 1_000_000))
        cdf = build_cdf_iid(base, solver.box, n, derive_stream(seed, ESTIMATION_STREAM))
    elif source == "online":
        expcfg = _experiment_config(args, cfg, solver, seed, collect_online=True)
        result = convergence_experiment(expcfg)
        if result.online_values is None or result.online_values.size == 0:
            raise RuntimeError("no high-variance iterates collected")
        cdf = EmpiricalCdf(result.online_values, provenance="high_variance_iterates")
    else:
        raise ConfigError("estimate.source", f"must be 'iid' or 'online', got {source!r}")
    out = _ensure_out(args)
    lines = ["level,f_hat,samples_used,provenance"]
    for level in levels:
        lines.append(f"{level},{cdf.inverse(float(level)):.17g},{cdf.n},{cdf.provenance}")
    with open(os.path.join(out, "levelset.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_sidecar(out, cfg, seed, {"estimate.samples": args.samples})
    print(f"estimate-levelset: {len(levels)} levels from {cdf.n} samples ({cdf.provenance})")
    return 0


def _cmd_estimate_curvature(args, cfg):
    est = cfg.get("estimate", {})
    m = int(est.get("m", 50))
    rounds = int(est.get("rounds", 3))
    budget = args.samples if args.samples is not None else int(est.get("samples", 1_000_000))
    solver, seed = build_solver_config(cfg, args.seed, args.iterations)
    objective = solver.objective
    base = objective.expectation() if hasattr(objective, "expectation") else objective
    rng = derive_stream(seed, ESTIMATION_STREAM)

    def stream():
        for _ in range(budget):
            yield uniform_in_box(rng, solver.box)

    status = 0
    try:
        estimates = estimate_b1b2_iterative(stream(), base, m=m, rounds=rounds,
                                            levels=est.get("level_values"))
    except PartialResultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        estimates = exc.rounds
        status = 1
    out = _ensure_out(args)
    payload = {"rounds": [
        {"l": e.round_index, "b1_hat": e.b1, "b2_hat": e.b2,
         "f_star_hat": e.f_star, "alpha_hat": e.alpha}
        for e in estimates
    ]}
    with open(os.path.join(out, "curvature.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    _write_sidecar(out, cfg, seed, {"estimate.samples": args.samples})
    print(f"estimate-curvature: {len(estimates)}/{rounds} rounds completed")
    return status


def _cmd_occupancy(args, cfg):
    solver, seed = build_solver_config(cfg, args.seed, args.iterations)
    if solver.variant != "gradient_free":
        raise ConfigError("solver.variant", "occupancy requires the gradient_free variant")
    trace = run_solver(solver, derive_stream(seed, 0))
    bins = args.bins if args.bins is not None else int(cfg.get("experiment", {}).get("bins", 200))
    hist = occupation_measure(trace, bins, box=solver.box)
    out = _ensure_out(args)
    write_histogram_csv(hist, os.path.join(out, "histogram.csv"))
    _write_sidecar(out, cfg, seed, {"experiment.bins": bins})
    print(f"occupancy: {len(trace) - 1} steps over {bins} bins")
    return 0


def _cmd_gradcheck(args, cfg):
    solver, seed = build_solver_config(cfg, args.seed, args.iterations)
    objective = solver.objective
    base = objective.expectation() if hasattr(objective, "expectation") else objective
    rng = derive_stream(seed, ESTIMATION_STREAM)
    n = args.samples if args.samples is not None else 1000
    worst = 0.0
    for _ in range(n):
        x = uniform_in_box(rng, solver.box)
        analytic = base.gradient(x)
        numeric = finite_diff_grad(base, x)
        err = np.max(np.abs(analytic - numeric)) / (1.0 + np.max(np.abs(analytic)))
        worst = max(worst, float(err))
    ok = worst < _GRADCHECK_TOL
    print(f"gradcheck: {n} points, max relative error {worst:.3e} "
          f"({'OK' if ok else 'FAIL'} at {_GRADCHECK_TOL:g})")
    return 0 if ok else 1


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adavar",
                                     description="State-dependent-noise SGD toolkit")
    parser.add_argument("--version", action="version", version=f"adavar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, out_required=True):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--iterations", type=int, default=None, help="iteration count override")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for multi-run commands")
        if out_required:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--samples", type=int, default=None, help="sample-count override")
        p.set_defaults(func=func)
        return p

    p_run = add("run", _cmd_run, "run one trajectory and write its trace")
    p_run.add_argument("--coords", action="store_true", help="include coordinates in the trace CSV")
    p_bench = add("bench", _cmd_bench, "multi-run convergence-probability experiment")
    p_bench.add_argument("--runs", type=int, default=None)
    p_bench.add_argument("--eps", type=float, default=None)
    p_lvl = add("estimate-levelset", _cmd_estimate_levelset,
                "invert the sublevel-volume CDF at requested levels")
    p_lvl.add_argument("--runs", type=int, default=None)
    p_lvl.add_argument("--eps", type=float, default=None)
    add("estimate-curvature", _cmd_estimate_curvature,
        "round-based curvature-bound estimation")
    p_occ = add("occupancy", _cmd_occupancy, "occupation histogram of a gradient-free run")
    p_occ.add_argument("--bins", type=int, default=None)
    add("gradcheck", _cmd_gradcheck, "verify analytic gradients against finite differences",
        out_required=False)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
