"""Command-line front end.

Subcommands: gen, solve, meta, novel, compare, experiment, check-bounds.
Exit codes: 0 success, 2 invalid configuration, 3 I/O failure, 4 at least
one replication failed (results are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from .errors import MetapcaError, SolverDiverged
from .estimate import read_task_csv, read_task_dir
from .experiments import (EXPERIMENT_SUPPORT_EPS, ExperimentGrid,
                          emit_results, preset_grids, run_experiment)
from .fantope import SolverConfig, solve_penalized
from .genmodel import ModelSpec, generate_tasks, save_tasks
from .matcore import load_matrix_csv, save_matrix_csv
from .meta import recover_support_union
from .novel import recover_novel_support
from .theory import epsilon_for_bound, pooled_deviation, tail_bound_check

log = logging.getLogger("metapca")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=None, help="base RNG seed")
    sub.add_argument("--threads", type=int, default=None, help="worker threads")
    sub.add_argument("--out", type=str, default=None, help="output directory")
    sub.add_argument("--config", type=str, default=None,
                     help="key=value config file; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metapca",
        description="Pooled support-union recovery for sparse PCA, plus the "
                    "novel-task solver and experiment harness.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="generate synthetic task CSVs")
    gen.add_argument("--p", type=int, default=None)
    gen.add_argument("--k", type=int, default=None)
    gen.add_argument("--support", type=str, default=None,
                     help="comma-separated 0-based indices")
    gen.add_argument("--j-size", type=int, default=None,
                     help="use indices 0..J-1 when --support is absent")
    gen.add_argument("--m", type=int, default=None, help="number of tasks")
    gen.add_argument("--n", type=int, default=None, help="samples per task")
    gen.add_argument("--spike", type=float, default=None)
    gen.add_argument("--distribution", type=str, default=None,
                     choices=("gaussian", "uniform_mixture", "exponential_mixture"))
    _add_common(gen)

    solve = subs.add_parser("solve", help="solve one covariance CSV")
    solve.add_argument("--matrix", type=str, required=True)
    solve.add_argument("--k", type=int, required=True)
    solve.add_argument("--rho", type=float, default=0.0)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--support-eps", type=float, default=None)
    _add_common(solve)

    meta = subs.add_parser("meta", help="pooled support-union recovery")
    meta.add_argument("--tasks", type=str, required=True,
                      help="directory of task_<i>.csv files")
    meta.add_argument("--k", type=int, required=True)
    meta.add_argument("--rho", type=float, default=None)
    meta.add_argument("--max-iter", type=int, default=None)
    meta.add_argument("--support-eps", type=float, default=None)
    _add_common(meta)

    novel = subs.add_parser("novel", help="novel-task recovery inside a support")
    novel.add_argument("--task", type=str, required=True, help="novel task CSV")
    novel.add_argument("--support", type=str, required=True,
                       help="file with comma-separated union indices")
    novel.add_argument("--k", type=int, required=True)
    novel.add_argument("--rho", type=float, default=None)
    novel.add_argument("--max-iter", type=int, default=None)
    novel.add_argument("--support-eps", type=float, default=None)
    _add_common(novel)

    compare = subs.add_parser("compare",
                              help="pooled vs independent vs multi-task grids")
    compare.add_argument("--fast", action="store_true")
    compare.add_argument("--reps", type=int, default=None)
    compare.add_argument("--m-values", type=str, default=None)
    compare.add_argument("--no-figures", action="store_true")
    _add_common(compare)

    exp = subs.add_parser("experiment", help="run a named experiment grid")
    exp.add_argument("--preset", type=str, default="gaussian",
                     choices=("gaussian", "gaussian-full", "uniform",
                              "exponential", "novel", "compare"))
    exp.add_argument("--fast", action="store_true")
    exp.add_argument("--no-figures", action="store_true")
    _add_common(exp)

    bounds = subs.add_parser("check-bounds",
                             help="Monte-Carlo check of the pooled tail bound")
    bounds.add_argument("--p", type=int, default=None)
    bounds.add_argument("--k", type=int, default=None)
    bounds.add_argument("--j-size", type=int, default=None)
    bounds.add_argument("--m", type=int, default=None)
    bounds.add_argument("--n", type=int, default=None)
    bounds.add_argument("--reps", type=int, default=None)
    bounds.add_argument("--epsilons", type=str, default=None,
                        help="comma-separated deviation levels")
    bounds.add_argument("--bound-targets", type=str, default=None,
                        help="choose epsilons so the bound hits these values")
    bounds.add_argument("--sigma", type=float, default=None)
    _add_common(bounds)
    return parser


def _load_config(args) -> dict:
    return cfgmod.parse_config(args.config) if args.config else {}


def _resolve(flag, cfg, key, getter, default):
    if flag is not None:
        return flag
    value = getter(cfg, key, None)
    return default if value is None else value


def _out_dir(args, cfg) -> Path:
    out = _resolve(args.out, cfg, "out", lambda c, k, d: c.get(k, d), "metapca-out")
    return Path(out)


def _solver_config_from(args, cfg, default_eps, default_iter) -> SolverConfig:
    max_iter = _resolve(getattr(args, "max_iter", None), cfg, "max_iter",
                        cfgmod.get_int, default_iter)
    eps = _resolve(getattr(args, "support_eps", None), cfg, "support_eps",
                   cfgmod.get_float, default_eps)
    tol = _resolve(getattr(args, "tol", None), cfg, "tol", cfgmod.get_float, None)
    kwargs = dict(max_iter=max_iter, support_eps=eps)
    if tol is not None:
        kwargs.update(primal_tol=tol, dual_tol=tol)
    return SolverConfig(**kwargs)


def _write_kv(path: Path, pairs) -> None:
    path.write_text("\n".join(f"{k}={v}" for k, v in pairs) + "\n")


def _write_support(path: Path, support) -> None:
    path.write_text(",".join(str(j) for j in support) + "\n")


def _report_pairs(report, rho):
    return (
        ("objective", repr(report.objective)),
        ("iterations", report.iterations),
        ("primal_residual", repr(report.primal_residual)),
        ("dual_residual", repr(report.dual_residual)),
        ("converged", int(report.converged)),
        ("rho", repr(float(rho))),
        ("tau", repr(report.tau)),
        ("support_size", len(report.support)),
        ("support", ",".join(str(j) for j in report.support)),
    )


def _cmd_gen(args) -> int:
    cfg = _load_config(args)
    p = _resolve(args.p, cfg, "p", cfgmod.get_int, 50)
    k = _resolve(args.k, cfg, "k", cfgmod.get_int, 5)
    m = _resolve(args.m, cfg, "m", cfgmod.get_int, 10)
    n = _resolve(args.n, cfg, "n", cfgmod.get_int, 3)
    spike = _resolve(args.spike, cfg, "spike", cfgmod.get_float, 500.0)
    dist = _resolve(args.distribution, cfg, "distribution",
                    lambda c, key, d: c.get(key, d), "gaussian")
    seed = _resolve(args.seed, cfg, "seed", cfgmod.get_int, 0)
    if args.support is not None:
        support = tuple(int(x) for x in args.support.split(","))
    else:
        j_size = _resolve(args.j_size, cfg, "j_size", cfgmod.get_int, k)
        support = tuple(range(j_size))
    spec = ModelSpec(p=p, k=k, support=support, spike=spike,
                     distribution=dist, seed=seed)
    gt, tasks = generate_tasks(spec, m, n)
    written = save_tasks(_out_dir(args, cfg), gt, tasks)
    print(f"wrote {len(written)} files to {_out_dir(args, cfg)}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    s = load_matrix_csv(args.matrix)
    config = _solver_config_from(args, cfg,
                                 default_eps=SolverConfig().support_eps,
                                 default_iter=5000)
    config = replace(config, rho=args.rho)
    report = solve_penalized(s, args.k, config)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out / "h_hat.csv", report.h_hat)
    _write_support(out / "support.txt", report.support)
    _write_kv(out / "summary.txt", _report_pairs(report, args.rho))
    print(f"objective={report.objective:.6f} iterations={report.iterations} "
          f"support={list(report.support)}")
    return EXIT_OK


def _cmd_meta(args) -> int:
    cfg = _load_config(args)
    tasks = read_task_dir(args.tasks)
    config = _solver_config_from(args, cfg, default_eps=EXPERIMENT_SUPPORT_EPS,
                                 default_iter=5000)
    result = recover_support_union(tasks, args.k, rho=args.rho, config=config)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out / "h_hat.csv", result.report.h_hat)
    _write_support(out / "support.txt", result.j_hat)
    pairs = _report_pairs(result.report, result.rho_used) + (("t", repr(result.t)),)
    _write_kv(out / "summary.txt", pairs)
    print(f"recovered support: {list(result.j_hat)} (rho={result.rho_used:.5f}, "
          f"T={result.t:.2f})")
    return EXIT_OK


def _cmd_novel(args) -> int:
    cfg = _load_config(args)
    task = read_task_csv(args.task, task_id=1)
    text = Path(args.support).read_text().strip()
    support = tuple(int(x) for x in text.split(",")) if text else ()
    config = _solver_config_from(args, cfg, default_eps=EXPERIMENT_SUPPORT_EPS,
                                 default_iter=5000)
    result = recover_novel_support(task, support, args.k, rho=args.rho,
                                   config=config)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out / "h_novel.csv", result.embedded_h)
    _write_support(out / "support.txt", result.j_novel)
    _write_kv(out / "summary.txt", _report_pairs(result.report, result.rho_used))
    extra = sorted(set(support) - set(result.j_novel))
    print(f"novel support: {list(result.j_novel)}; extra zeros: {extra}")
    return EXIT_OK


def _run_grids(grids, args, cfg) -> int:
    threads = _resolve(args.threads, cfg, "threads", cfgmod.get_int, 1)
    rows = []
    for grid in grids:
        log.info("running %s: %d points x %d reps",
                 grid.setting, len(grid.points()), grid.reps)
        rows.extend(run_experiment(grid, parallelism=threads))
    out = _out_dir(args, cfg)
    paths = emit_results(rows, out)
    print(f"wrote {paths['results']}")
    if not getattr(args, "no_figures", False):
        from .experiments import summarize
        from .plots import render_figures
        for fig in render_figures(summarize(rows), out):
            print(f"wrote {fig}")
    if any(r.iterations < 0 for r in rows):
        print("warning: some replications failed; see results.csv", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _grid_overrides(cfg: dict, grid: ExperimentGrid) -> ExperimentGrid:
    updates = {}
    for key, getter in (
        ("p", cfgmod.get_int), ("k", cfgmod.get_int), ("j_size", cfgmod.get_int),
        ("spike", cfgmod.get_float), ("reps", cfgmod.get_int),
        ("base_seed", cfgmod.get_int), ("union_n", cfgmod.get_int),
        ("union_t", cfgmod.get_float), ("max_iter", cfgmod.get_int),
        ("support_eps", cfgmod.get_float), ("zero_mean_d", cfgmod.get_bool),
        ("center_delta", cfgmod.get_bool),
        ("n_values", cfgmod.get_int_list), ("t_values", cfgmod.get_float_list),
        ("m_values", cfgmod.get_int_list), ("extra_zeros", cfgmod.get_int_list),
    ):
        value = getter(cfg, key, None)
        if value is not None:
            updates[key] = value
    for key in ("d_kind", "mixture_mode", "setting"):
        if key in cfg:
            updates[key] = cfg[key]
    return replace(grid, **updates) if updates else grid


def _cmd_experiment(args) -> int:
    cfg = _load_config(args)
    seed = _resolve(args.seed, cfg, "seed", cfgmod.get_int, 0)
    grids = preset_grids(args.preset, fast=args.fast, base_seed=seed)
    grids = [_grid_overrides(cfg, g) for g in grids]
    return _run_grids(grids, args, cfg)


def _cmd_compare(args) -> int:
    cfg = _load_config(args)
    seed = _resolve(args.seed, cfg, "seed", cfgmod.get_int, 0)
    grids = preset_grids("compare", fast=args.fast, base_seed=seed)
    reps = _resolve(args.reps, cfg, "reps", cfgmod.get_int, None)
    m_values = (tuple(int(x) for x in args.m_values.split(","))
                if args.m_values else cfgmod.get_int_list(cfg, "m_values", None))
    updates = {}
    if reps is not None:
        updates["reps"] = reps
    if m_values is not None:
        updates["m_values"] = m_values
    if updates:
        grids = [replace(g, **updates) for g in grids]
    return _run_grids(grids, args, cfg)


def _cmd_check_bounds(args) -> int:
    cfg = _load_config(args)
    p = _resolve(args.p, cfg, "p", cfgmod.get_int, 3)
    k = _resolve(args.k, cfg, "k", cfgmod.get_int, 1)
    j_size = _resolve(args.j_size, cfg, "j_size", cfgmod.get_int, min(2, p))
    m = _resolve(args.m, cfg, "m", cfgmod.get_int, 10)
    n = _resolve(args.n, cfg, "n", cfgmod.get_int, 10)
    reps = _resolve(args.reps, cfg, "reps", cfgmod.get_int, 200)
    sigma = _resolve(args.sigma, cfg, "sigma", cfgmod.get_float, 1.0)
    seed = _resolve(args.seed, cfg, "seed", cfgmod.get_int, 0)
    spec = ModelSpec(p=p, k=k, support=tuple(range(j_size)), seed=seed)

    if args.epsilons:
        epsilons = [float(x) for x in args.epsilons.split(",")]
    else:
        targets = ([float(x) for x in args.bound_targets.split(",")]
                   if args.bound_targets else [0.25, 0.5])
        # probe eta on one replication, then invert the bound
        _, eta_probe = pooled_deviation(spec, m, n, 0)
        epsilons = [epsilon_for_bound(p, m, n, eta_probe, tgt, sigma)
                    for tgt in targets]

    result = tail_bound_check(spec, m, n, epsilons, reps, sigma_param=sigma)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "bounds.csv"
    lines = ["epsilon,freq,bound,vacuous_flag,reps,in_validity"]
    for row in result.rows:
        lines.append(f"{row.epsilon!r},{row.freq!r},{row.bound!r},"
                     f"{int(row.vacuous)},{row.reps},{int(row.in_validity)}")
    path.write_text("\n".join(lines) + "\n")
    print(f"eta={result.eta:.4f}")
    for row in result.rows:
        flag = " (vacuous)" if row.vacuous else ""
        print(f"eps={row.epsilon:.4f} freq={row.freq:.4f} bound={row.bound:.4f}{flag}")
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "meta": _cmd_meta,
    "novel": _cmd_novel,
    "compare": _cmd_compare,
    "experiment": _cmd_experiment,
    "check-bounds": _cmd_check_bounds,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except SolverDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except MetapcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
