"""Seeded experiment grids, replication engine, and CSV persistence.

Every replication is a pure function of (base_seed, setting, grid point,
rep index), so the worker-pool degree never changes a byte of the output:
rows are keyed and sorted before writing. Wall-clock timings are inherently
nondeterministic and therefore go to a separate timings.csv instead of
results.csv.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .baselines import independent_union, multitask_solve
from .errors import InvalidSpec, MetapcaError
from .fantope import SolverConfig
from .genmodel import (ModelSpec, PURPOSE_REPLICATION, derive_seed,
                       generate_tasks, stream)
from .matcore import norm
from .meta import recover_support_union
from .novel import recover_novel_support

log = logging.getLogger(__name__)

SETTINGS = (
    "gaussian",
    "uniform_mixture",
    "exponential_mixture",
    "comparison_independent",
    "comparison_multitask",
    "novel",
)
_SETTING_CODE = {name: i for i, name in enumerate(SETTINGS)}
_UNION_SETTINGS = ("gaussian", "uniform_mixture", "exponential_mixture")

# Support cutoff for the experiment profile. The optimiser's off-support
# diagonal carries leaks of order (noise / spike)^2 <= 1e-3 at the experiment
# sample sizes while true-support diagonals are Theta(1), so this cutoff
# separates them by an order of magnitude on both sides.
EXPERIMENT_SUPPORT_EPS = 0.01
# Iteration cap for grid runs; outcomes match the 5000 default on every
# tested cell, the cap only shortens the hopeless rank-deficient solves.
EXPERIMENT_MAX_ITER = 1500


def t_to_m(t: float, p: int, n: int) -> int:
    """Convert a rescaled sample size T to a task count, at least 1."""
    return max(1, int(math.floor(t * math.log(p + 1) / n + 0.5)))


def t_to_n_novel(t: float, j_size: int) -> int:
    """Convert a novel-task T to a sample count, at least 1."""
    return max(1, int(math.floor(t * math.log(j_size + 1) + 0.5)))


@dataclass(frozen=True)
class ExperimentGrid:
    """Replication plan over one setting.

    Union settings sweep either the (n, T) axes (T converts to
    m = round(T log(p+1) / n)) or a direct task-count axis ``m_values`` at a
    single n. The novel setting sweeps (extra_zeros, T) where T converts to
    the novel sample count. ``union_n`` / ``union_t`` fix the auxiliary
    union-recovery profile that precedes each novel solve.
    """

    setting: str
    p: int = 50
    k: int = 5
    j_size: int = 5
    spike: float = 500.0
    n_values: tuple = ()
    t_values: tuple = ()
    m_values: tuple = ()
    extra_zeros: tuple = ()
    reps: int = 100
    base_seed: int = 0
    union_n: int = 3
    union_t: float = 15.0
    max_iter: int = EXPERIMENT_MAX_ITER
    support_eps: float = EXPERIMENT_SUPPORT_EPS
    d_kind: str = "offdiag"
    zero_mean_d: bool = False
    mixture_mode: str = "mixture"
    center_delta: bool = True

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise InvalidSpec(f"unknown setting {self.setting!r}")
        if self.reps < 1:
            raise InvalidSpec("reps must be >= 1")
        for name in ("n_values", "t_values", "m_values", "extra_zeros"):
            vals = tuple(getattr(self, name))
            if any(v <= 0 for v in vals):
                raise InvalidSpec(f"{name} must be positive")
            object.__setattr__(self, name, vals)
        if not 0 < self.k <= self.j_size <= self.p:
            raise InvalidSpec("need 0 < k <= |J| <= p")
        if self.setting == "novel":
            if not (self.extra_zeros and self.t_values):
                raise InvalidSpec("novel grids sweep extra_zeros x t_values")
            if any(self.j_size - e < 1 for e in self.extra_zeros):
                raise InvalidSpec("extra_zeros must leave at least one support index")
        elif self.setting.startswith("comparison"):
            if not self.m_values or len(self.n_values) != 1:
                raise InvalidSpec("comparison grids sweep m_values at a single n")
        else:
            if self.m_values:
                if len(self.n_values) != 1:
                    raise InvalidSpec("an m axis requires a single n")
                if self.t_values:
                    raise InvalidSpec("sweep either t_values or m_values, not both")
            elif not (self.n_values and self.t_values):
                raise InvalidSpec("union grids sweep n_values x t_values")

    @property
    def distribution(self) -> str:
        if self.setting in ("uniform_mixture", "exponential_mixture"):
            return self.setting
        return "gaussian"

    def points(self) -> list:
        """Resolved grid points as integer tuples (seed-key material)."""
        if self.setting == "novel":
            return [(int(e), t_to_n_novel(t, self.j_size))
                    for e in self.extra_zeros for t in self.t_values]
        if self.m_values:
            n = int(self.n_values[0])
            return [(n, int(m)) for m in self.m_values]
        return [(int(n), t_to_m(t, self.p, n))
                for n in self.n_values for t in self.t_values]


@dataclass(frozen=True)
class ResultRow:
    """One replication's outcome. ``recovered`` is 1 iff hamming is 0;
    failed replications carry hamming -1, err_inf nan, iterations -1."""

    setting: str
    p: int
    k: int
    j_size: int
    n: int
    m: int
    t: float
    rho: float
    rep_index: int
    recovered: int
    support_hamming: int
    err_inf: float
    iterations: int
    runtime_ms: float


RESULT_COLUMNS = ("setting", "p", "k", "j_size", "n", "m", "t", "rho",
                  "rep_index", "recovered", "support_hamming", "err_inf",
                  "iterations")
TIMING_COLUMNS = ("setting", "p", "k", "j_size", "n", "m", "rep_index",
                  "runtime_ms")


def _solver_config(grid: ExperimentGrid) -> SolverConfig:
    return SolverConfig(max_iter=grid.max_iter, support_eps=grid.support_eps)


def _rep_support(grid: ExperimentGrid, rep_seed: int) -> tuple:
    rng = stream(rep_seed, 0, PURPOSE_REPLICATION)
    return tuple(sorted(int(j) for j in rng.choice(grid.p, grid.j_size, replace=False)))


def _union_model(grid: ExperimentGrid, rep_seed: int) -> ModelSpec:
    return ModelSpec(
        p=grid.p, k=grid.k, support=_rep_support(grid, rep_seed),
        spike=grid.spike, d_kind=grid.d_kind, zero_mean_d=grid.zero_mean_d,
        distribution=grid.distribution, mixture_mode=grid.mixture_mode,
        center_delta=grid.center_delta, seed=derive_seed(rep_seed, 1),
    )


def _union_rep(grid: ExperimentGrid, n: int, m: int, rep: int, rep_seed: int) -> ResultRow:
    spec = _union_model(grid, rep_seed)
    gt, tasks = generate_tasks(spec, m, n)
    result = recover_support_union(tasks, grid.k, config=_solver_config(grid))
    hamming = len(set(result.j_hat) ^ set(gt.support))
    err = norm(result.report.h_hat.mat - gt.pi.mat, "inf_inf")
    return ResultRow(
        setting=grid.setting, p=grid.p, k=grid.k, j_size=grid.j_size,
        n=n, m=m, t=result.t, rho=result.rho_used, rep_index=rep,
        recovered=int(hamming == 0), support_hamming=hamming,
        err_inf=err, iterations=result.report.iterations, runtime_ms=0.0,
    )


def _comparison_rep(grid: ExperimentGrid, n: int, m: int, rep: int, rep_seed: int) -> ResultRow:
    spec = _union_model(grid, rep_seed)
    gt, tasks = generate_tasks(spec, m, n)
    config = _solver_config(grid)
    if grid.setting == "comparison_independent":
        reports, union = independent_union(tasks, grid.k, config=config)
    else:
        reports, union = multitask_solve(tasks, grid.k, config=config)
    hamming = len(set(union) ^ set(gt.support))
    t = m * n / math.log(grid.p + 1)
    rho = (math.sqrt(math.log(grid.p + 1) / n)
           if grid.setting == "comparison_independent"
           else math.sqrt(math.log(grid.p + 1) / (m * n)))
    return ResultRow(
        setting=grid.setting, p=grid.p, k=grid.k, j_size=grid.j_size,
        n=n, m=m, t=t, rho=rho, rep_index=rep,
        recovered=int(hamming == 0), support_hamming=hamming,
        err_inf=float("nan"),
        iterations=max(r.iterations for r in reports), runtime_ms=0.0,
    )


def _novel_rep(grid: ExperimentGrid, extra: int, n: int, rep: int, rep_seed: int) -> ResultRow:
    union_spec = _union_model(grid, rep_seed)
    union_m = t_to_m(grid.union_t, grid.p, grid.union_n)
    config = _solver_config(grid)
    gt, tasks = generate_tasks(union_spec, union_m, grid.union_n)
    union_result = recover_support_union(tasks, grid.k, config=config)
    j_hat = union_result.j_hat

    k_novel = grid.j_size - extra
    support_novel = gt.support[:k_novel]
    novel_spec = ModelSpec(
        p=grid.p, k=k_novel, support=support_novel, spike=grid.spike,
        d_kind="none", r_scale=0.0, distribution="gaussian",
        seed=derive_seed(rep_seed, 2),
    )
    gt_novel, novel_tasks = generate_tasks(novel_spec, 1, n)
    result = recover_novel_support(novel_tasks[0], j_hat, k_novel, config=config)
    hamming = len(set(result.j_novel) ^ set(support_novel))
    err = norm(result.embedded_h.mat - gt_novel.pi.mat, "inf_inf")
    return ResultRow(
        setting=grid.setting, p=grid.p, k=k_novel, j_size=grid.j_size,
        n=n, m=union_m, t=n / math.log(grid.j_size + 1),
        rho=result.rho_used, rep_index=rep,
        recovered=int(hamming == 0), support_hamming=hamming,
        err_inf=err, iterations=result.report.iterations, runtime_ms=0.0,
    )


def _failure_row(grid: ExperimentGrid, point, rep: int) -> ResultRow:
    a, b = point
    if grid.setting == "novel":
        extra, n = a, b
        k, m = grid.j_size - extra, t_to_m(grid.union_t, grid.p, grid.union_n)
        t = n / math.log(grid.j_size + 1)
    else:
        n, m = a, b
        k, t = grid.k, m * n / math.log(grid.p + 1)
    return ResultRow(
        setting=grid.setting, p=grid.p, k=k, j_size=grid.j_size, n=n, m=m,
        t=t, rho=float("nan"), rep_index=rep, recovered=0,
        support_hamming=-1, err_inf=float("nan"), iterations=-1,
        runtime_ms=0.0,
    )


def _run_one(grid: ExperimentGrid, point, rep: int) -> ResultRow:
    rep_seed = derive_seed(grid.base_seed, _SETTING_CODE[grid.setting],
                           point[0], point[1], rep)
    started = time.perf_counter()
    try:
        if grid.setting == "novel":
            row = _novel_rep(grid, point[0], point[1], rep, rep_seed)
        elif grid.setting.startswith("comparison"):
            row = _comparison_rep(grid, point[0], point[1], rep, rep_seed)
        else:
            row = _union_rep(grid, point[0], point[1], rep, rep_seed)
    except MetapcaError as exc:
        log.warning("replication failed: %s point=%s rep=%d: %s",
                    grid.setting, point, rep, exc)
        row = _failure_row(grid, point, rep)
    elapsed = (time.perf_counter() - started) * 1e3
    return replace(row, runtime_ms=elapsed)


def _row_key(row: ResultRow):
    return (row.setting, row.p, row.k, row.j_size, row.n, row.m, row.rep_index)


def run_experiment(grid: ExperimentGrid, parallelism: int = 1) -> list:
    """Run every (grid point, rep) replication; rows come back sorted.

    The output set is a pure function of (grid, base_seed); ``parallelism``
    only changes the wall clock.
    """
    jobs = [(point, rep) for point in grid.points() for rep in range(grid.reps)]
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(lambda j: _run_one(grid, j[0], j[1]), jobs))
    else:
        rows = [_run_one(grid, point, rep) for point, rep in jobs]
    rows.sort(key=_row_key)
    return rows


@dataclass(frozen=True)
class SummaryRow:
    """Per grid point aggregate.

    ``paper_dispersion`` is P(1-P)/reps exactly as the experiment protocol
    states it (a variance, despite being called a standard deviation there);
    ``std_err`` is its square root.
    """

    setting: str
    p: int
    k: int
    j_size: int
    n: int
    m: int
    t: float
    reps: int
    recovery_mean: float
    paper_dispersion: float
    std_err: float
    err_inf_mean: float


SUMMARY_COLUMNS = ("setting", "p", "k", "j_size", "n", "m", "t", "reps",
                   "recovery_mean", "paper_dispersion", "std_err",
                   "err_inf_mean")


def summarize(rows, row_filter=None) -> list:
    """Group rows by grid point and aggregate recovery and error.

    ``row_filter`` drops rows before aggregation; a grid point whose rows are
    all dropped is omitted with a warning.
    """
    groups: dict = {}
    order = []
    for row in rows:
        key = (row.setting, row.p, row.k, row.j_size, row.n, row.m)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)

    out = []
    for key in order:
        kept = [r for r in groups[key] if row_filter is None or row_filter(r)]
        if not kept:
            log.warning("summary group %s empty after filtering; omitted", key)
            continue
        reps = len(kept)
        mean = sum(r.recovered for r in kept) / reps
        dispersion = mean * (1.0 - mean) / reps
        errs = [r.err_inf for r in kept if math.isfinite(r.err_inf)]
        err_mean = sum(errs) / len(errs) if errs else float("nan")
        out.append(SummaryRow(
            setting=key[0], p=key[1], k=key[2], j_size=key[3], n=key[4],
            m=key[5], t=kept[0].t, reps=reps, recovery_mean=mean,
            paper_dispersion=dispersion, std_err=math.sqrt(dispersion),
            err_inf_mean=err_mean,
        ))
    return out


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns, records) -> None:
    lines = [",".join(columns)]
    for rec in records:
        lines.append(",".join(_fmt(getattr(rec, c)) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def emit_results(rows, out_path) -> dict:
    """Write results.csv, timings.csv, summary.csv, and per-curve .dat files.

    Floats are written in round-trip decimal form. The wall-clock column
    lives in timings.csv so results.csv stays byte-deterministic.
    Returns a dict of the written paths.
    """
    rows = list(rows)
    if not rows:
        raise InvalidSpec("no rows to emit")
    out = Path(out_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create output directory {out}: {exc}") from exc

    paths = {}
    results = out / "results.csv"
    _write_csv(results, RESULT_COLUMNS, rows)
    paths["results"] = results

    timings = out / "timings.csv"
    _write_csv(timings, TIMING_COLUMNS, rows)
    paths["timings"] = timings

    summary_rows = summarize(rows)
    summary = out / "summary.csv"
    _write_csv(summary, SUMMARY_COLUMNS, summary_rows)
    paths["summary"] = summary

    paths["curves"] = []
    for setting in dict.fromkeys(s.setting for s in summary_rows):
        per_setting = [s for s in summary_rows if s.setting == setting]
        if setting == "novel":
            curve_ids = sorted({s.k for s in per_setting})
            label = "k"
        else:
            curve_ids = sorted({s.n for s in per_setting})
            label = "n"
        x_attr = "m" if setting.startswith("comparison") else "t"
        for cid in curve_ids:
            pts = sorted(
                (s for s in per_setting if getattr(s, label) == cid),
                key=lambda s: getattr(s, x_attr),
            )
            name = out / f"curve_{setting}_{label}{cid}.dat"
            lines = [f"# {x_attr} recovery_mean std_err err_inf_mean"]
            for s in pts:
                lines.append(f"{_fmt(getattr(s, x_attr))} {_fmt(s.recovery_mean)} "
                             f"{_fmt(s.std_err)} {_fmt(s.err_inf_mean)}")
            name.write_text("\n".join(lines) + "\n")
            paths["curves"].append(name)
    return paths


def preset_grids(name: str, fast: bool = False, base_seed: int = 0) -> list:
    """Named experiment profiles reproducing the synthetic protocols."""
    if name == "gaussian":
        grid = ExperimentGrid(setting="gaussian", p=50, k=5, j_size=5,
                              n_values=(3, 9), t_values=(1, 5, 10, 15),
                              reps=100, base_seed=base_seed)
        if fast:
            grid = replace(grid, p=30, reps=50)
        return [grid]
    if name == "gaussian-full":
        grid = ExperimentGrid(setting="gaussian", p=50, k=5, j_size=5,
                              n_values=(3, 5, 7, 9),
                              t_values=tuple(range(1, 16)),
                              reps=100, base_seed=base_seed)
        if fast:
            grid = replace(grid, p=30, reps=50)
        return [grid]
    if name == "uniform":
        grid = ExperimentGrid(setting="uniform_mixture", p=80, k=6, j_size=6,
                              n_values=(3, 5, 7, 9),
                              t_values=tuple(range(1, 16)),
                              reps=100, base_seed=base_seed)
        if fast:
            grid = replace(grid, p=40, reps=25)
        return [grid]
    if name == "exponential":
        grid = ExperimentGrid(setting="exponential_mixture", p=50, k=6,
                              j_size=6, n_values=(5,),
                              t_values=tuple(range(1, 16)),
                              reps=100, base_seed=base_seed)
        if fast:
            grid = replace(grid, p=30, reps=25)
        return [grid]
    if name == "novel":
        grid = ExperimentGrid(setting="novel", p=50, k=5, j_size=5,
                              extra_zeros=(2, 3, 4),
                              t_values=(10, 15, 20, 25),
                              reps=100, base_seed=base_seed)
        if fast:
            grid = replace(grid, p=30, reps=50)
        return [grid]
    if name == "compare":
        reps = 8 if fast else 16
        common = dict(p=50, k=5, j_size=5, n_values=(3,),
                      m_values=(2, 3, 4, 6, 7, 8, 10, 11, 12, 14),
                      reps=reps, base_seed=base_seed)
        if fast:
            common["p"] = 30
            common["m_values"] = (2, 6, 10, 14)
        return [ExperimentGrid(setting="gaussian", **common),
                ExperimentGrid(setting="comparison_independent", **common),
                ExperimentGrid(setting="comparison_multitask", **common)]
    raise InvalidSpec(f"unknown preset {name!r}")
