"""Comparison methods: independent per-task sparse PCA and multi-task PCA.

The independent baseline solves each task alone and unions the supports.
The multi-task baseline couples the tasks through an entrywise sup norm:
maximise sum_i <S^(i), H^(i)> - rho * sum_{j,l} max_i |H^(i)_{j,l}| with
every H^(i) in the Fantope.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidData, SolverDiverged
from .estimate import sample_cov
from .fantope import (SolveReport, SolverConfig, _project_fantope_raw,
                      extract_support)
from .matcore import SymMat


def independent_union(tasks, k: int, config: SolverConfig | None = None,
                      rho: float | None = None):
    """Union of supports from per-task solves with rho = sqrt(log(p+1)/n).

    Returns (per-task reports, union support tuple).
    """
    from dataclasses import replace

    from .fantope import solve_penalized

    tasks = list(tasks)
    if not tasks:
        raise InvalidData("need at least one task")
    config = config or SolverConfig()
    reports = []
    union = set()
    for task in tasks:
        s = sample_cov(task)
        task_rho = rho if rho is not None else math.sqrt(math.log(s.dim + 1) / task.n)
        report = solve_penalized(s, k, replace(config, rho=float(task_rho)))
        reports.append(report)
        union |= set(report.support)
    return reports, tuple(sorted(union))


def _project_l1_ball_fibers(v: np.ndarray, radius: float) -> np.ndarray:
    """Project every fiber v[:, j, l] onto the l1 ball of given radius.

    Vectorised sort/cumsum form of the same algorithm matcore applies to a
    single vector.
    """
    m = v.shape[0]
    flat = v.reshape(m, -1)
    absv = np.abs(flat)
    inside = absv.sum(axis=0) <= radius
    u = np.sort(absv, axis=0)[::-1]
    css = np.cumsum(u, axis=0)
    j = np.arange(1, m + 1)[:, None]
    cond = u - (css - radius) / j > 0
    # last index where the condition holds, per fiber
    r = m - 1 - np.argmax(cond[::-1], axis=0)
    theta = (np.take_along_axis(css, r[None], axis=0)[0] - radius) / (r + 1)
    theta = np.where(inside, 0.0, np.maximum(theta, 0.0))
    out = np.sign(flat) * np.maximum(absv - theta[None], 0.0)
    return out.reshape(v.shape)


def _prox_sup_fibers(v: np.ndarray, t: float) -> np.ndarray:
    """Prox of t * (sup over tasks) per entry, via Moreau decomposition."""
    if t <= 0:
        return v.copy()
    return v - _project_l1_ball_fibers(v, t)


def multitask_solve(tasks, k: int, config: SolverConfig | None = None,
                    rho: float | None = None):
    """Joint solve with the entrywise sup penalty across tasks.

    Same splitting as the single-task solver, with m independent Fantope
    projections and one joint fiber prox per iteration; stopping uses the
    max of the per-task residuals. Returns (per-task reports, union support).
    """
    tasks = list(tasks)
    if not tasks:
        raise InvalidData("need at least one task")
    m = len(tasks)
    dims = {t.p for t in tasks}
    if len(dims) != 1:
        raise InvalidData(f"tasks disagree on dimension: {sorted(dims)}")
    p = dims.pop()
    config = config or SolverConfig()
    if rho is None:
        total = sum(t.n for t in tasks)
        rho = math.sqrt(math.log(p + 1) / total)

    s_stack = np.stack([sample_cov(t).mat for t in tasks])
    if config.tau is not None:
        tau = config.tau
    else:
        tau = max(1.0, max(float(np.linalg.eigvalsh(s_i)[-1]) for s_i in s_stack))
    s_scaled = s_stack / tau
    shrink = rho / tau

    y = np.zeros((m, p, p))
    w = np.zeros((m, p, p))
    h = np.zeros((m, p, p))
    primal = np.inf
    dual = np.inf
    converged = False
    iterations = config.max_iter

    for it in range(1, config.max_iter + 1):
        for i in range(m):
            h[i] = _project_fantope_raw(y[i] - w[i] + s_scaled[i], k)
        y_prev = y
        y = _prox_sup_fibers(h + w, shrink)
        w = w + h - y
        if not np.isfinite(w).all():
            raise SolverDiverged(f"non-finite iterate at iteration {it} (tau={tau})")
        primal = max(float(np.linalg.norm(h[i] - y[i])) for i in range(m))
        dual = tau * max(float(np.linalg.norm(y[i] - y_prev[i])) for i in range(m))
        h_norm = max(float(np.linalg.norm(h[i])) for i in range(m))
        w_norm = max(float(np.linalg.norm(w[i])) for i in range(m))
        if (primal <= config.primal_tol * max(1.0, h_norm)
                and dual <= config.dual_tol * max(1.0, tau * w_norm)):
            converged = True
            iterations = it
            break

    reports = []
    union = set()
    for i in range(m):
        h_i = SymMat(h[i])
        objective = float((s_stack[i] * h[i]).sum()) - rho * float(np.abs(h[i]).sum())
        report = SolveReport(
            h_hat=h_i,
            y_hat=SymMat(y[i]),
            w_hat=SymMat(w[i]),
            support=(),
            objective=objective,
            iterations=iterations,
            primal_residual=primal,
            dual_residual=dual,
            converged=converged,
            tau=tau,
            objective_history=np.empty(0),
        )
        support = extract_support(report, config)
        object.__setattr__(report, "support", support)
        reports.append(report)
        union |= set(support)
    return reports, tuple(sorted(union))
