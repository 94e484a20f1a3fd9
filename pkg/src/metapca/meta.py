"""Support-union recovery pipeline: pool, pick the penalty, solve, extract."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidData
from .estimate import PooledCov, pooled_cov
from .fantope import SolveReport, SolverConfig, solve_penalized


def default_rho(p: int, m: int, n: float) -> float:
    """Penalty schedule sqrt(log(p + 1) / (m n)), natural logarithm."""
    if p < 1 or m < 1 or n <= 0:
        raise InvalidData("p, m, n must be positive")
    return math.sqrt(math.log(p + 1) / (m * n))


@dataclass(frozen=True)
class MetaResult:
    """Recovered union with the solve that produced it.

    ``t`` is the rescaled sample size (total samples) / log(p + 1).
    """

    j_hat: tuple
    report: SolveReport
    rho_used: float
    t: float
    pooled: PooledCov


def recover_support_union(tasks, k: int, rho: float | None = None,
                          config: SolverConfig | None = None) -> MetaResult:
    """Pool the tasks and recover the support union.

    The penalty defaults to the schedule above; with unequal sample counts
    the pooled weights follow the counts and the schedule uses the harmonic
    mean of the n_i (the model assumes equal n, so this is an extension
    flagged as such). An empty or too-small recovered set is a legitimate
    outcome recorded in the result, not an error.
    """
    pooled = pooled_cov(tasks)
    p = pooled.s.dim
    if rho is None:
        n_harm = pooled.m / sum(1.0 / n for n in pooled.n_per_task)
        rho = default_rho(p, pooled.m, n_harm)
    config = config or SolverConfig()
    config = replace(config, rho=float(rho))
    report = solve_penalized(pooled.s, k, config)
    t = sum(pooled.n_per_task) / math.log(p + 1)
    return MetaResult(j_hat=report.support, report=report, rho_used=float(rho),
                      t=t, pooled=pooled)
