"""Novel-task support recovery restricted to a previously recovered union."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidSpec
from .estimate import sample_cov, submatrix
from .fantope import SolveReport, SolverConfig, solve_penalized
from .matcore import SymMat


def default_novel_rho(j_size: int, n: int) -> float:
    """Novel-task penalty schedule sqrt(log(|J| + 1) / n)."""
    if j_size < 1 or n < 1:
        raise InvalidSpec("j_size and n must be positive")
    return math.sqrt(math.log(j_size + 1) / n)


@dataclass(frozen=True)
class NovelResult:
    """Support recovered inside the union, expressed in original indices.

    ``embedded_h`` is the restricted solution placed back into p x p with
    exact zeros outside J x J.
    """

    j_novel: tuple
    report: SolveReport
    embedded_h: SymMat
    rho_used: float


def restriction_map(support):
    """Order-preserving maps between original indices and restricted positions."""
    ordered = tuple(sorted(int(j) for j in support))
    to_restricted = {j: r for r, j in enumerate(ordered)}
    return ordered, to_restricted


def recover_novel_support(data, support, k: int, rho: float | None = None,
                          config: SolverConfig | None = None,
                          p_full: int | None = None) -> NovelResult:
    """Solve the |J| x |J| problem on the novel task and embed the answer.

    ``data`` supplies the novel observations; ``support`` is the recovered
    union J in original coordinates. Requires |J| > k for the restricted
    Fantope to have slack.
    """
    ordered, _ = restriction_map(support)
    if len(ordered) <= k:
        raise InvalidSpec(f"need |J| > k, got |J|={len(ordered)}, k={k}")
    s_full = sample_cov(data)
    p = p_full if p_full is not None else s_full.dim
    s_sub = submatrix(s_full, ordered)
    if rho is None:
        n = data.samples.shape[0] if hasattr(data, "samples") else len(data)
        rho = default_novel_rho(len(ordered), n)
    config = config or SolverConfig()
    config = replace(config, rho=float(rho))
    report = solve_penalized(s_sub, k, config)

    j_novel = tuple(ordered[r] for r in report.support)
    embedded = np.zeros((p, p))
    embedded[np.ix_(ordered, ordered)] = report.h_hat.mat
    return NovelResult(j_novel=j_novel, report=report,
                       embedded_h=SymMat(embedded), rho_used=float(rho))
