"""Sample covariances, the pooled improper estimator, and submatrix extraction."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidData, InvalidIndex
from .genmodel import TaskData
from .matcore import SymMat, as_matrix


@dataclass(frozen=True)
class PooledCov:
    """Pooled second-moment estimate S = sum_i T_i S^(i)."""

    s: SymMat
    m: int
    n_per_task: tuple
    weights: tuple

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise InvalidData("pooled weights must sum to 1")


def sample_cov(data, center: bool = False) -> SymMat:
    """Uncentered second-moment matrix (1/n) sum_j x_j x_j^T.

    The model fixes mean zero, so no mean is subtracted by default; pass
    ``center`` for real data where that premise fails.
    """
    x = data.samples if isinstance(data, TaskData) else np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidData("need a nonempty 2-D sample array")
    if center:
        x = x - x.mean(axis=0)
    n = x.shape[0]
    return SymMat(x.T @ x / n)


def pooled_cov(tasks, center: bool = False) -> PooledCov:
    """Pool per-task covariances with weights proportional to sample counts.

    Equal sample sizes reduce the weights to 1/m. Reduction happens in task
    list order, which callers keep sorted by task id for determinism.
    """
    tasks = list(tasks)
    if not tasks:
        raise InvalidData("need at least one task")
    dims = {t.p for t in tasks}
    if len(dims) != 1:
        raise InvalidData(f"tasks disagree on dimension: {sorted(dims)}")
    counts = np.array([t.n for t in tasks], dtype=float)
    weights = counts / counts.sum()
    p = dims.pop()
    acc = np.zeros((p, p))
    for w, t in zip(weights, tasks):
        acc += w * sample_cov(t, center=center).mat
    return PooledCov(
        s=SymMat(acc),
        m=len(tasks),
        n_per_task=tuple(int(c) for c in counts),
        weights=tuple(float(w) for w in weights),
    )


def submatrix(a, indices) -> SymMat:
    """Restrict rows and columns to an index set, ascending order preserved."""
    m = as_matrix(a)
    p = m.shape[0]
    idx = sorted(int(i) for i in indices)
    if not idx:
        raise InvalidIndex("index set must be nonempty")
    if len(set(idx)) != len(idx):
        raise InvalidIndex("index set must not repeat indices")
    if idx[0] < 0 or idx[-1] >= p:
        raise InvalidIndex(f"indices out of range for dimension {p}")
    sub = m[np.ix_(idx, idx)]
    return SymMat(sub)


def read_task_csv(path, task_id: int = 0) -> TaskData:
    """Read one task's observations (rows) from a plain CSV."""
    arr = np.loadtxt(Path(path), delimiter=",", ndmin=2, dtype=float)
    return TaskData(samples=arr, true_cov=None, task_id=task_id)


def read_task_dir(path) -> list:
    """Read every task_<i>.csv in a directory, sorted by task id."""
    files = sorted(Path(path).glob("task_*.csv"),
                   key=lambda f: int(f.stem.split("_")[1]))
    if not files:
        raise InvalidData(f"no task_<i>.csv files found in {path}")
    return [read_task_csv(f, task_id=int(f.stem.split("_")[1])) for f in files]
