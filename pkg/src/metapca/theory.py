"""Executable diagnostics for the theoretical quantities.

Nothing here gates the pipeline: the thresholds involve generative-model
constants known only in synthetic settings, so they are reported, and the
tail bound is checked empirically by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolated, InvalidSpec
from .estimate import sample_cov
from .genmodel import (GroundTruth, ModelSpec, PURPOSE_REPLICATION, derive_seed,
                       generate_tasks)
from .matcore import norm


@dataclass(frozen=True)
class TheoryReport:
    """Threshold constants and assumption checks for one ground truth."""

    lambda_diff: float
    lambda_dagger: float
    rho1: float
    rho2: float
    assumption4_lhs: float
    theorem1_upper: float
    c_n1: float
    c_n2: float
    c_n3: float
    alpha_novel: float


def compute_thresholds(gt: GroundTruth, c_r: float, l_bound: float,
                       sigma_param: float, m: int, n: int) -> TheoryReport:
    """Evaluate the threshold constants exactly as defined.

    ``c_r`` and ``l_bound`` are the rotation and eigenvalue-noise constants
    of the generative model; they are inputs because they are knowable only
    in synthetic settings. ``sigma_param`` is the sub-Gaussian parameter
    (1 for unit-variance Gaussians under this package's convention).
    """
    lam_diff = gt.lambda_diff
    if lam_diff <= 0:
        raise AssumptionViolated("spectral gap lambda_k - lambda_{k+1} must be positive")
    p = gt.sigma.dim
    lam1 = float(gt.lam[0])
    j_size = len(gt.support)

    lam_dagger = 2.0 * (c_r + 1.0) ** 2 * (lam1 + l_bound)
    rho1 = (4.0 * lam_dagger * math.sqrt(math.log(p) / m)
            + (c_r / p) * lam1 + 2.0 * math.sqrt(c_r / p) * lam1)
    rho2 = 16.0 * math.sqrt(2.0 * sigma_param**4 * lam_dagger * math.log(p + 1) / (n * m))

    off = np.delete(np.arange(p), np.asarray(gt.support, dtype=int))
    if off.size:
        block = gt.sigma.mat[np.ix_(off, np.asarray(gt.support, dtype=int))]
        cross = norm(block, "two_inf")
    else:
        cross = 0.0
    assumption4_lhs = 8.0 * j_size / lam_diff * cross

    pi_diag = np.diag(gt.pi.mat)[np.asarray(gt.support, dtype=int)]
    min_pi = float(pi_diag.min())
    theorem1_upper = min(
        lam_diff * min_pi / (16.0 * j_size),
        lam_diff**2 / (4.0 * j_size * (lam_diff + 8.0 * lam1)),
    )

    c_n1 = 1.0 / (32.0 * lam1 * sigma_param**2)
    c_n2 = 4.0 * j_size * (1.0 + 8.0 * lam1 / lam_diff) / lam_diff
    c_n3 = lam_diff * min_pi / (4.0 * j_size)
    alpha_novel = 1.0 - assumption4_lhs

    return TheoryReport(
        lambda_diff=lam_diff,
        lambda_dagger=lam_dagger,
        rho1=rho1,
        rho2=rho2,
        assumption4_lhs=assumption4_lhs,
        theorem1_upper=theorem1_upper,
        c_n1=c_n1,
        c_n2=c_n2,
        c_n3=c_n3,
        alpha_novel=alpha_novel,
    )


@dataclass(frozen=True)
class TailBoundRow:
    """One epsilon's empirical frequency against the analytic bound."""

    epsilon: float
    freq: float
    bound: float
    vacuous: bool
    reps: int
    in_validity: bool


@dataclass(frozen=True)
class TailBoundResult:
    rows: tuple
    eta: float
    sigma_param: float
    m: int
    n: int
    reps: int


def pooled_deviation(spec: ModelSpec, m: int, n: int, rep: int):
    """One replication's deviation ||(1/m) sum (S^(i) - Sigma^(i))||_inf,inf.

    Returns (deviation, eta_rep) where eta_rep = max_i ||Sigma^(i)||_inf,inf
    over the replication's tasks.
    """
    rep_spec = ModelSpec(
        p=spec.p, k=spec.k, support=spec.support, spike=spec.spike,
        spectrum=spec.spectrum, r_scale=spec.r_scale, d_kind=spec.d_kind,
        zero_mean_d=spec.zero_mean_d, distribution=spec.distribution,
        mixture_mode=spec.mixture_mode, center_delta=spec.center_delta,
        seed=derive_seed(spec.seed, PURPOSE_REPLICATION, rep),
    )
    _, tasks = generate_tasks(rep_spec, m, n)
    p = spec.p
    acc = np.zeros((p, p))
    eta_rep = 0.0
    for task in tasks:
        acc += sample_cov(task).mat - task.true_cov.mat
        eta_rep = max(eta_rep, norm(task.true_cov, "inf_inf"))
    return norm(acc / m, "inf_inf"), eta_rep


def tail_bound_check(spec: ModelSpec, m: int, n: int, epsilons, reps: int,
                     sigma_param: float = 1.0) -> TailBoundResult:
    """Monte-Carlo check of the pooled-deviation tail bound.

    For each epsilon the empirical frequency of the deviation event over
    ``reps`` fresh replications is tabulated next to the analytic bound
    p(p+1)/2 * exp(-n m eps^2 / (512 sigma^4 eta)); eta is the empirical max
    of ||Sigma^(i)||_inf,inf over all generated tasks. Bounds >= 1 are
    vacuous; epsilons outside (0, 32 eta sigma^2) are flagged, not errors.
    """
    if reps < 100:
        raise InvalidSpec("need reps >= 100 for a meaningful frequency")
    deviations = np.empty(reps)
    eta = 0.0
    for rep in range(reps):
        deviations[rep], eta_rep = pooled_deviation(spec, m, n, rep)
        eta = max(eta, eta_rep)

    p = spec.p
    rows = []
    for eps in epsilons:
        eps = float(eps)
        freq = float((deviations >= eps).mean())
        bound = p * (p + 1) / 2.0 * math.exp(-n * m * eps**2 / (512.0 * sigma_param**4 * eta))
        rows.append(TailBoundRow(
            epsilon=eps,
            freq=freq,
            bound=bound,
            vacuous=bound >= 1.0,
            reps=reps,
            in_validity=0.0 < eps < 32.0 * eta * sigma_param**2,
        ))
    return TailBoundResult(rows=tuple(rows), eta=eta, sigma_param=sigma_param,
                           m=m, n=n, reps=reps)


def epsilon_for_bound(p: int, m: int, n: int, eta: float, target: float,
                      sigma_param: float = 1.0) -> float:
    """Invert the tail bound: the epsilon at which it equals ``target``."""
    if not 0 < target < p * (p + 1) / 2.0:
        raise InvalidSpec("target must be in (0, p(p+1)/2)")
    return math.sqrt(512.0 * sigma_param**4 * eta / (n * m)
                     * math.log(p * (p + 1) / (2.0 * target)))
