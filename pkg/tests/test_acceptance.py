"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The heavy Monte-Carlo fixtures are shared across criteria. Every tolerance
is pinned here, not deferred.
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from metapca import (ExperimentGrid, ModelSpec, SolverConfig, eig_sym,
                     emit_results, epsilon_for_bound, make_base_cov, norm,
                     preset_grids, project_fantope, run_experiment,
                     solve_penalized, submatrix, tail_bound_check)
from metapca.experiments import t_to_m

THREADS = max(1, min(4, os.cpu_count() or 1))


def _report(num, ok, detail):
    print(f"\nCRITERION {num}: {'PASS' if ok else 'FAIL'} - {detail}")


def _recovery_table(rows, t_values, p, n_values):
    """recovery[(n, nominal_t)] -> empirical mean over reps."""
    table = {}
    for n in n_values:
        for t in t_values:
            m = t_to_m(t, p, n)
            hits = [r.recovered for r in rows if r.n == n and r.m == m]
            assert hits, f"no rows for n={n}, T={t}"
            table[(n, t)] = sum(hits) / len(hits)
    return table


@pytest.fixture(scope="module")
def gaussian_rows():
    grid = ExperimentGrid(setting="gaussian", p=50, k=5, j_size=5,
                          n_values=(3, 9), t_values=(1, 5, 10, 15),
                          reps=100, base_seed=20240817)
    started = time.perf_counter()
    rows = run_experiment(grid, parallelism=THREADS)
    elapsed = time.perf_counter() - started
    print(f"\n[criterion 4 grid: {len(rows)} replications in {elapsed:.0f}s]")
    return grid, rows, elapsed


@pytest.fixture(scope="module")
def fast_runs(tmp_path_factory):
    grid = preset_grids("gaussian", fast=True, base_seed=20240817)[0]
    outputs = {}
    timings = {}
    for threads in (1, 8):
        out = tmp_path_factory.mktemp(f"fast_t{threads}")
        started = time.perf_counter()
        rows = run_experiment(grid, parallelism=threads)
        timings[threads] = time.perf_counter() - started
        paths = emit_results(rows, out)
        outputs[threads] = (rows, paths["results"].read_bytes())
    return grid, outputs, timings


def test_criterion_1_fantope_correctness_suite():
    rng = np.random.default_rng(1)
    started = time.perf_counter()
    last_by_dim = {}
    for i in range(1000):
        p = int(rng.integers(2, 17))
        k = int(rng.integers(1, p + 1))
        lam = np.sort(rng.uniform(0.0, 5.0, p))[::-1]
        if k < p and lam[k - 1] - lam[k] < 0.1:
            lam[:k] += 0.5
        q, _ = np.linalg.qr(rng.standard_normal((p, p)))
        a = (q * lam) @ q.T

        f = project_fantope(a, k)
        w = np.linalg.eigvalsh(f.mat)
        assert w.min() >= -1e-10 and w.max() <= 1.0 + 1e-10
        assert abs(np.trace(f.mat) - k) <= 1e-9
        again = project_fantope(f, k)
        assert norm(again.mat - f.mat, "frobenius") <= 1e-9
        if (p, k) in last_by_dim:
            b = last_by_dim[(p, k)]
            fb = project_fantope(b, k)
            assert (norm(f.mat - fb.mat, "frobenius")
                    <= norm(a - b, "frobenius") + 1e-9)
        last_by_dim[(p, k)] = a

        solved = solve_penalized(a, k, SolverConfig(rho=0.0))
        assert abs(solved.objective - lam[:k].sum()) <= 1e-6
    elapsed = time.perf_counter() - started
    _report(1, elapsed < 60.0,
            f"1000 projection/solve pairs clean in {elapsed:.1f}s")
    assert elapsed < 60.0


def _sphere_oracle(s, rho, step_deg=0.5):
    theta = np.deg2rad(np.arange(0.0, 180.0 + step_deg, step_deg))
    phi = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    h = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)])
    h = h.reshape(3, -1)
    quad = np.einsum("ik,ij,jk->k", h, s, h)
    penalty = rho * np.abs(h).sum(axis=0) ** 2
    return float((quad - penalty).max())


def test_criterion_2_sphere_grid_oracle():
    rng = np.random.default_rng(2)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        lam = np.array([rng.uniform(2.2, 3.5), rng.uniform(0.2, 1.0),
                        rng.uniform(0.0, 0.2)])
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        s = (q * lam) @ q.T
        rho = float(rng.uniform(0.02, 0.08))
        report = solve_penalized(s, 1, SolverConfig(rho=rho))
        oracle = _sphere_oracle(s, rho)
        worst = max(worst, abs(report.objective - oracle))
        assert abs(report.objective - oracle) <= 1e-3
    elapsed = time.perf_counter() - started
    _report(2, elapsed < 60.0,
            f"20 instances, max |solver - oracle| = {worst:.2e}, {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_3_principal_submatrix_exactness():
    rng = np.random.default_rng(3)
    started = time.perf_counter()
    for i in range(50):
        p = int(rng.integers(10, 40))
        j_size = int(rng.integers(3, 8))
        support = tuple(sorted(rng.choice(p, j_size, replace=False).tolist()))
        k = int(rng.integers(1, j_size + 1))
        gt = make_base_cov(ModelSpec(p=p, k=k, support=support, seed=1000 + i))
        pair = eig_sym(submatrix(gt.sigma, support))
        np.testing.assert_allclose(pair.values[:k], gt.lam[:k], atol=1e-9)
        u_block = gt.u[np.asarray(support), :]
        for l in range(k):
            v, u = pair.vectors[:, l], u_block[:, l]
            np.testing.assert_allclose(np.outer(v, v), np.outer(u, u), atol=1e-9)
    elapsed = time.perf_counter() - started
    _report(3, True, f"50 supported models exact to 1e-9 in {elapsed:.1f}s")


def test_criterion_4_gaussian_reproduction(gaussian_rows, fast_runs):
    grid, rows, elapsed = gaussian_rows
    table = _recovery_table(rows, grid.t_values, grid.p, grid.n_values)
    problems = []

    for n in grid.n_values:
        if table[(n, 15)] < 0.95:
            problems.append(f"recovery at T=15, n={n} is {table[(n, 15)]:.2f} < 0.95")

    for t in grid.t_values:
        gap = abs(table[(3, t)] - table[(9, t)])
        if gap > 0.15:
            problems.append(
                f"n-collapse gap {gap:.2f} > 0.15 at T={t} "
                f"(n=3: {table[(3, t)]:.2f}, n=9: {table[(9, t)]:.2f}; "
                f"T={t} converts to m={t_to_m(t, grid.p, 3)} and "
                f"m={t_to_m(t, grid.p, 9)} tasks)")

    for n in grid.n_values:
        series = [table[(n, t)] for t in grid.t_values]
        for a, b in zip(series, series[1:]):
            if b < a - 0.1:
                problems.append(f"non-monotone beyond 0.1 band for n={n}: {series}")
                break

    fast_grid, outputs, timings = fast_runs
    fast_rows = outputs[1][0]
    fast_table = _recovery_table(fast_rows, fast_grid.t_values, fast_grid.p,
                                 fast_grid.n_values)
    for n in fast_grid.n_values:
        if fast_table[(n, 15)] < 0.9:
            problems.append(f"fast profile recovery at T=15, n={n} "
                            f"is {fast_table[(n, 15)]:.2f} < 0.9")
        series = [fast_table[(n, t)] for t in fast_grid.t_values]
        for a, b in zip(series, series[1:]):
            if b < a - 0.15:
                problems.append(f"fast profile non-monotone for n={n}: {series}")
                break
    if timings[1] >= 300.0:
        problems.append(f"fast profile took {timings[1]:.0f}s >= 5 min")

    detail = (f"full grid {elapsed:.0f}s; recovery "
              + "; ".join(f"n={n},T={t}: {table[(n, t)]:.2f}"
                          for n in grid.n_values for t in grid.t_values))
    _report(4, not problems, detail if not problems
            else detail + " | " + " | ".join(problems))
    assert not problems, "\n".join(problems)


def test_criterion_5_novel_task():
    grid = ExperimentGrid(setting="novel", p=50, k=5, j_size=5,
                          extra_zeros=(2, 3, 4), t_values=(20,), reps=100,
                          base_seed=20240817, union_n=3, union_t=15.0)
    started = time.perf_counter()
    rows = run_experiment(grid, parallelism=THREADS)
    elapsed = time.perf_counter() - started
    rates = {}
    for extra in grid.extra_zeros:
        k_novel = grid.j_size - extra
        hits = [r.recovered for r in rows if r.k == k_novel]
        rates[extra] = sum(hits) / len(hits)
    ok = all(rate >= 0.95 for rate in rates.values()) and elapsed < 300.0
    detail = (", ".join(f"{e} extra zeros: {rates[e]:.2f}" for e in sorted(rates))
              + f" ({elapsed:.0f}s)")
    _report(5, ok, detail)
    assert elapsed < 300.0
    for extra, rate in rates.items():
        assert rate >= 0.95, f"extra={extra}: {rate:.2f} < 0.95"


def test_criterion_6_comparison():
    m_values = (2, 6, 10, 14)
    grids = [replace(g, m_values=m_values)
             for g in preset_grids("compare", base_seed=20240817)]
    started = time.perf_counter()
    results = {}
    for grid in grids:
        rows = run_experiment(grid, parallelism=THREADS)
        results[grid.setting] = {
            m: sum(r.recovered for r in rows if r.m == m)
               / sum(1 for r in rows if r.m == m)
            for m in m_values
        }
    elapsed = time.perf_counter() - started

    meta = results["gaussian"]
    independent = results["comparison_independent"]
    multitask = results["comparison_multitask"]
    problems = []
    if meta[14] < 0.9:
        problems.append(f"pooled recovery at m=14 is {meta[14]:.2f} < 0.9")
    if independent[14] > 0.2:
        problems.append(f"independent union at m=14 is {independent[14]:.2f} > 0.2")
    for m in m_values:
        if meta[m] < multitask[m] - 0.15:
            problems.append(f"pooled {meta[m]:.2f} below multitask "
                            f"{multitask[m]:.2f} - 0.15 at m={m}")
    if elapsed >= 900.0:
        problems.append(f"took {elapsed:.0f}s >= 15 min")

    detail = (f"pooled {meta}, independent {independent}, multitask {multitask} "
              f"({elapsed:.0f}s)")
    _report(6, not problems, detail)
    assert not problems, "\n".join(problems)


def test_criterion_7_tail_bound():
    started = time.perf_counter()
    reps = 1000
    worst_margin = -1.0
    for p in (2, 3, 4, 5):
        spec = ModelSpec(p=p, k=1, support=(0, 1), seed=500 + p)
        for m, n in ((10, 10), (10, 100)):
            probe = tail_bound_check(spec, m, n, epsilons=[1.0], reps=reps)
            epsilons = [epsilon_for_bound(p, m, n, probe.eta, target)
                        for target in (0.25, 0.5)]
            result = tail_bound_check(spec, m, n, epsilons, reps=reps)
            for row, target in zip(result.rows, (0.25, 0.5)):
                assert row.bound == pytest.approx(target, rel=1e-9)
                assert row.in_validity
                slack = 3.0 * math.sqrt(target * (1 - target) / reps)
                margin = row.freq - row.bound
                worst_margin = max(worst_margin, margin)
                assert row.freq <= row.bound + slack, (
                    f"p={p} nm={m * n} target={target}: freq {row.freq:.3f} "
                    f"exceeds bound + 3 sigma")
    elapsed = time.perf_counter() - started
    ok = elapsed < 600.0
    _report(7, ok, f"worst freq - bound margin {worst_margin:+.3f} "
                   f"over 16 cells x {reps} reps ({elapsed:.0f}s)")
    assert elapsed < 600.0


def test_criterion_8_thread_determinism(fast_runs):
    _, outputs, timings = fast_runs
    identical = outputs[1][1] == outputs[8][1]
    _report(8, identical,
            f"results.csv bytes identical across --threads 1/8 "
            f"({timings[1]:.0f}s vs {timings[8]:.0f}s)")
    assert identical


def test_criterion_9_error_bound_trend(gaussian_rows):
    grid, rows, _ = gaussian_rows
    ratios = {}
    for t in (5, 15):
        ms = {t_to_m(t, grid.p, n) for n in grid.n_values}
        good = [r.err_inf / r.rho for r in rows
                if r.m in ms and r.support_hamming == 0
                and math.isfinite(r.err_inf)]
        assert good, f"no successful replications at T={t}"
        ratios[t] = max(good)
    ok = ratios[15] <= 2.0 * ratios[5]
    _report(9, ok, f"max err_inf/rho at T=5: {ratios[5]:.3f}, "
                   f"T=15: {ratios[15]:.3f}")
    assert ok, f"error ratio grew beyond 2x: {ratios}"
