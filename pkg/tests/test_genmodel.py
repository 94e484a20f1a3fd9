import numpy as np
import pytest

from metapca import (InvalidCovariance, InvalidSpec, ModelSpec, TaskData,
                     make_base_cov, make_task_cov, norm, sample_task_data,
                     stream)
from metapca.genmodel import (PURPOSE_SAMPLES, generate_tasks,
                              task_noise_matrices)


def spec_main(seed=0, **kw):
    base = dict(p=50, k=5, support=tuple(range(5)), seed=seed)
    base.update(kw)
    return ModelSpec(**base)


class TestModelSpec:
    def test_support_sorted_and_validated(self):
        spec = ModelSpec(p=5, k=1, support=(3, 1), seed=0)
        assert spec.support == (1, 3)

    def test_k_larger_than_support_rejected(self):
        with pytest.raises(InvalidSpec):
            ModelSpec(p=5, k=3, support=(0, 1), seed=0)

    def test_k_equal_support_allowed(self):
        ModelSpec(p=5, k=2, support=(0, 1), seed=0)

    def test_out_of_range_support(self):
        with pytest.raises(InvalidSpec):
            ModelSpec(p=5, k=1, support=(0, 5), seed=0)

    def test_bad_distribution(self):
        with pytest.raises(InvalidSpec):
            ModelSpec(p=5, k=1, support=(0, 1), distribution="cauchy", seed=0)

    def test_fixed_spectrum_length(self):
        with pytest.raises(InvalidSpec):
            ModelSpec(p=3, k=1, support=(0, 1), spectrum=(1.0, 0.5), seed=0)


class TestMakeBaseCov:
    def test_main_experiment_spectrum(self):
        gt = make_base_cov(spec_main())
        assert gt.lam[4] >= 500.0
        assert gt.lam[5] <= 1.0
        assert gt.lambda_diff >= 499.0

    def test_support_embedding_small(self):
        spec = ModelSpec(p=3, k=1, support=(0, 1), spike=2.0,
                         spectrum=(2.5, 0.3, 0.1), seed=1)
        gt = make_base_cov(spec)
        np.testing.assert_allclose(gt.pi.mat[2, :], 0.0, atol=1e-14)
        np.testing.assert_allclose(gt.pi.mat[:, 2], 0.0, atol=1e-14)
        np.testing.assert_allclose(gt.lam, [2.5, 0.3, 0.1])

    def test_uniform_setting_dimensions(self):
        gt = make_base_cov(ModelSpec(p=80, k=6, support=tuple(range(6)), seed=2))
        assert gt.sigma.dim == 80
        assert gt.u.shape == (80, 6)

    def test_invariants_across_seeds(self):
        for seed in range(8):
            spec = ModelSpec(p=20, k=3, support=(2, 5, 9, 11, 17), seed=seed)
            gt = make_base_cov(spec)
            # orthonormal basis
            gram = gt.basis.T @ gt.basis
            assert np.linalg.norm(gram - np.eye(20)) < 1e-9 * 20
            # projector trace and support
            assert abs(np.trace(gt.pi.mat) - 3) <= 1e-9
            diag = np.diag(gt.pi.mat)
            on = np.asarray(spec.support)
            off = np.delete(np.arange(20), on)
            assert np.all(np.abs(diag[off]) < 1e-12)
            assert np.all(diag[on] > 1e-6)
            assert gt.lambda_diff > 0
            # sigma reconstructs from basis and spectrum
            recon = (gt.basis * gt.lam) @ gt.basis.T
            np.testing.assert_allclose(recon, gt.sigma.mat, atol=1e-10)

    def test_deterministic(self):
        a = make_base_cov(spec_main(seed=5))
        b = make_base_cov(spec_main(seed=5))
        np.testing.assert_array_equal(a.sigma.mat, b.sigma.mat)


class TestMakeTaskCov:
    def test_noiseless_degenerate_equals_sigma(self):
        spec = spec_main(d_kind="none", r_scale=0.0)
        gt = make_base_cov(spec)
        cov = make_task_cov(gt, spec, task_id=1)
        np.testing.assert_allclose(cov.mat, gt.sigma.mat, atol=1e-10)

    def test_deterministic_per_task(self):
        spec = spec_main(seed=3)
        gt = make_base_cov(spec)
        a = make_task_cov(gt, spec, task_id=2)
        b = make_task_cov(gt, spec, task_id=2)
        np.testing.assert_array_equal(a.mat, b.mat)
        c = make_task_cov(gt, spec, task_id=3)
        assert norm(a.mat - c.mat, "inf_inf") > 0

    def test_psd_across_seeds(self):
        for seed in range(6):
            spec = spec_main(seed=seed)
            gt = make_base_cov(spec)
            cov = make_task_cov(gt, spec, task_id=1)
            assert np.linalg.eigvalsh(cov.mat).min() >= -1e-8

    def test_deviation_inequality_chain(self):
        # the raw product obeys
        # ||Sigma_i - Sigma||_inf,inf <= (||R-I||_{1,inf} + 1)^2
        #     * (||U Lam U^T||_inf,inf + ||U D U^T||_inf,inf)
        # with the second factor bounded by lambda_1(Sigma) + specrad(D)
        for seed in range(5):
            spec = spec_main(seed=seed)
            gt = make_base_cov(spec)
            r, d = task_noise_matrices(spec, task_id=1)
            inner = np.diag(gt.lam) + d
            raw = r @ (gt.basis @ inner @ gt.basis.T) @ r.T
            raw = 0.5 * (raw + raw.T)
            lhs = norm(raw - gt.sigma.mat, "inf_inf")
            r_norm = np.abs(r - np.eye(spec.p)).sum(axis=1).max()
            mid = (r_norm + 1.0) ** 2 * (
                norm(gt.sigma.mat, "inf_inf")
                + norm(gt.basis @ d @ gt.basis.T, "inf_inf")
            )
            outer = (r_norm + 1.0) ** 2 * (
                gt.lam[0] + np.abs(np.linalg.eigvalsh(d)).max()
            )
            assert lhs <= mid + 1e-9
            assert mid <= outer + 1e-9

    def test_zero_mean_and_diagonal_switches(self):
        spec_off = spec_main(seed=9)
        spec_zm = spec_main(seed=9, zero_mean_d=True)
        spec_diag = spec_main(seed=9, d_kind="diagonal")
        _, d_off = task_noise_matrices(spec_off, 1)
        _, d_zm = task_noise_matrices(spec_zm, 1)
        _, d_diag = task_noise_matrices(spec_diag, 1)
        assert d_off.min() >= 0.0
        assert d_zm.min() < 0.0 and np.abs(d_zm).max() <= 0.5
        assert np.all(np.diag(d_off) == 0.0)
        assert np.count_nonzero(d_diag - np.diag(np.diag(d_diag))) == 0


class TestSampleTaskData:
    def test_identity_large_sample(self):
        rng = stream(0, 1, PURPOSE_SAMPLES)
        data = sample_task_data(np.eye(2), 100_000, "gaussian", rng)
        s = data.samples.T @ data.samples / data.n
        np.testing.assert_allclose(s, np.eye(2), atol=0.05)

    def test_exact_rows_and_determinism(self):
        d1 = sample_task_data(np.eye(3), 3, "gaussian", stream(1, 1, PURPOSE_SAMPLES))
        d2 = sample_task_data(np.eye(3), 3, "gaussian", stream(1, 1, PURPOSE_SAMPLES))
        assert d1.samples.shape == (3, 3)
        np.testing.assert_array_equal(d1.samples, d2.samples)

    def test_zero_covariance(self):
        data = sample_task_data(np.zeros((2, 2)), 4, "gaussian",
                                stream(2, 1, PURPOSE_SAMPLES))
        np.testing.assert_array_equal(data.samples, np.zeros((4, 2)))

    def test_non_psd_rejected(self):
        with pytest.raises(InvalidCovariance):
            sample_task_data(np.diag([1.0, -0.5]), 2, "gaussian",
                             stream(0, 1, PURPOSE_SAMPLES))

    def test_tiny_negative_clipped_with_warning(self):
        cov = np.diag([1.0, -1e-10])
        with pytest.warns(UserWarning):
            data = sample_task_data(cov, 5, "gaussian", stream(0, 1, PURPOSE_SAMPLES))
        assert np.all(np.isfinite(data.samples))

    def test_mixture_centering(self):
        rng = stream(3, 1, PURPOSE_SAMPLES)
        centered = sample_task_data(np.eye(2), 50_000, "uniform_mixture", rng)
        assert np.abs(centered.samples.mean(axis=0)).max() < 0.02
        rng = stream(3, 1, PURPOSE_SAMPLES)
        literal = sample_task_data(np.eye(2), 50_000, "uniform_mixture", rng,
                                   center_delta=False)
        assert literal.samples.mean() > 0.2  # half the draws average 0.5

    def test_exponential_mixture_and_sum_mode(self):
        rng = stream(4, 1, PURPOSE_SAMPLES)
        mix = sample_task_data(np.eye(2), 1000, "exponential_mixture", rng)
        rng = stream(4, 1, PURPOSE_SAMPLES)
        summed = sample_task_data(np.eye(2), 1000, "exponential_mixture", rng,
                                  mixture_mode="sum")
        assert norm(mix.samples - summed.samples, "inf_inf") > 0

    def test_stream_isolation(self):
        # adding tasks never perturbs earlier tasks' draws
        spec = spec_main(seed=12)
        _, tasks_small = generate_tasks(spec, 2, 4)
        _, tasks_large = generate_tasks(spec, 5, 4)
        for a, b in zip(tasks_small, tasks_large):
            np.testing.assert_array_equal(a.samples, b.samples)


class TestTaskData:
    def test_rejects_empty(self):
        with pytest.raises(Exception):
            TaskData(samples=np.zeros((0, 3)))

    def test_rejects_bad_true_cov(self):
        with pytest.raises(InvalidCovariance):
            TaskData(samples=np.zeros((2, 2)),
                     true_cov=__import__("metapca").SymMat(np.diag([1.0, -1.0])))
