"""Generative model: ground-truth covariance, per-task perturbations, sampling.

The ground truth is a spiked covariance whose leading eigenvectors are
supported on an index set J. Each auxiliary task perturbs it with a
near-identity rotation R = I + A/p^2 (A uniform) and an additive symmetric
noise D inside the eigenbasis, then data is drawn from the task covariance
under one of three distribution settings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidCovariance, InvalidData, InvalidSpec
from .matcore import TOL, SymMat, eig_sym, save_matrix_csv

# Counter-based RNG scheme, version 1: Philox streams keyed through a
# SeedSequence by (seed, task_id, purpose). Adding tasks or purposes never
# perturbs draws on other streams.
RNG_SCHEME = "philox-v1"

PURPOSE_TRUTH = 0
PURPOSE_TASK_NOISE = 1
PURPOSE_SAMPLES = 2
PURPOSE_REPLICATION = 3

_DISTRIBUTIONS = ("gaussian", "uniform_mixture", "exponential_mixture")
_D_KINDS = ("offdiag", "diagonal", "none")
_MIXTURE_MODES = ("mixture", "sum")


def stream(seed: int, task_id: int = 0, purpose: int = PURPOSE_TRUTH) -> np.random.Generator:
    """Return the Philox stream for (seed, task_id, purpose)."""
    ss = np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=(int(task_id) & 0xFFFFFFFF, int(purpose) & 0xFFFFFFFF),
    )
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Derive a child 64-bit seed from a base seed and a tuple of integers."""
    ss = np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=tuple(int(k) & 0xFFFFFFFF for k in key),
    )
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of the generative model.

    ``support`` is the index set J carrying the principal subspace. The
    default noise follows the uniform recipe (R = I + A/p^2 with A uniform,
    D symmetric with Uniform(0,1) strict-lower entries mirrored); the
    switches below exist because that recipe is ambiguous on two points:

    * ``zero_mean_d`` draws D entries from Uniform(-1/2, 1/2) instead, which
      restores the zero-mean premise the analysis assumes.
    * ``d_kind="diagonal"`` puts the noise on the eigenvalues instead of the
      off-diagonal entries, ``"none"`` removes D entirely.
    * ``mixture_mode`` selects whether "half Gaussian plus half noise" means
      a fair-coin mixture (default) or a sum of scaled draws.
    * ``center_delta`` recentres the mixture noise so samples stay mean zero.
    """

    p: int
    k: int
    support: tuple
    spike: float = 500.0
    spectrum: tuple | None = None
    r_scale: float | None = None
    d_kind: str = "offdiag"
    zero_mean_d: bool = False
    distribution: str = "gaussian"
    mixture_mode: str = "mixture"
    center_delta: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(sorted(int(j) for j in self.support)))
        if self.p < 1:
            raise InvalidSpec("p must be positive")
        if not 0 < self.k <= len(self.support) <= self.p:
            raise InvalidSpec(
                f"need 0 < k <= |J| <= p, got k={self.k}, |J|={len(self.support)}, p={self.p}"
            )
        if len(set(self.support)) != len(self.support):
            raise InvalidSpec("support indices must be distinct")
        if self.support and (self.support[0] < 0 or self.support[-1] >= self.p):
            raise InvalidSpec("support indices out of range")
        if self.spike <= 0:
            raise InvalidSpec("spike must be positive")
        if self.spectrum is not None:
            spec = tuple(float(x) for x in self.spectrum)
            if len(spec) != self.p:
                raise InvalidSpec("fixed spectrum must have length p")
            object.__setattr__(self, "spectrum", spec)
        if self.r_scale is not None and self.r_scale < 0:
            raise InvalidSpec("r_scale must be nonnegative")
        if self.d_kind not in _D_KINDS:
            raise InvalidSpec(f"d_kind must be one of {_D_KINDS}")
        if self.distribution not in _DISTRIBUTIONS:
            raise InvalidSpec(f"distribution must be one of {_DISTRIBUTIONS}")
        if self.mixture_mode not in _MIXTURE_MODES:
            raise InvalidSpec(f"mixture_mode must be one of {_MIXTURE_MODES}")

    @property
    def rotation_scale(self) -> float:
        return self.r_scale if self.r_scale is not None else 1.0 / self.p**2


@dataclass(frozen=True)
class GroundTruth:
    """Σ together with the quantities the theory talks about.

    ``basis`` is the full orthonormal eigenbasis used to build Σ; the first k
    columns (``u``) carry the principal subspace and are supported on J.
    """

    sigma: SymMat
    lam: np.ndarray
    pi: SymMat
    support: tuple
    k: int
    basis: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return self.basis[:, : self.k]

    @property
    def lambda_diff(self) -> float:
        if self.k >= self.sigma.dim:
            return float(self.lam[self.k - 1])
        return float(self.lam[self.k - 1] - self.lam[self.k])


@dataclass(frozen=True)
class TaskData:
    """Sampled observations for one task (rows are observations)."""

    samples: np.ndarray
    true_cov: SymMat | None = None
    task_id: int = 0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise InvalidData(f"samples must be a nonempty 2-D array, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidData("samples must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        if self.true_cov is not None:
            w = np.linalg.eigvalsh(self.true_cov.mat)
            if w.min() < -TOL.psd:
                raise InvalidCovariance(
                    f"task {self.task_id}: true_cov min eigenvalue {w.min():.3e}"
                )

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def p(self) -> int:
        return self.samples.shape[1]


def make_base_cov(spec: ModelSpec) -> GroundTruth:
    """Build the ground truth Σ = U Λ U^T with leading eigenvectors on J.

    The leading k columns of U come from QR-orthonormalising a seeded |J| x k
    standard-normal block embedded into rows J; the remaining columns are a
    seeded orthonormal completion. Λ is Uniform(0,1) with the spike added to
    (and each block sorted descending within) the first k entries.
    """
    if len(spec.support) < spec.k:
        raise InvalidSpec(f"support smaller than k: |J|={len(spec.support)} < k={spec.k}")
    rng = stream(spec.seed, 0, PURPOSE_TRUTH)
    p, k = spec.p, spec.k
    jdx = np.asarray(spec.support, dtype=int)

    block = rng.standard_normal((len(jdx), k))
    q, _ = np.linalg.qr(block)
    u_lead = np.zeros((p, k))
    u_lead[jdx] = q

    if p > k:
        g = rng.standard_normal((p, p - k))
        g -= u_lead @ (u_lead.T @ g)
        q_rest, _ = np.linalg.qr(g)
        basis = np.hstack([u_lead, q_rest])
    else:
        basis = u_lead

    if spec.spectrum is not None:
        lam = np.asarray(spec.spectrum, dtype=float)
    else:
        lam = rng.uniform(0.0, 1.0, p)
        lam[:k] = np.sort(lam[:k])[::-1] + spec.spike
        lam[k:] = np.sort(lam[k:])[::-1]

    sigma = SymMat((basis * lam) @ basis.T)
    pi = SymMat(u_lead @ u_lead.T)

    gt = GroundTruth(sigma=sigma, lam=lam.copy(), pi=pi, support=spec.support,
                     k=k, basis=basis)
    if gt.lambda_diff <= 0:
        raise InvalidSpec("spectrum has no gap at k; fixed spectrum must satisfy lam[k-1] > lam[k]")
    if abs(np.trace(pi.mat) - k) > 1e-9:
        raise InvalidSpec("principal projector trace drifted from k")
    off = np.delete(np.arange(p), jdx)
    if off.size and np.abs(np.diag(pi.mat)[off]).max() > 1e-12:
        raise InvalidSpec("projector support leaked outside J")
    return gt


def task_noise_matrices(spec: ModelSpec, task_id: int):
    """Draw (R, D) for one task from its dedicated stream.

    Draw order is fixed (A first, then D) so adding switches never reshuffles
    existing draws.
    """
    rng = stream(spec.seed, task_id, PURPOSE_TASK_NOISE)
    p = spec.p
    a = rng.uniform(0.0, 1.0, (p, p))
    r = np.eye(p) + spec.rotation_scale * a
    lo, hi = (-0.5, 0.5) if spec.zero_mean_d else (0.0, 1.0)
    if spec.d_kind == "offdiag":
        d = np.zeros((p, p))
        rows, cols = np.tril_indices(p, -1)
        d[rows, cols] = rng.uniform(lo, hi, rows.size)
        d = d + d.T
    elif spec.d_kind == "diagonal":
        d = np.diag(rng.uniform(lo, hi, p))
    else:
        d = np.zeros((p, p))
    return r, d


def make_task_cov(gt: GroundTruth, spec: ModelSpec, task_id: int) -> SymMat:
    """Task covariance R U (Λ + D) U^T R^T, symmetrised.

    The raw product is not guaranteed PSD (the uniform D recipe drives its
    smallest eigenvalue well below zero at the experiment scales), so
    negative eigenvalues are floored at zero before the matrix is returned;
    the result is the covariance actually used to draw samples.
    """
    r, d = task_noise_matrices(spec, task_id)
    inner = np.diag(gt.lam) + d
    raw = r @ (gt.basis @ inner @ gt.basis.T) @ r.T
    raw = 0.5 * (raw + raw.T)
    w = np.linalg.eigvalsh(raw)
    if w.min() >= 0.0:
        return SymMat(raw)
    pair = eig_sym(raw)
    clipped = np.clip(pair.values, 0.0, None)
    return SymMat((pair.vectors * clipped) @ pair.vectors.T)


def sample_task_data(cov, n: int, distribution: str, rng: np.random.Generator,
                     mixture_mode: str = "mixture", center_delta: bool = True,
                     task_id: int = 0) -> TaskData:
    """Draw n rows from the task distribution with covariance ``cov``.

    gaussian draws X = L z with L the eigendecomposition square root. The
    mixture settings draw, per sample, either the Gaussian vector or a noise
    vector Δ (Uniform(0,1)^p or Exponential(1)^p, recentred unless
    ``center_delta`` is off); ``mixture_mode="sum"`` instead returns
    0.5 * gaussian + 0.5 * Δ.
    """
    if n < 1:
        raise InvalidData("need n >= 1 samples")
    if distribution not in _DISTRIBUTIONS:
        raise InvalidSpec(f"distribution must be one of {_DISTRIBUTIONS}")
    cov = cov if isinstance(cov, SymMat) else SymMat(cov)
    p = cov.dim
    w, v = np.linalg.eigh(cov.mat)
    if w.min() < -TOL.psd:
        raise InvalidCovariance(f"covariance min eigenvalue {w.min():.3e} beyond tolerance")
    if w.min() < 0.0:
        # stay quiet about pure floating-point noise, warn on anything larger
        if w.min() < -1e-12 * (1.0 + float(np.abs(w).max())):
            warnings.warn(
                f"covariance has tiny negative eigenvalue {w.min():.3e}; clipping at 0",
                stacklevel=2,
            )
        w = np.clip(w, 0.0, None)
    root = v * np.sqrt(w)

    gauss = rng.standard_normal((n, p)) @ root.T
    if distribution == "gaussian":
        samples = gauss
    else:
        if distribution == "uniform_mixture":
            delta = rng.uniform(0.0, 1.0, (n, p))
            if center_delta:
                delta -= 0.5
        else:
            delta = rng.exponential(1.0, (n, p))
            if center_delta:
                delta -= 1.0
        if mixture_mode == "sum":
            samples = 0.5 * gauss + 0.5 * delta
        else:
            coin = rng.random(n) < 0.5
            samples = np.where(coin[:, None], gauss, delta)
    return TaskData(samples=samples, true_cov=cov, task_id=task_id)


def generate_tasks(spec: ModelSpec, m: int, n: int, gt: GroundTruth | None = None):
    """Generate m tasks of n samples each under ``spec``. Task ids are 1-based."""
    if m < 1:
        raise InvalidSpec("need at least one task")
    if gt is None:
        gt = make_base_cov(spec)
    tasks = []
    for task_id in range(1, m + 1):
        cov = make_task_cov(gt, spec, task_id)
        rng = stream(spec.seed, task_id, PURPOSE_SAMPLES)
        tasks.append(
            sample_task_data(cov, n, spec.distribution, rng,
                             mixture_mode=spec.mixture_mode,
                             center_delta=spec.center_delta, task_id=task_id)
        )
    return gt, tasks


def save_tasks(out_dir, gt: GroundTruth, tasks) -> list:
    """Write task_<i>.csv per task plus truth.csv (Σ) and support.txt (J).

    Support indices are 0-based. Returns the list of written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for task in tasks:
        path = out / f"task_{task.task_id}.csv"
        np.savetxt(path, task.samples, delimiter=",", fmt="%.17g")
        written.append(path)
    truth = out / "truth.csv"
    save_matrix_csv(truth, gt.sigma)
    written.append(truth)
    supp = out / "support.txt"
    supp.write_text(",".join(str(j) for j in gt.support) + "\n")
    written.append(supp)
    return written
