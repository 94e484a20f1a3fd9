"""Dense symmetric-matrix primitives: norms, eigendecomposition, proximal maps.

Everything downstream (model generation, the Fantope solver, the theory
diagnostics) funnels its linear algebra through this module so that the
tolerances and the deterministic sign convention live in exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidMatrix


@dataclass(frozen=True)
class Tolerances:
    """Shared numerical tolerances, referenced by both solvers and tests."""

    sym_record: float = 1e-12     # input asymmetry recorded beyond this
    sym_reject: float = 1e-6      # relative asymmetry rejected on CSV load
    eig_recon: float = 1e-8       # reconstruction: <= eig_recon * (1 + ||A||_F)
    orthonormal: float = 1e-9     # ||V^T V - I||_F <= orthonormal * p
    fantope_eig: float = 1e-10    # projected eigenvalues inside [0,1] +/- this
    fantope_trace: float = 1e-9   # |trace - k| after projection
    bisect_f: float = 1e-10       # |sum(clamped) - k| at the accepted root
    psd: float = 1e-8             # eigenvalue floor still treated as PSD
    support_eps: float = 1e-8     # default |diag| cutoff for support reads


TOL = Tolerances()


class SymMat:
    """Dense real symmetric p x p matrix.

    The constructor symmetrises its input as (A + A^T)/2, records how
    asymmetric the raw input was, and freezes the storage so instances can
    be shared across threads.
    """

    __slots__ = ("mat", "dim", "asym_excess")

    def __init__(self, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] == 0:
            raise InvalidMatrix("empty matrix")
        if not np.all(np.isfinite(a)):
            raise InvalidMatrix("matrix entries must be finite")
        object.__setattr__(self, "asym_excess", float(np.abs(a - a.T).max()))
        m = 0.5 * (a + a.T)
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dim", int(a.shape[0]))

    def __setattr__(self, name, value):
        raise AttributeError("SymMat is immutable")

    @property
    def asym_recorded(self) -> bool:
        """Whether the raw input's asymmetry exceeded the recording tolerance."""
        return self.asym_excess > TOL.sym_record

    def __repr__(self):
        return f"SymMat(dim={self.dim})"


def as_matrix(a) -> np.ndarray:
    """Return the ndarray behind a SymMat, or validate a raw array."""
    if isinstance(a, SymMat):
        return a.mat
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("matrix entries must be finite")
    return a


def as_sym(a) -> SymMat:
    return a if isinstance(a, SymMat) else SymMat(a)


@dataclass(frozen=True)
class EigPair:
    """Eigendecomposition with values sorted descending.

    ``vectors[:, l]`` pairs with ``values[l]``; the sign of each column is
    fixed so its largest-magnitude component is positive.
    """

    values: np.ndarray
    vectors: np.ndarray


def eig_sym(a) -> EigPair:
    """Eigendecompose a symmetric matrix deterministically.

    Values come back sorted descending. Each eigenvector's sign is chosen so
    that its largest-magnitude entry (first such index on ties) is positive,
    which keeps downstream support extraction reproducible.
    """
    m = as_sym(a).mat
    w, v = np.linalg.eigh(m)
    w = w[::-1].copy()
    v = v[:, ::-1]
    lead = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[lead, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    v = v * signs
    w.flags.writeable = False
    v = np.ascontiguousarray(v)
    v.flags.writeable = False
    return EigPair(values=w, vectors=v)


_NORM_KINDS = ("inf_inf", "one_one", "two_inf", "frobenius")


def norm(a, kind: str) -> float:
    """Mixed matrix norms used throughout.

    inf_inf    max |A_ij|
    one_one    sum |A_ij|
    two_inf    max row l2-norm
    frobenius  sqrt(sum A_ij^2)
    """
    m = as_matrix(a)
    if kind == "inf_inf":
        return float(np.abs(m).max()) if m.size else 0.0
    if kind == "one_one":
        return float(np.abs(m).sum())
    if kind == "two_inf":
        return float(np.sqrt((m * m).sum(axis=1)).max()) if m.size else 0.0
    if kind == "frobenius":
        return float(np.linalg.norm(m))
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {_NORM_KINDS}")


def soft_threshold(x, t: float, keep_diagonal: bool = False):
    """Entrywise soft threshold sign(x) * max(|x| - t, 0).

    With ``keep_diagonal`` the diagonal of a square input passes through
    unchanged. The flag exists only for ablations; the default penalises the
    diagonal like every other entry.
    """
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    arr = np.asarray(x, dtype=float)
    out = np.sign(arr) * np.maximum(np.abs(arr) - t, 0.0)
    if keep_diagonal and out.ndim == 2 and out.shape[0] == out.shape[1]:
        np.fill_diagonal(out, np.diagonal(arr))
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection of a vector onto {u : sum |u_i| <= radius}.

    Sort-based exact algorithm: soft threshold at the largest theta for which
    the shrunk vector still fills the ball.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= radius:
        return v.copy()
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    cond = u - (css - radius) / j > 0
    r = int(np.nonzero(cond)[0].max())
    theta = (css[r] - radius) / (r + 1)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def load_matrix_csv(path, symmetric: bool = True):
    """Load a plain comma-separated numeric matrix (no header).

    With ``symmetric`` the result is validated and returned as a SymMat;
    otherwise the raw rectangular array is returned.
    """
    arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if not symmetric:
        if not np.all(np.isfinite(arr)):
            raise InvalidMatrix(f"{path}: non-finite entries")
        return arr
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidMatrix(f"{path}: expected a square matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{path}: non-finite entries")
    scale = 1.0 + float(np.abs(arr).max())
    if float(np.abs(arr - arr.T).max()) > TOL.sym_reject * scale:
        raise InvalidMatrix(f"{path}: matrix is materially asymmetric")
    return SymMat(arr)


def save_matrix_csv(path, a) -> None:
    """Write a matrix as plain comma-separated rows, round-trip precision."""
    np.savetxt(path, as_matrix(a), delimiter=",", fmt="%.17g")
