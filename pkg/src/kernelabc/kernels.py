"""Gaussian kernels, their Parzen-window convolution, and bandwidth selection.

The base kernel has unit amplitude, k(x, x) = 1.  Integrating it against two
Gaussian Parzen windows of covariances S1 and S2 yields another Gaussian with
a determinant-ratio prefactor; ``convolved_kernel`` evaluates that closed
form with S = S1 + S2.  Bandwidths come from minimising the leave-one-out
MISE cost of a Gaussian KDE over a data-driven candidate grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KernelConfig",
    "gaussian_kernel",
    "convolved_kernel",
    "select_bandwidth_mise",
]


def as_covariance(sigma, dim: int | None = None) -> np.ndarray:
    """Coerce a scalar / diagonal / full covariance spec to a (d, d) array.

    A scalar is the per-coordinate variance of an isotropic covariance; a
    1-D array is a diagonal.  Symmetry and positive definiteness are
    checked (the latter via Cholesky).
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim == 0:
        sigma = sigma * np.eye(dim if dim is not None else 1)
    elif sigma.ndim == 1:
        sigma = np.diag(sigma)
    elif sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("covariance must be scalar, 1-D diagonal or square matrix")
    if dim is not None and sigma.shape[0] != dim:
        raise ValueError(f"covariance is {sigma.shape[0]}x{sigma.shape[0]}, expected dim {dim}")
    if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError("covariance must be positive definite") from None
    return sigma


@dataclass(frozen=True)
class KernelConfig:
    """Base-kernel covariance plus the two Parzen bandwidths.

    sigma : covariance of the Gaussian base kernel (scalar variance,
        diagonal, or full d x d matrix; stored as a matrix)
    h_p, h_q : Parzen bandwidths for the first / second sample set
    dim : dimensionality of the points
    """

    sigma: np.ndarray
    h_p: float
    h_q: float
    dim: int = field(default=0)  # 0 = infer from sigma

    def __post_init__(self):
        dim = self.dim if self.dim else None
        sigma = as_covariance(self.sigma, dim)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "dim", sigma.shape[0])
        if not (self.h_p > 0 and self.h_q > 0):
            raise ValueError("Parzen bandwidths must be positive")

    @classmethod
    def from_data(cls, samples, h_q: float | None = None) -> "KernelConfig":
        """Isotropic config with all scales set by the MISE rule on `samples`."""
        samples = np.atleast_1d(np.asarray(samples, dtype=np.float64))
        dim = 1 if samples.ndim == 1 else samples.shape[1]
        h = select_bandwidth_mise(samples)
        return cls(sigma=h * h * np.eye(dim), h_p=h, h_q=h_q if h_q is not None else h, dim=dim)

    def swapped(self) -> "KernelConfig":
        """Same kernel with the roles of the two sample sets exchanged."""
        return KernelConfig(self.sigma, self.h_q, self.h_p, self.dim)


def _points(x, name: str) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise ValueError(f"{name} must be a single point (1-D vector)")
    return x


def _chol_logdet(matrix: np.ndarray):
    chol = np.linalg.cholesky(matrix)
    return chol, 2.0 * float(np.sum(np.log(np.diag(chol))))


def gaussian_kernel(x, y, sigma) -> float:
    """Unit-amplitude Gaussian kernel exp(-(x-y)' sigma^-1 (x-y) / 2)."""
    x = _points(x, "x")
    y = _points(y, "y")
    if x.shape != y.shape:
        raise ValueError("x and y differ in dimension")
    sigma = as_covariance(sigma, x.shape[0])
    chol = np.linalg.cholesky(sigma)
    w = np.linalg.solve(chol, x - y)
    return float(np.exp(-0.5 * float(w @ w)))


def convolved_kernel(x, y, sigma, s) -> float:
    """Gaussian kernel smeared by Parzen windows: k-hat(x, y; S).

    Equals |sigma|^(1/2) / |sigma+S|^(1/2) * exp(-(x-y)'(sigma+S)^-1(x-y)/2);
    S is the summed covariance of the two windows (PSD, may be zero, in which
    case this reduces to ``gaussian_kernel``).
    """
    x = _points(x, "x")
    y = _points(y, "y")
    if x.shape != y.shape:
        raise ValueError("x and y differ in dimension")
    d = x.shape[0]
    sigma = as_covariance(sigma, d)
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 0:
        s = s * np.eye(d)
    elif s.ndim == 1:
        s = np.diag(s)
    if s.shape != (d, d):
        raise ValueError("window covariance s has wrong shape")
    total = sigma + s
    _, logdet_sigma = _chol_logdet(sigma)
    try:
        chol, logdet_total = _chol_logdet(total)
    except np.linalg.LinAlgError:
        raise ValueError("sigma + s is singular") from None
    w = np.linalg.solve(chol, x - y)
    return float(np.exp(0.5 * (logdet_sigma - logdet_total) - 0.5 * float(w @ w)))


def _mise_cost(sq_dists: np.ndarray, n: int, h: float) -> float:
    """Leave-one-out MISE cost of a Gaussian KDE at bandwidth h.

    sq_dists holds the n*(n-1)/2 distinct pairwise squared distances.
    C(h) = (1/n^2) sum_ij phi_{2h^2}(d_ij) - 2/(n(n-1)) sum_{i!=j} phi_{h^2}(d_ij),
    with phi_v the centred normal density of variance v.
    """
    two_h2 = 2.0 * h * h
    # off-diagonal pair sums (each unordered pair counted once)
    s_smooth = float(np.exp(-sq_dists / (2.0 * two_h2)).sum()) / np.sqrt(2.0 * np.pi * two_h2)
    s_loo = float(np.exp(-sq_dists / (2.0 * h * h)).sum()) / np.sqrt(2.0 * np.pi * h * h)
    diag = n / np.sqrt(2.0 * np.pi * two_h2)
    return (diag + 2.0 * s_smooth) / (n * n) - 4.0 * s_loo / (n * (n - 1))


def _select_bandwidth_1d(x: np.ndarray, n_grid: int) -> float:
    n = x.shape[0]
    span = float(x.max() - x.min())
    if n < 2 or span == 0.0:
        raise ValueError("bandwidth selection needs at least 2 distinct samples")
    idx = np.triu_indices(n, k=1)
    sq = (x[idx[0]] - x[idx[1]]) ** 2
    grid = np.geomspace(span / n, span, n_grid)
    costs = np.array([_mise_cost(sq, n, h) for h in grid])
    return float(grid[int(np.argmin(costs))])


def select_bandwidth_mise(samples, n_grid: int = 50) -> float:
    """KDE bandwidth minimising the leave-one-out MISE cost on a log grid.

    The candidate grid spans [range/n, range] of the data, so the selection
    is scale-equivariant.  Multi-dimensional input gets the 1-D selector per
    dimension and the geometric mean of the results.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        return _select_bandwidth_1d(samples, n_grid)
    if samples.ndim != 2:
        raise ValueError("samples must be a 1-D or 2-D array")
    per_dim = [_select_bandwidth_1d(np.ascontiguousarray(samples[:, j]), n_grid)
               for j in range(samples.shape[1])]
    return float(np.exp(np.mean(np.log(per_dim))))
