"""Distances between two sample sets.

Biased and unbiased MMD estimates under a Gaussian kernel, the
Parzen-smoothed variant (kernel distance between KDE mean embeddings),
the classic Euclidean summary distance, and the exponential soft weight
applied on top of any of them.

Every pairwise kernel sum reduces to a squared Euclidean distance after
whitening by the Cholesky factor of the relevant covariance, so all the
O(N^2) work funnels through the `_backend` primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import gaussian_cross_sum, gaussian_self_sum
from .kernels import KernelConfig, as_covariance

__all__ = [
    "DistanceSpec",
    "mmd_biased",
    "mmd_unbiased",
    "parzen_distance",
    "summary_distance",
    "soft_weight",
]

DISTANCE_KINDS = ("mmd-biased", "mmd-unbiased", "parzen", "summary-euclidean")


def _sample_set(data, name: str) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty set of points")
    return np.ascontiguousarray(x)


def _pair(x_data, y_data):
    x = _sample_set(x_data, "X")
    y = _sample_set(y_data, "Y")
    if x.shape[1] != y.shape[1]:
        raise ValueError("sample sets differ in dimension")
    return x, y


def _whiten(points: np.ndarray, cov: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(cov)
    return np.ascontiguousarray(
        np.linalg.solve(chol, points.T).T if points.shape[1] > 1
        else points / chol[0, 0]
    )


def mmd_biased(x_data, y_data, sigma) -> float:
    """Biased (V-statistic) squared MMD between two sample sets."""
    x, y = _pair(x_data, y_data)
    sigma = as_covariance(sigma, x.shape[1])
    u, v = _whiten(x, sigma), _whiten(y, sigma)
    nx, ny = u.shape[0], v.shape[0]
    return (gaussian_self_sum(u) / (nx * nx)
            + gaussian_self_sum(v) / (ny * ny)
            - 2.0 * gaussian_cross_sum(u, v) / (nx * ny))


def mmd_unbiased(x_data, y_data, sigma) -> float:
    """Unbiased (U-statistic) squared MMD; may be negative."""
    x, y = _pair(x_data, y_data)
    nx, ny = x.shape[0], y.shape[0]
    if nx < 2 or ny < 2:
        raise ValueError("unbiased MMD needs at least 2 points per set")
    sigma = as_covariance(sigma, x.shape[1])
    u, v = _whiten(x, sigma), _whiten(y, sigma)
    # the diagonal of each self sum is exactly nx (resp. ny) since k(x, x) = 1
    return ((gaussian_self_sum(u) - nx) / (nx * (nx - 1))
            + (gaussian_self_sum(v) - ny) / (ny * (ny - 1))
            - 2.0 * gaussian_cross_sum(u, v) / (nx * ny))


def parzen_distance(x_data, y_data, config: KernelConfig) -> float:
    """Squared kernel distance between the Parzen-smoothed mean embeddings.

    Each term is a convolved-kernel sum: the smearing covariance is
    2*h_p^2*I for the X self term, 2*h_q^2*I for the Y self term, and
    (h_p^2 + h_q^2)*I for the cross term.  Nonnegative up to float round-off;
    collapses onto ``mmd_biased`` as both bandwidths go to zero.
    """
    x, y = _pair(x_data, y_data)
    d = x.shape[1]
    if config.dim != d:
        raise ValueError("kernel config dimension does not match the data")
    sigma = config.sigma
    eye = np.eye(d)

    def term(points_a, points_b, window_var):
        total = sigma + window_var * eye
        chol = np.linalg.cholesky(total)
        log_pref = 0.5 * (np.linalg.slogdet(sigma)[1] - 2.0 * np.sum(np.log(np.diag(chol))))
        ua = _whiten(points_a, total)
        if points_b is None:
            return math.exp(log_pref) * gaussian_self_sum(ua)
        return math.exp(log_pref) * gaussian_cross_sum(ua, _whiten(points_b, total))

    nx, ny = x.shape[0], y.shape[0]
    hp2, hq2 = config.h_p ** 2, config.h_q ** 2
    return (term(x, None, 2.0 * hp2) / (nx * nx)
            + term(y, None, 2.0 * hq2) / (ny * ny)
            - 2.0 * term(x, y, hp2 + hq2) / (nx * ny))


def summary_distance(s_obs, s_sim) -> float:
    """Euclidean distance between two summary-statistic vectors."""
    a = np.atleast_1d(np.asarray(s_obs, dtype=np.float64))
    b = np.atleast_1d(np.asarray(s_sim, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError("summary vectors differ in length")
    return float(np.linalg.norm(a - b))


def soft_weight(gamma: float, epsilon: float) -> float:
    """Second-level exponential kernel exp(-gamma / epsilon) in (0, 1]."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return math.exp(-gamma / epsilon)


@dataclass(frozen=True)
class DistanceSpec:
    """Which dataset distance an engine runs, and the soft-kernel scale.

    kind : one of {mmd-biased, mmd-unbiased, parzen, summary-euclidean}
    kernel : required for the kernel-embedding kinds, ignored otherwise
    epsilon : scale of the exponential soft weight; None lets the engine
        anchor it at the distance of the ~10th-closest simulation
    """

    kind: str
    kernel: KernelConfig | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.kind in ("mmd-biased", "mmd-unbiased", "parzen") and self.kernel is None:
            raise ValueError(f"distance kind {self.kind!r} needs a kernel config")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive when given")

    def compute(self, x_data, y_data) -> float:
        """Dataset distance for the kernel-embedding kinds."""
        if self.kind == "mmd-biased":
            return mmd_biased(x_data, y_data, self.kernel.sigma)
        if self.kind == "mmd-unbiased":
            return mmd_unbiased(x_data, y_data, self.kernel.sigma)
        if self.kind == "parzen":
            return parzen_distance(x_data, y_data, self.kernel)
        raise ValueError("summary-euclidean operates on summary vectors, not sample sets")
