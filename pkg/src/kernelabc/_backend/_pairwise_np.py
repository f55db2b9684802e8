"""Pure-NumPy pairwise Gaussian kernel sums.

Fallback backend used when the compiled extension is unavailable.  Both
backends implement the same two primitives over *whitened* point sets,
where the quadratic form of the kernel has already been reduced to a
squared Euclidean distance:

    gaussian_cross_sum(u, v) = sum_{i,j} exp(-0.5 * ||u_i - v_j||^2)
    gaussian_self_sum(u)     = sum_{i,j} exp(-0.5 * ||u_i - u_j||^2)

Sums are evaluated in fixed-size blocks; partial block sums are combined
with math.fsum, so the accumulated rounding error stays bounded for very
large point sets and the result is independent of thread scheduling.
"""

import math

import numpy as np


def _as_points(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D array of points")
    return a


def _block_size(dim):
    # keep per-block scratch (block^2 * dim doubles) around 32 MB
    return 2048 if dim == 1 else max(64, int(2048 / math.sqrt(dim)))


def _kernel_block(u, v):
    # direct differences avoid the cancellation of the |u|^2 + |v|^2 - 2uv trick
    if u.shape[1] == 1:
        sq = (u[:, 0, None] - v[None, :, 0]) ** 2
    else:
        sq = ((u[:, None, :] - v[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-0.5 * sq)


def gaussian_cross_sum(u, v):
    """Sum of exp(-0.5 ||u_i - v_j||^2) over every (i, j) pair."""
    u = _as_points(u)
    v = _as_points(v)
    if u.shape[1] != v.shape[1]:
        raise ValueError("point sets differ in dimension")
    block = _block_size(u.shape[1])
    partials = []
    for a in range(0, u.shape[0], block):
        ua = u[a:a + block]
        for b in range(0, v.shape[0], block):
            partials.append(float(_kernel_block(ua, v[b:b + block]).sum()))
    return math.fsum(partials)


def gaussian_self_sum(u):
    """Sum of exp(-0.5 ||u_i - u_j||^2) over all ordered pairs, diagonal included.

    Exploits symmetry: the strict upper triangle is evaluated once and
    doubled, and the diagonal contributes exactly n because k(x, x) = 1.
    """
    u = _as_points(u)
    n = u.shape[0]
    block = _block_size(u.shape[1])
    partials = []
    for a in range(0, n, block):
        ua = u[a:a + block]
        partials.append(float(np.triu(_kernel_block(ua, ua), 1).sum()))
        for b in range(a + block, n, block):
            partials.append(float(_kernel_block(ua, u[b:b + block]).sum()))
    return float(n) + 2.0 * math.fsum(partials)
