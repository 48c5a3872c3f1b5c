"""Higher-order product kernels built from Legendre polynomials.

The 1-d kernel of order m is sum_{j<=m} phi_j(0) phi_j(u) on [-1, 1], where
phi_j are the orthonormal Legendre polynomials. It integrates to one, has
vanishing moments up to order m, and reproduces polynomials of degree <= m
under convolution, which gives bias O(h^alpha) for alpha-smooth targets with
m = floor(alpha) + 1. The d-dimensional kernel is the coordinate product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Cell, inflated_box


class EmptySample(ValueError):
    """Kernel estimate requested with no samples."""


def _legendre_orthonormal(js: list[int], u: np.ndarray) -> np.ndarray:
    """Stacked orthonormal Legendre values, shape (len(js), *u.shape)."""
    jmax = max(js)
    p_prev = np.ones_like(u)
    p_cur = u.copy()
    rows = {}
    if 0 in js:
        rows[0] = p_prev * math.sqrt(0.5)
    if jmax >= 1 and 1 in js:
        rows[1] = p_cur * math.sqrt(1.5)
    for j in range(2, jmax + 1):
        p_next = ((2 * j - 1) * u * p_cur - (j - 1) * p_prev) / j
        p_prev, p_cur = p_cur, p_next
        if j in js:
            rows[j] = p_cur * math.sqrt((2 * j + 1) / 2.0)
    return np.stack([rows[j] for j in js])


@dataclass(frozen=True)
class LegendreKernel:
    alpha: float
    dim: int
    order: int = field(init=False)

    def __post_init__(self):
        if self.alpha <= 0 or self.dim < 1:
            raise ValueError("need alpha > 0 and dim >= 1")
        object.__setattr__(self, "order", int(math.floor(self.alpha)) + 1)

    def eval1d(self, u) -> np.ndarray:
        """k(u) on the real line; identically zero outside [-1, 1]."""
        u = np.asarray(u, dtype=float)
        js = list(range(self.order + 1))
        phi_u = _legendre_orthonormal(js, u)
        phi_0 = _legendre_orthonormal(js, np.zeros(1))[:, 0]
        vals = np.tensordot(phi_0, phi_u, axes=(0, 0))
        return np.where(np.abs(u) <= 1.0, vals, 0.0)

    def eval(self, z) -> np.ndarray:
        """Product kernel over the last axis of z (shape (..., dim))."""
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.dim:
            raise ValueError("last axis of z must equal dim")
        out = np.ones(z.shape[:-1])
        for i in range(self.dim):
            out *= self.eval1d(z[..., i])
        return out

    @property
    def sup_bound(self) -> float:
        return (2.0 * self.alpha + 2.0) ** self.dim


def kernel_estimate(kernel: LegendreKernel, cell: Cell, points: np.ndarray,
                    labels: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Local regression estimate at x from samples uniform on the inflated cell.

    The normalisation 3^d / t makes the estimate unbiased for the kernel
    smoothing of the regression function: the inflated cell has volume
    (3 * 2^-L)^d while the kernel support around x spans (2 * 2^-L)^d inside
    it. Values are not clipped to [0, 1].
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if points.size == 0:
        raise EmptySample("no samples provided")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = points.shape[0]
    scale = 2.0**cell.depth
    norm = 3.0**cell.dim / t
    out = np.empty(x.shape[0])
    # chunk the (queries x samples) kernel matrix to bound memory
    max_block = max(1, int(2**22 / max(t, 1)))
    for start in range(0, x.shape[0], max_block):
        xq = x[start:start + max_block]
        z = (xq[:, None, :] - points[None, :, :]) * scale
        out[start:start + max_block] = norm * (kernel.eval(z) @ labels)
    return out
