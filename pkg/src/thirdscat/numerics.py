"""Small numerical helpers: finite-difference weights, derivatives, quadrature."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


def fornberg_weights(z0: float, nodes, m: int) -> np.ndarray:
    """Fornberg's finite-difference weights; returns array (m+1, len(nodes))."""
    x = np.asarray(nodes, dtype=float)
    n = x.size
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for s in range(mn, 0, -1):
                    c[i, s] = c1 * (s * c[i - 1, s - 1] - c5 * c[i - 1, s]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for s in range(mn, 0, -1):
                c[j, s] = (c4 * c[j, s] - s * c[j, s - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c.T


@lru_cache(maxsize=64)
def _stencils(order: int, width: int):
    """Weights for each offset position of a ``width``-point stencil."""
    out = []
    for shift in range(width):
        nodes = np.arange(width) - shift
        out.append(fornberg_weights(0.0, nodes, order)[order])
    return np.array(out)


def derivative(y: np.ndarray, dx: float, order: int = 1, accuracy: int = 6, axis: int = -1) -> np.ndarray:
    """Finite-difference derivative on a uniform grid.

    Centered stencils in the interior, one-sided stencils of the same width
    near the ends.
    """
    y = np.moveaxis(np.asarray(y), axis, -1)
    width = accuracy + order + (1 if (accuracy + order) % 2 == 0 else 0)
    width = max(width, order + 1)
    n = y.shape[-1]
    if n < width:
        raise ValueError("grid too short for requested stencil")
    W = _stencils(order, width)
    half = width // 2
    out = np.zeros_like(y, dtype=np.result_type(y, float))
    wc = W[half]
    for j in range(width):
        out[..., half:n - half] += wc[j] * y[..., j:n - width + 1 + j]
    for i in range(half):
        out[..., i] = y[..., :width] @ W[i]
        out[..., n - 1 - i] = y[..., n - width:] @ W[width - 1 - i]
    out /= dx ** order
    return np.moveaxis(out, -1, axis)


def gauss_legendre_panels(breaks, nodes_per_panel: int):
    """Composite Gauss-Legendre nodes and weights on the given breakpoints."""
    t, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    b = np.asarray(breaks, dtype=float)
    a, c = b[:-1, None], b[1:, None]
    x = 0.5 * (c - a) * t[None, :] + 0.5 * (c + a)
    wx = 0.5 * (c - a) * w[None, :]
    return x.ravel(), wx.ravel()


def cumulative_from_right(func, x: np.ndarray, nodes: int = 10) -> np.ndarray:
    """``int_x^{x[-1]} func`` on every grid point, Gauss-Legendre per cell."""
    x = np.asarray(x, dtype=float)
    t, w = np.polynomial.legendre.leggauss(nodes)
    a, b = x[:-1, None], x[1:, None]
    pts = 0.5 * (b - a) * t + 0.5 * (b + a)
    cell = (0.5 * (b - a) * w * func(pts)).sum(axis=1)
    out = np.zeros(x.size, dtype=complex)
    out[:-1] = np.cumsum(cell[::-1])[::-1]
    return out


def cumulative_from_left(func, x: np.ndarray, nodes: int = 10) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    t, w = np.polynomial.legendre.leggauss(nodes)
    a, b = x[:-1, None], x[1:, None]
    pts = 0.5 * (b - a) * t + 0.5 * (b + a)
    cell = (0.5 * (b - a) * w * func(pts)).sum(axis=1)
    out = np.zeros(x.size, dtype=complex)
    out[1:] = np.cumsum(cell)
    return out


def rel_l2(a, b) -> float:
    """Relative L2 distance ``|a-b| / |b|``."""
    a, b = np.asarray(a), np.asarray(b)
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / (nb if nb > 0 else 1.0))
