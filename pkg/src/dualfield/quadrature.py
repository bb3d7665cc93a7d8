"""Quadrature rules on the reference segment, triangle and tetrahedron.

Points are returned in barycentric coordinates and weights are normalized to
sum to one, so an integral over a simplex S is ``|S| * sum(w * f(points))``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


def _gauss_jacobi01(n: int, alpha: float):
    """Gauss-Jacobi nodes on [0, 1] for the weight (1 - t)^alpha, weights summing to 1."""
    x, w = roots_jacobi(n, alpha, 0.0)
    t = 0.5 * (x + 1.0)
    return t, w / w.sum()


@lru_cache(maxsize=None)
def segment_rule(degree: int):
    """Gauss-Legendre rule exact for polynomials of the given degree."""
    n = degree // 2 + 1
    t, w = _gauss_jacobi01(n, 0.0)
    bary = np.column_stack([1.0 - t, t])
    return bary, w


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    if degree <= 1:
        return np.full((1, 3), 1.0 / 3.0), np.ones(1)
    if degree == 2:
        a, b = 2.0 / 3.0, 1.0 / 6.0
        bary = np.array([[a, b, b], [b, a, b], [b, b, a]])
        return bary, np.full(3, 1.0 / 3.0)
    n = degree // 2 + 1
    u, wu = _gauss_jacobi01(n, 1.0)
    v, wv = _gauss_jacobi01(n, 0.0)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv)
    l1 = uu
    l2 = (1.0 - uu) * vv
    bary = np.column_stack([(1.0 - l1 - l2).ravel(), l1.ravel(), l2.ravel()])
    return bary, ww.ravel()


@lru_cache(maxsize=None)
def tet_rule(degree: int):
    if degree <= 1:
        return np.full((1, 4), 0.25), np.ones(1)
    if degree == 2:
        a = (5.0 + 3.0 * np.sqrt(5.0)) / 20.0
        b = (5.0 - np.sqrt(5.0)) / 20.0
        bary = np.full((4, 4), b)
        np.fill_diagonal(bary, a)
        return bary, np.full(4, 0.25)
    n = degree // 2 + 1
    u, wu = _gauss_jacobi01(n, 2.0)
    v, wv = _gauss_jacobi01(n, 1.0)
    s, ws = _gauss_jacobi01(n, 0.0)
    uu, vv, ss = np.meshgrid(u, v, s, indexing="ij")
    ww = wu[:, None, None] * wv[None, :, None] * ws[None, None, :]
    l1 = uu
    l2 = (1.0 - uu) * vv
    l3 = (1.0 - uu) * (1.0 - vv) * ss
    bary = np.column_stack([(1.0 - l1 - l2 - l3).ravel(), l1.ravel(), l2.ravel(), l3.ravel()])
    return bary, ww.ravel()
