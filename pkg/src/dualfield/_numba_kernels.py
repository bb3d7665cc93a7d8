"""numba implementations of the per-tet kernels in :mod:`dualfield._kernels`.

Imported lazily so that small runs never pay numba's import and JIT cost.
"""

import numpy as np
from numba import njit

_NJIT_OPTS = dict(cache=True, nogil=True)


@njit(**_NJIT_OPTS)
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@njit(**_NJIT_OPTS)
def whitney_values(k, bary, grads, vol, orient, edges, faces):
    n_tet = grads.shape[0]
    nq = bary.shape[0]
    if k == 0:
        out = np.empty((n_tet, nq, 4, 1))
        for t in range(n_tet):
            for q in range(nq):
                for i in range(4):
                    out[t, q, i, 0] = bary[q, i]
        return out
    if k == 1:
        out = np.empty((n_tet, nq, 6, 3))
        for t in range(n_tet):
            for q in range(nq):
                for e in range(6):
                    i = edges[e, 0]
                    j = edges[e, 1]
                    for c in range(3):
                        out[t, q, e, c] = bary[q, i] * grads[t, j, c] - bary[q, j] * grads[t, i, c]
        return out
    if k == 2:
        out = np.empty((n_tet, nq, 4, 3))
        for t in range(n_tet):
            for f in range(4):
                i = faces[f, 0]
                j = faces[f, 1]
                m = faces[f, 2]
                g = grads[t]
                cjm = _cross(g[j, 0], g[j, 1], g[j, 2], g[m, 0], g[m, 1], g[m, 2])
                cim = _cross(g[i, 0], g[i, 1], g[i, 2], g[m, 0], g[m, 1], g[m, 2])
                cij = _cross(g[i, 0], g[i, 1], g[i, 2], g[j, 0], g[j, 1], g[j, 2])
                for q in range(nq):
                    for c in range(3):
                        out[t, q, f, c] = 2.0 * (bary[q, i] * cjm[c] - bary[q, j] * cim[c]
                                                 + bary[q, m] * cij[c])
        return out
    out = np.empty((n_tet, nq, 1, 1))
    for t in range(n_tet):
        for q in range(nq):
            out[t, q, 0, 0] = orient[t] / vol[t]
    return out


@njit(**_NJIT_OPTS)
def element_gram(a, b, weights, vol, coef):
    n_tet, nq, na, nc = a.shape
    nb = b.shape[2]
    out = np.zeros((n_tet, na, nb))
    for t in range(n_tet):
        scale = vol[t] * coef[t]
        for q in range(nq):
            wq = weights[q] * scale
            for i in range(na):
                for j in range(nb):
                    acc = 0.0
                    for c in range(nc):
                        acc += a[t, q, i, c] * b[t, q, j, c]
                    out[t, i, j] += wq * acc
    return out
