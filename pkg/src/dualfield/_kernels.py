"""Per-tetrahedron kernels: Whitney proxy evaluation and element Gram matrices.

Two interchangeable implementations are provided. The numba one loops over
tets explicitly; the numpy one vectorizes with einsum. The environment
variable ``DUALFIELD_BACKEND`` selects ``numba``, ``numpy`` or ``auto``
(default). ``auto`` uses numba only for meshes large enough to amortize JIT
start-up, and falls back to numpy when numba is not installed. numba is
imported lazily so small runs never pay its import cost.
"""

from __future__ import annotations

import importlib.util
import os
from functools import lru_cache

import numpy as np

HAVE_NUMBA = importlib.util.find_spec("numba") is not None
AUTO_NUMBA_MIN_TETS = 20000
BACKENDS = ("auto", "numba", "numpy")

LOCAL_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]], dtype=np.int64)
LOCAL_FACES = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]], dtype=np.int64)
N_LOCAL = (4, 6, 4, 1)
N_COMPONENTS = (1, 3, 3, 1)


def _default_backend() -> str:
    choice = os.environ.get("DUALFIELD_BACKEND", "auto").lower()
    if choice not in BACKENDS:
        raise ValueError(f"DUALFIELD_BACKEND must be one of {BACKENDS}, got {choice!r}")
    return choice


_backend = _default_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


def _resolve(backend: str | None, n_tet: int) -> str:
    backend = backend or _backend
    if backend == "auto":
        return "numba" if HAVE_NUMBA and n_tet >= AUTO_NUMBA_MIN_TETS else "numpy"
    return backend


def tet_geometry(vertices: np.ndarray, tets: np.ndarray):
    """Barycentric gradients (T,4,3), volumes (T,) and orientation signs (T,).

    The sign is +1 when the sorted vertex order is positively oriented in R^3.
    """
    x = vertices[tets]
    jac = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))  # columns x_i - x_0
    det = np.linalg.det(jac)
    if np.any(np.abs(det) <= 1e-300):
        raise ValueError("degenerate tetrahedron")
    inv = np.linalg.inv(jac)  # rows are grad(lambda_1..3)
    grads = np.empty((tets.shape[0], 4, 3))
    grads[:, 1:, :] = inv
    grads[:, 0, :] = -inv.sum(axis=1)
    return grads, np.abs(det) / 6.0, np.sign(det)


# ---------------------------------------------------------------- numpy path

def _values_numpy(k, bary, grads, vol, orient):
    n_tet, nq = grads.shape[0], bary.shape[0]
    if k == 0:
        return np.broadcast_to(bary[None, :, :, None], (n_tet, nq, 4, 1)).copy()
    if k == 1:
        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        return (bary[None, :, i, None] * grads[:, None, j, :]
                - bary[None, :, j, None] * grads[:, None, i, :])
    if k == 2:
        i, j, m = LOCAL_FACES.T
        cjm = np.cross(grads[:, j], grads[:, m])
        cim = np.cross(grads[:, i], grads[:, m])
        cij = np.cross(grads[:, i], grads[:, j])
        return 2.0 * (bary[None, :, i, None] * cjm[:, None]
                      - bary[None, :, j, None] * cim[:, None]
                      + bary[None, :, m, None] * cij[:, None])
    if k == 3:
        val = (orient / vol)[:, None, None, None]
        return np.broadcast_to(val, (n_tet, nq, 1, 1)).copy()
    raise ValueError(f"form degree {k} out of range")


def _derivative_numpy(k, grads):
    if k == 0:
        return grads.copy()
    if k == 1:
        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        return 2.0 * np.cross(grads[:, i], grads[:, j])
    if k == 2:
        i, j, m = LOCAL_FACES.T
        trip = np.einsum("tfa,tfa->tf", grads[:, i], np.cross(grads[:, j], grads[:, m]))
        return 6.0 * trip[:, :, None]
    raise ValueError(f"no exterior derivative proxy for degree {k}")


def _gram_numpy(a, b, weights, vol, coef):
    scale = vol * coef
    return np.einsum("q,tqic,tqjc->tij", weights, a, b) * scale[:, None, None]


# ---------------------------------------------------------------- numba path

@lru_cache(maxsize=None)
def _numba_kernels():
    from . import _numba_kernels as nk

    return nk.whitney_values, nk.element_gram


# ---------------------------------------------------------------- dispatch

def whitney_values(k: int, bary, grads, vol, orient, backend: str | None = None):
    """Whitney k-form proxies at barycentric points, shape (T, nq, n_local, n_comp)."""
    if k not in (0, 1, 2, 3):
        raise ValueError(f"form degree {k} out of range")
    backend = _resolve(backend, grads.shape[0])
    bary = np.ascontiguousarray(bary, dtype=np.float64)
    if backend == "numba":
        values = _numba_kernels()[0]
        return values(k, bary, np.ascontiguousarray(grads), vol, orient, LOCAL_EDGES, LOCAL_FACES)
    return _values_numpy(k, bary, grads, vol, orient)


def whitney_derivative(k: int, grads):
    """Proxies of d(phi) for the Whitney k-forms (constant per tet), shape (T, n_local, n_comp)."""
    return _derivative_numpy(k, grads)


def element_gram(a, b, weights, vol, coef=None, backend: str | None = None):
    """Local matrices sum_q w_q |T| c_T a_i(x_q) . b_j(x_q), shape (T, na, nb)."""
    backend = _resolve(backend, vol.shape[0])
    coef = np.ones(vol.shape[0]) if coef is None else np.broadcast_to(coef, vol.shape).astype(float)
    if backend == "numba":
        gram = _numba_kernels()[1]
        return gram(np.ascontiguousarray(a), np.ascontiguousarray(b), np.ascontiguousarray(weights),
                    vol, np.ascontiguousarray(coef))
    return _gram_numpy(a, b, weights, vol, coef)
