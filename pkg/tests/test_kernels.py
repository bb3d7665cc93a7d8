import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dualfield import _kernels, feec
from dualfield.mesh import build_box_mesh
from dualfield.quadrature import tet_rule

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def random_geometry(seed, n_tet=7):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n_tet, 4, 3))
    vertices = x.reshape(-1, 3)
    tets = np.arange(4 * n_tet).reshape(n_tet, 4)
    return _kernels.tet_geometry(vertices, tets)


def test_geometry_gradients_are_dual_to_edges():
    grads, vol, sign = random_geometry(0)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(7, 4, 3))
    # grad(lambda_i) . (x_j - x_0) = delta_ij - delta_i0
    edges = x[:, 1:] - x[:, :1]
    prod = np.einsum("tia,tja->tij", grads, edges)
    expected = np.vstack([-np.ones((1, 3)), np.eye(3)])
    np.testing.assert_allclose(prod, np.broadcast_to(expected, prod.shape), atol=1e-12)
    np.testing.assert_allclose(vol, np.abs(np.linalg.det(edges)) / 6)
    np.testing.assert_array_equal(sign, np.sign(np.linalg.det(edges)))


def test_degenerate_tet_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], float)
    with pytest.raises(ValueError):
        _kernels.tet_geometry(v, np.array([[0, 1, 2, 3]]))


@needs_numba
@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([0, 1, 2, 3]), st.sampled_from([1, 2, 4]))
def test_backends_agree_on_values_and_gram(seed, k, degree):
    grads, vol, sign = random_geometry(seed)
    bary, w = tet_rule(degree)
    a = _kernels.whitney_values(k, bary, grads, vol, sign, backend="numpy")
    b = _kernels.whitney_values(k, bary, grads, vol, sign, backend="numba")
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14 * np.abs(a).max())
    coef = np.random.default_rng(seed).uniform(0.5, 2.0, vol.shape)
    ga = _kernels.element_gram(a, a, w, vol, coef, backend="numpy")
    gb = _kernels.element_gram(a, a, w, vol, coef, backend="numba")
    np.testing.assert_allclose(ga, gb, rtol=1e-13, atol=1e-14 * np.abs(ga).max())


@needs_numba
def test_backends_agree_on_assembled_operators():
    c = build_box_mesh((1.0, 0.5, 0.5), (2, 2, 2))
    try:
        _kernels.set_backend("numpy")
        ref = feec.build_operators(c)
        _kernels.set_backend("numba")
        alt = feec.build_operators(c)
    finally:
        _kernels.set_backend("auto")
    for (name, a), (_, b) in zip(ref.matrices(), alt.matrices()):
        assert abs(a - b).max() <= 1e-14 * max(abs(a).max(), 1.0), name


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (5, 4), elements=st.floats(0.01, 1.0)))
def test_whitney_values_partition_identities(raw):
    bary = raw / raw.sum(axis=1, keepdims=True)
    grads, vol, sign = random_geometry(3)
    v0 = _kernels.whitney_values(0, bary, grads, vol, sign, backend="numpy")
    np.testing.assert_allclose(v0.sum(axis=2)[..., 0], 1.0)
    v1 = _kernels.whitney_values(1, bary, grads, vol, sign, backend="numpy")
    # Edges (0,1), (0,2), (0,3): sum_j (l0 grad lj - lj grad l0) = -grad l0 since sum l = 1.
    at0 = v1[:, :, 0] + v1[:, :, 1] + v1[:, :, 2]
    np.testing.assert_allclose(at0, -grads[:, None, 0].repeat(5, axis=1), atol=1e-12)


def test_backend_selection(monkeypatch):
    assert _kernels._resolve("numpy", 10**6) == "numpy"
    assert _kernels._resolve("auto", 10) == "numpy"
    if _kernels.HAVE_NUMBA:
        assert _kernels._resolve("auto", _kernels.AUTO_NUMBA_MIN_TETS) == "numba"
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")
    monkeypatch.setenv("DUALFIELD_BACKEND", "NumPy")
    assert _kernels._default_backend() == "numpy"
    monkeypatch.setenv("DUALFIELD_BACKEND", "gpu")
    with pytest.raises(ValueError):
        _kernels._default_backend()
