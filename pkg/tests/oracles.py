"""Independent reference computations used by the tests.

Everything here is built from first principles with sympy or brute-force
enumeration and shares no code with the package.
"""

from functools import lru_cache
from itertools import combinations

import numpy as np
import sympy as sp

X, Y, Z = sp.symbols("x y z", real=True)
XI = sp.symbols("u v w", real=True)


def symbolic_barycentrics(vertices):
    """Barycentric coordinates of a tetrahedron as linear sympy expressions in x, y, z."""
    v = sp.Matrix(vertices)
    A = sp.Matrix.hstack(*[(v.row(i) - v.row(0)).T for i in (1, 2, 3)])
    rhs = sp.Matrix([X, Y, Z]) - v.row(0).T
    l123 = A.inv() * rhs
    return [sp.expand(1 - sum(l123))] + [sp.expand(e) for e in l123], abs(A.det()) / 6, A.det()


def _grad(f):
    return sp.Matrix([sp.diff(f, s) for s in (X, Y, Z)])


def symbolic_whitney(vertices, k):
    """Whitney k-form proxies of one tet in sorted local numbering."""
    lam, vol, det = symbolic_barycentrics(vertices)
    g = [_grad(l) for l in lam]
    if k == 0:
        return [sp.Matrix([l]) for l in lam]
    if k == 1:
        return [lam[i] * g[j] - lam[j] * g[i] for i, j in combinations(range(4), 2)]
    if k == 2:
        return [2 * (lam[i] * g[j].cross(g[m]) - lam[j] * g[i].cross(g[m]) + lam[m] * g[i].cross(g[j]))
                for i, j, m in combinations(range(4), 3)]
    if k == 3:
        return [sp.Matrix([sp.sign(det) / vol])]
    raise ValueError(k)


def integrate_over_tet(vertices, expr):
    """Exact integral of a polynomial in x, y, z over the tetrahedron."""
    v = sp.Matrix(vertices)
    A = sp.Matrix.hstack(*[(v.row(i) - v.row(0)).T for i in (1, 2, 3)])
    u, vv, w = XI
    point = v.row(0).T + A * sp.Matrix([u, vv, w])
    mapped = sp.expand(expr.subs({X: point[0], Y: point[1], Z: point[2]}, simultaneous=True))
    inner = sp.integrate(mapped, (w, 0, 1 - u - vv))
    middle = sp.integrate(inner, (vv, 0, 1 - u))
    return sp.integrate(middle, (u, 0, 1)) * abs(A.det())


@lru_cache(maxsize=None)
def pairing_matrix(vertices, k_row, k_col):
    """Exact matrix of integrals of phi_i^{k_row} . phi_j^{k_col} on one tet."""
    a = symbolic_whitney(vertices, k_row)
    b = symbolic_whitney(vertices, k_col)
    return sp.Matrix(len(a), len(b), lambda i, j: integrate_over_tet(vertices, (a[i].T * b[j])[0]))


def brute_force_simplices(tets):
    """All k-faces of a tet list as sorted sets of sorted tuples."""
    out = []
    for k in range(4):
        faces = set()
        for t in tets:
            faces.update(tuple(sorted(c)) for c in combinations(t, k + 1))
        out.append(sorted(faces))
    return out


def permutation_sign(seq):
    """Sign of the permutation sorting ``seq`` (counts inversions)."""
    seq = list(seq)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def brute_force_incidence(upper, lower):
    """Dense coboundary matrix from the induced boundary orientation.

    The boundary of the oriented simplex [v0..vk] is sum_m (-1)^m [v0..^vm..vk];
    the coefficient on a sorted face is that sign times the sign of sorting the face.
    """
    index = {s: i for i, s in enumerate(lower)}
    mat = np.zeros((len(upper), len(lower)), dtype=np.int64)
    for r, s in enumerate(upper):
        for m in range(len(s)):
            face = s[:m] + s[m + 1:]
            mat[r, index[tuple(sorted(face))]] += (-1) ** m * permutation_sign(face)
    return mat


@lru_cache(maxsize=None)
def wave_energy_at_zero():
    """Exact H(0) = 1/2 int (g f'(0))^2 + |grad g f(0)|^2 over [0,1]x[0,1/2]^2."""
    g = sp.cos(X) * sp.sin(Y) * sp.sin(Z)
    f0, df0 = 3, 2 * sp.sqrt(3)
    density = (g * df0) ** 2 + sum((sp.diff(g, s) * f0) ** 2 for s in (X, Y, Z))
    value = sp.integrate(density, (X, 0, 1), (Y, 0, sp.Rational(1, 2)), (Z, 0, sp.Rational(1, 2)))
    return sp.nsimplify(value / 2), float(value / 2)
