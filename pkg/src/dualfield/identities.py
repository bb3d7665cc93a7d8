"""Matrix identities and sign invariants of the assembled operators.

Every check returns an :class:`IdentityCheck`; ``run_identity_checks``
collects the full table that the ``verify`` command prints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import feec
from .feec import OperatorSet
from .phsys import make_config, parity_signs, sign_exponents

DIM = feec.DIM
STOKES_TOL = 1e-12
SYMMETRY_TOL = 1e-13
CONFIGURATIONS = ((3, 1), (2, 2))


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} residual={self.residual:.3e}  tol={self.tolerance:.0e}"


def _fro(matrix) -> float:
    if sp.issparse(matrix):
        return float(sp.linalg.norm(matrix))
    return float(np.linalg.norm(matrix))


def relative_residual(residual, *terms) -> float:
    """||residual||_F divided by the largest Frobenius norm among ``terms``."""
    scale = max((_fro(t) for t in terms), default=0.0)
    value = _fro(residual)
    return value if scale == 0.0 else value / scale


def incidence_exactness(ops: OperatorSet):
    """d^{k+1} d^k = 0 in exact integer arithmetic."""
    out = []
    for k in range(DIM - 1):
        product = (ops.incidence[k + 1] @ ops.incidence[k]).tocoo()
        out.append(IdentityCheck(f"d{k + 1} d{k} = 0", float(np.abs(product.data).sum()), 0.0))
    return out


def stokes_residual(ops: OperatorSet, k: int, psi_sign: float = 1.0) -> float:
    """Relative residual of the discrete integration-by-parts identity for degree k.

    (-1)^{(k+1)(n-k-1)} (G^k)^T + (-1)^k G^{n-k-1} = (T^k)^T Psi^{n-k-1} T^{n-k-1}
    """
    j = DIM - k - 1
    G = ops.dual_derivative
    volume = (-1) ** ((k + 1) * j) * G[k].T + (-1) ** k * G[j]
    boundary = psi_sign * (ops.trace[k].T @ ops.boundary_wedge[j] @ ops.trace[j])
    return relative_residual(volume - boundary, volume, boundary)


def ph_stokes_residual(ops: OperatorSet, p: int, q: int, psi_sign: float = 1.0) -> float:
    """Relative residual of (-1)^r (G^{p-1})^T + G^{q-1} + (-1)^p (T^{p-1})^T Psi^{q-1} T^{q-1} = 0."""
    r = sign_exponents(p, q)[0]
    G = ops.dual_derivative
    a = (-1) ** r * G[p - 1].T
    b = G[q - 1]
    c = psi_sign * (-1) ** p * (ops.trace[p - 1].T @ ops.boundary_wedge[q - 1] @ ops.trace[q - 1])
    return relative_residual(a + b + c, a, b, c)


def run_identity_checks(ops: OperatorSet, psi_sign: float = 1.0) -> list:
    """All identity and sign checks on one operator set.

    ``psi_sign = -1`` flips the boundary wedge orientation, a negative control
    under which the Stokes-type checks must fail.
    """
    complex = ops.complex
    checks = incidence_exactness(ops)
    for k in (0, 1):
        checks.append(IdentityCheck(f"Stokes identity k={k}", stokes_residual(ops, k, psi_sign),
                                    STOKES_TOL))
    for p, q in CONFIGURATIONS:
        checks.append(IdentityCheck(f"port Stokes identity (p,q)=({p},{q})",
                                    ph_stokes_residual(ops, p, q, psi_sign), STOKES_TOL))
        config = make_config(p, q)
        direct = ((-1) ** sign_exponents(p, q)[1], (-1) ** sign_exponents(p, q)[2])
        mismatch = float(direct != parity_signs(p, q) or direct != (config.sign_a0, config.sign_a1))
        checks.append(IdentityCheck(f"sign parity (p,q)=({p},{q})", mismatch, 0.0))
    for k in range(DIM + 1):
        L, Lt = ops.duality[k], ops.duality[DIM - k].T
        sign = (-1) ** (k * (DIM - k))
        checks.append(IdentityCheck(f"L{k} = (-1)^k(n-k) (L{DIM - k})^T",
                                    relative_residual(L - sign * Lt, L), SYMMETRY_TOL))
    for k in (0, 1):
        j = DIM - k - 1
        P, Pt = ops.boundary_wedge[k], ops.boundary_wedge[j].T
        sign = (-1) ** (k * j)
        checks.append(IdentityCheck(f"Psi{k} = (-1)^k(n-k-1) (Psi{j})^T",
                                    relative_residual(P - sign * Pt, P), SYMMETRY_TOL))
    for k in range(DIM):
        direct = feec.assemble_derivative_pairing(complex, k + 1, k, ops.geometry)
        checks.append(IdentityCheck(f"D{k} = M{k + 1} d{k} (two assembly paths)",
                                    relative_residual(ops.derivative[k] - direct, direct), SYMMETRY_TOL))
        direct = feec.assemble_derivative_pairing(complex, DIM - k - 1, k, ops.geometry)
        checks.append(IdentityCheck(f"G{k} = L{k + 1} d{k} (two assembly paths)",
                                    relative_residual(ops.dual_derivative[k] - direct, direct),
                                    SYMMETRY_TOL))
    ones = np.ones(complex.count(0))
    checks.append(IdentityCheck("D0 applied to constants = 0",
                                relative_residual(ops.derivative[0] @ ones, ops.derivative[0]),
                                SYMMETRY_TOL))
    for k in range(DIM + 1):
        M = ops.mass[k]
        checks.append(IdentityCheck(f"M{k} symmetric", relative_residual(M - M.T, M), SYMMETRY_TOL))
    for k in range(DIM):
        T = ops.trace[k]
        selector = (np.all(T.data == 1.0) and np.all(np.diff(T.indptr) == 1)
                    and np.unique(T.indices).size == T.shape[0])
        checks.append(IdentityCheck(f"T{k} is a 0/1 selector", 0.0 if selector else 1.0, 0.0))
    return checks
