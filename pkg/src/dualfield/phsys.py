"""Primal and dual discrete port-Hamiltonian systems.

Both systems share one algebraic shape. With ``upper`` the field of degree
k+1, ``lower`` the field of degree k carrying the boundary conditions, D the
unweighted derivative matrix M^{k+1} d^k and F/E the free/essential DOFs of
``lower``::

    M_upper d(upper)/dt   =  s D lower
    [M_lower]_F d(lower)/dt = -s [D^T]_F upper + [K]_F u_natural
    lower_E = c_E u_essential

Primal (outer oriented): upper = e1^p, lower = e2^{p-1}, s = (-1)^p,
K = (-1)^p B^{q-1} on Gamma_1, c_E = (-1)^p, essential part Gamma_2.

Dual (inner oriented): upper = e2^q, lower = e1^{q-1}, s = -1,
K = (-1)^{(p-1)(q-1)} B^{p-1} on Gamma_2, c_E = 1, essential part Gamma_1.

Both systems are driven by the same two boundary signals: u1 on the
(q-1)-simplices of the closure of Gamma_1 and u2 on the (p-1)-simplices of
the closure of Gamma_2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .feec import OperatorSet
from .mesh import SimplicialComplex

DIM = 3


class ConfigError(ValueError):
    """Invalid (p, q) configuration or material data."""


@dataclass(frozen=True)
class Materials:
    """Positive constant weights of the four mass matrices.

    ``primal_upper`` weights the p-form of the primal system and
    ``primal_lower`` its (p-1)-form; ``dual_lower`` and ``dual_upper``
    weight the (q-1)- and q-forms of the dual system.
    """

    primal_upper: float = 1.0
    primal_lower: float = 1.0
    dual_lower: float = 1.0
    dual_upper: float = 1.0

    def __post_init__(self):
        for name in ("primal_upper", "primal_lower", "dual_lower", "dual_upper"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ConfigError(f"material {name} must be positive, got {value}")


@dataclass(frozen=True)
class PHConfig:
    p: int
    q: int
    n: int
    r: int
    sign_a0: int
    sign_a1: int
    materials: Materials

    @property
    def primal_sign(self) -> int:
        """(-1)^p, the interconnection sign of the primal system."""
        return -1 if self.p % 2 else 1

    @property
    def dual_control_sign(self) -> int:
        """(-1)^{(p-1)(q-1)}, the sign of the dual boundary control."""
        return -1 if ((self.p - 1) * (self.q - 1)) % 2 else 1


def sign_exponents(p: int, q: int, n: int = DIM):
    """Exponents (r, a0, a1) of the Stokes-Dirac sign coefficients."""
    r = p * q + 1
    a0 = r + p * (n - p) + q * (n - q) + n * (q + 1) + 1
    a1 = n * (p + 1) + 1
    return r, a0, a1


def parity_signs(p: int, q: int, n: int = DIM):
    """Signs (-1)^{a0}, (-1)^{a1} from the parity rule a0 = 1, a1 = 1 + r + p(n-p) + q(n-q) mod 2."""
    r = p * q + 1
    return -1, (-1) ** (1 + r + p * (n - p) + q * (n - q))


def make_config(p: int, q: int, materials: Materials | None = None) -> PHConfig:
    if not (isinstance(p, (int, np.integer)) and isinstance(q, (int, np.integer))):
        raise ConfigError("p and q must be integers")
    if p + q != DIM + 1 or not (1 <= p <= DIM and 1 <= q <= DIM):
        raise ConfigError(f"need p + q = {DIM + 1} with 1 <= p, q <= {DIM}, got p={p}, q={q}")
    r, a0, a1 = sign_exponents(p, q)
    direct = ((-1) ** a0, (-1) ** a1)
    if direct != parity_signs(p, q):
        raise ConfigError(f"sign parity mismatch for p={p}, q={q}: {direct} vs {parity_signs(p, q)}")
    return PHConfig(int(p), int(q), DIM, r, direct[0], direct[1], materials or Materials())


@dataclass(frozen=True)
class DofPartition:
    """Split of the DOFs of one form degree into interior, Gamma_1 and Gamma_2 sets.

    The Gamma set named by ``essential`` holds every simplex of the closure of
    that boundary part, so simplices on the interface Gamma_1 /\\ Gamma_2 go to
    the side carrying the essential condition.
    """

    degree: int
    size: int
    interior: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    essential_gamma: int

    @property
    def essential(self) -> np.ndarray:
        return self.gamma1 if self.essential_gamma == 1 else self.gamma2

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.essential] = False
        return np.flatnonzero(mask)


def partition_dofs(complex: SimplicialComplex, k: int, essential_gamma: int) -> DofPartition:
    if essential_gamma not in (1, 2):
        raise ConfigError("essential_gamma must be 1 or 2")
    if not complex.is_classified:
        raise ConfigError("boundary must be classified before partitioning DOFs")
    boundary = complex.boundary_simplices[k]
    essential = complex.closure(k, essential_gamma)
    other = np.setdiff1d(boundary, essential)
    interior = np.setdiff1d(np.arange(complex.count(k)), boundary)
    gamma1, gamma2 = (essential, other) if essential_gamma == 1 else (other, essential)
    return DofPartition(k, complex.count(k), interior, gamma1, gamma2, essential_gamma)


@dataclass
class DiscreteSystem:
    """One mixed system in the generic form described in the module docstring."""

    role: str
    upper_degree: int
    lower_degree: int
    mass_upper: sp.csr_matrix
    mass_lower: sp.csr_matrix
    derivative: sp.csr_matrix
    sign: int
    partition: DofPartition
    control: sp.csr_matrix
    essential_sign: int
    essential_dofs: np.ndarray
    natural_dofs: np.ndarray
    essential_input: str
    natural_input: str

    @property
    def sizes(self):
        return self.mass_upper.shape[0], self.mass_lower.shape[0]

    def hamiltonian(self, state) -> float:
        return 0.5 * (state.upper @ (self.mass_upper @ state.upper)
                      + state.lower @ (self.mass_lower @ state.lower))

    def essential_values(self, inputs) -> np.ndarray:
        """Assigned values of the essential DOFs of ``lower`` for the given input signals."""
        return self.essential_sign * inputs[self.essential_input]

    def natural_values(self, inputs) -> np.ndarray:
        return inputs[self.natural_input]

    def collocated_output(self, state) -> np.ndarray:
        """Output y with y . u_natural equal to the natural-port power."""
        free = self.partition.free
        return self.control[free].T @ state.lower[free]

    def reaction_output(self, upper_mid, lower_rate) -> np.ndarray:
        """Reaction y~ with y~ . u_essential equal to the essential-port power."""
        ess = self.partition.essential
        raw = self.mass_lower[ess] @ lower_rate + self.sign * (self.derivative[:, ess].T @ upper_mid)
        return self.essential_sign * raw


def _columns(matrix: sp.csr_matrix, boundary_order: np.ndarray, simplices: np.ndarray):
    """Columns of a boundary-indexed matrix for the given global simplices."""
    return matrix[:, np.searchsorted(boundary_order, simplices)].tocsr()


def input_dofs(complex: SimplicialComplex, config: PHConfig):
    """Global simplex indices carrying the signals u1 and u2."""
    return {"u1": complex.closure(config.q - 1, 1), "u2": complex.closure(config.p - 1, 2)}


def assemble_primal(config: PHConfig, operators: OperatorSet,
                    partition: DofPartition | None = None) -> DiscreteSystem:
    complex = operators.complex
    p, q = config.p, config.q
    partition = partition or partition_dofs(complex, p - 1, 2)
    if partition.degree != p - 1 or partition.essential_gamma != 2:
        raise ConfigError("primal partition must be for degree p-1 with Gamma_2 essential")
    dofs = input_dofs(complex, config)
    psi = operators.boundary_wedge_on(q - 1, 1)
    control = operators.trace[p - 1].T @ psi
    control = _columns(control, complex.boundary_simplices[q - 1], dofs["u1"])
    return DiscreteSystem(
        role="primal",
        upper_degree=p,
        lower_degree=p - 1,
        mass_upper=operators.weighted_mass(p, config.materials.primal_upper),
        mass_lower=operators.weighted_mass(p - 1, config.materials.primal_lower),
        derivative=operators.derivative[p - 1],
        sign=config.primal_sign,
        partition=partition,
        control=(config.primal_sign * control).tocsr(),
        essential_sign=config.primal_sign,
        essential_dofs=dofs["u2"],
        natural_dofs=dofs["u1"],
        essential_input="u2",
        natural_input="u1",
    )


def assemble_dual(config: PHConfig, operators: OperatorSet,
                  partition: DofPartition | None = None) -> DiscreteSystem:
    complex = operators.complex
    p, q = config.p, config.q
    partition = partition or partition_dofs(complex, q - 1, 1)
    if partition.degree != q - 1 or partition.essential_gamma != 1:
        raise ConfigError("dual partition must be for degree q-1 with Gamma_1 essential")
    dofs = input_dofs(complex, config)
    psi = operators.boundary_wedge_on(p - 1, 2)
    control = operators.trace[q - 1].T @ psi
    control = _columns(control, complex.boundary_simplices[p - 1], dofs["u2"])
    return DiscreteSystem(
        role="dual",
        upper_degree=q,
        lower_degree=q - 1,
        mass_upper=operators.weighted_mass(q, config.materials.dual_upper),
        mass_lower=operators.weighted_mass(q - 1, config.materials.dual_lower),
        derivative=operators.derivative[q - 1],
        sign=-1,
        partition=partition,
        control=(config.dual_control_sign * control).tocsr(),
        essential_sign=1,
        essential_dofs=dofs["u1"],
        natural_dofs=dofs["u2"],
        essential_input="u1",
        natural_input="u2",
    )

