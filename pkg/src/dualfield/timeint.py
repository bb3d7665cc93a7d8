"""Implicit midpoint stepping of a :class:`~dualfield.phsys.DiscreteSystem`.

The one-stage Gauss-Legendre scheme evaluates the right-hand side at the
average of consecutive states and inputs. For the skew-symmetric
interconnection this makes the discrete energy balance hold exactly per step,
and the scheme is symmetric under (dt, t_n, t_{n+1}) -> (-dt, t_{n+1}, t_n).

Essential DOFs are eliminated: their values are assigned, and their columns
move to the right-hand side. The remaining unknowns (upper, lower_F) solve

    [ M_upper           -dt/2 s D_F ] [upper_{n+1} ]   [ M_upper           dt/2 s D_F ] [upper_n ]
    [ dt/2 s D_F^T       M_FF       ] [lower_F,n+1 ] = [ -dt/2 s D_F^T      M_FF       ] [lower_F,n]
                                                       + [ dt s D_E lower_E,mid ]   [ 0                      ]
                                                         [ dt K_F u_natural,mid ] - [ M_FE (lower_E,n+1 - lower_E,n) ]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .phsys import DiscreteSystem


class NumericalError(RuntimeError):
    """Factorization or solve failure."""


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    n_steps: int
    t_start: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end > self.t_start):
            raise ValueError(f"t_end must exceed t_start, got {self.t_end}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def instants(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.instants[:-1] + 0.5 * self.dt


@dataclass
class State:
    upper: np.ndarray
    lower: np.ndarray

    def copy(self) -> "State":
        return State(self.upper.copy(), self.lower.copy())

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.upper, self.lower])


@dataclass
class StepOperator:
    system: DiscreteSystem
    dt: float
    matrix: sp.csc_matrix
    propagator: sp.csr_matrix
    essential_increment: sp.csr_matrix
    essential_midpoint: sp.csr_matrix
    natural_midpoint: sp.csr_matrix
    factor: object

    def reciprocal_condition(self) -> float:
        """1-norm reciprocal condition estimate of the step matrix."""
        n = self.matrix.shape[0]
        inv = spla.LinearOperator((n, n), matvec=self.factor.solve,
                                  rmatvec=lambda x: self.factor.solve(x, trans="T"))
        norm_inv = spla.onenormest(inv)
        return 1.0 / (spla.norm(self.matrix, 1) * norm_inv)


def build_step_operator(system: DiscreteSystem, dt: float) -> StepOperator:
    """Assemble and factor the midpoint step matrix. Negative dt steps backwards."""
    if not np.isfinite(dt) or dt == 0.0:
        raise ValueError(f"time step must be finite and nonzero, got {dt}")
    free = system.partition.free
    ess = system.partition.essential
    n_up = system.mass_upper.shape[0]
    s = system.sign
    d_free = system.derivative[:, free]
    m_ff = system.mass_lower[free][:, free]
    half = 0.5 * dt * s
    matrix = sp.bmat([[system.mass_upper, -half * d_free],
                      [half * d_free.T, m_ff]], format="csc")
    propagator = sp.bmat([[system.mass_upper, half * d_free],
                          [-half * d_free.T, m_ff]], format="csr")
    n_free = free.shape[0]
    essential_increment = sp.vstack([sp.csr_matrix((n_up, ess.shape[0])),
                                     -system.mass_lower[free][:, ess]]).tocsr()
    essential_midpoint = sp.vstack([dt * s * system.derivative[:, ess],
                                    sp.csr_matrix((n_free, ess.shape[0]))]).tocsr()
    natural_midpoint = sp.vstack([sp.csr_matrix((n_up, system.control.shape[1])),
                                  dt * system.control[free]]).tocsr()
    try:
        factor = spla.splu(matrix)
    except RuntimeError as exc:
        raise NumericalError(f"step matrix factorization failed: {exc}") from exc
    return StepOperator(system, dt, matrix, propagator, essential_increment,
                        essential_midpoint, natural_midpoint, factor)


def step(operator: StepOperator, state: State, inputs_now: dict, inputs_next: dict) -> State:
    """Advance ``state`` by one midpoint step given the input signals at both ends."""
    system = operator.system
    free = system.partition.free
    ess = system.partition.essential
    n_up = system.mass_upper.shape[0]
    ess_now = system.essential_values(inputs_now)
    ess_next = system.essential_values(inputs_next)
    nat_mid = 0.5 * (system.natural_values(inputs_now) + system.natural_values(inputs_next))

    reduced = np.concatenate([state.upper, state.lower[free]])
    rhs = (operator.propagator @ reduced
           + operator.essential_increment @ (ess_next - ess_now)
           + operator.essential_midpoint @ (0.5 * (ess_now + ess_next))
           + operator.natural_midpoint @ nat_mid)
    sol = operator.factor.solve(rhs)
    if not np.all(np.isfinite(sol)):
        raise NumericalError(f"non-finite solution in {system.role} step")
    lower = np.empty_like(state.lower)
    lower[free] = sol[n_up:]
    lower[ess] = ess_next
    return State(sol[:n_up].copy(), lower)


def integrate(operator: StepOperator, state: State, grid: TimeGrid, inputs, callback=None):
    """Run the full grid; ``inputs(t)`` returns the signal dict, ``callback(n, old, new)`` observes."""
    times = grid.instants
    current = state
    now = inputs(times[0])
    for n in range(grid.n_steps):
        nxt = inputs(times[n + 1])
        new = step(operator, current, now, nxt)
        if callback is not None:
            callback(n, current, new, now, nxt)
        current, now = new, nxt
    return current
