"""Dual-field port-Hamiltonian discretization with lowest-order Whitney forms.

Typical use::

    from dualfield import Simulation, TimeGrid, get_problem, simulate

    sim = Simulation.build(get_problem("wave"), 4)
    trajectory = simulate(sim, TimeGrid(5.0, 200))
"""

from .diagnostics import ConvergenceTable, Simulation, run_convergence_study, simulate
from .feec import OperatorSet, build_operators
from .identities import run_identity_checks
from .mesh import SimplicialComplex, build_box_mesh, classify_boundary, incidence
from .phsys import Materials, assemble_dual, assemble_primal, make_config
from .problems import get_problem, maxwell_problem, wave_problem
from .timeint import State, TimeGrid, build_step_operator, step

__version__ = "0.1.0"

__all__ = [
    "ConvergenceTable",
    "Materials",
    "OperatorSet",
    "SimplicialComplex",
    "Simulation",
    "State",
    "TimeGrid",
    "assemble_dual",
    "assemble_primal",
    "build_box_mesh",
    "build_operators",
    "build_step_operator",
    "classify_boundary",
    "get_problem",
    "incidence",
    "make_config",
    "maxwell_problem",
    "run_convergence_study",
    "run_identity_checks",
    "simulate",
    "step",
    "wave_problem",
]
