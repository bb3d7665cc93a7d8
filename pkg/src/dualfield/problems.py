"""Benchmark problems with exact eigenmode solutions.

Both problems live on the box [0,1] x [0,1/2] x [0,1/2]. Gamma_1 is the union
of the faces x=0, y=0, z=0 and Gamma_2 the union of x=1, y=1/2, z=1/2.
Every exact field separates as (spatial proxy) * (time factor), which lets
DOF interpolants be computed once and rescaled in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import feec
from .mesh import SimplicialComplex, box_gamma_predicates, build_box_mesh, classify_boundary
from .phsys import Materials, PHConfig, input_dofs, make_config
from .timeint import State

BOX = (1.0, 0.5, 0.5)
ROLES = ("primal_upper", "primal_lower", "dual_lower", "dual_upper")


@dataclass(frozen=True)
class ExactField:
    """Proxy of an exact form: ``space(x) * time(t)``.

    ``derivatives`` maps 'grad', 'curl' or 'div' to the analytic derivative
    of the spatial profile.
    """

    degree: int
    label: str
    space: Callable[[np.ndarray], np.ndarray]
    time: Callable[[float], float]
    time_rate: Callable[[float], float]
    derivatives: dict = field(default_factory=dict)

    def __call__(self, points, t):
        return self.space(points) * self.time(t)

    def at(self, t):
        factor = self.time(t)
        return lambda points: self.space(points) * factor


@dataclass(frozen=True)
class ProblemDefinition:
    name: str
    config: PHConfig
    fields: dict
    pde_residual: Callable[[np.ndarray, float], float]
    lengths: tuple = BOX

    def field_labels(self):
        return [self.fields[role].label for role in ROLES]


def _xyz(points):
    points = np.atleast_2d(points)
    return points[:, 0], points[:, 1], points[:, 2]


# ---------------------------------------------------------------- wave

SQRT3 = np.sqrt(3.0)


def _wave_g(points):
    x, y, z = _xyz(points)
    return np.cos(x) * np.sin(y) * np.sin(z)


def _wave_grad_g(points):
    x, y, z = _xyz(points)
    return np.column_stack([-np.sin(x) * np.sin(y) * np.sin(z),
                            np.cos(x) * np.cos(y) * np.sin(z),
                            np.cos(x) * np.sin(y) * np.cos(z)])


def _wave_minus_grad_g(points):
    return -_wave_grad_g(points)


def _wave_div_minus_grad_g(points):
    # -laplacian of g, with laplacian g = -3 g
    return 3.0 * _wave_g(points)


def _wave_f(t):
    return 2.0 * np.sin(SQRT3 * t) + 3.0 * np.cos(SQRT3 * t)


def _wave_df(t):
    return SQRT3 * (2.0 * np.cos(SQRT3 * t) - 3.0 * np.sin(SQRT3 * t))


def _wave_d2f(t):
    return -3.0 * (2.0 * np.sin(SQRT3 * t) + 3.0 * np.cos(SQRT3 * t))


def wave_problem() -> ProblemDefinition:
    """Acoustic wave, p=3, q=1: velocity v and stress sigma = -grad g f."""
    config = make_config(3, 1, Materials())
    velocity = dict(space=_wave_g, time=_wave_df, time_rate=_wave_d2f,
                    derivatives={"grad": _wave_grad_g})
    stress = dict(space=_wave_minus_grad_g, time=_wave_f, time_rate=_wave_df,
                  derivatives={"div": _wave_div_minus_grad_g})
    fields = {
        "primal_upper": ExactField(3, "v3", **velocity),
        "primal_lower": ExactField(2, "sigma2", **stress),
        "dual_lower": ExactField(0, "v0", **velocity),
        "dual_upper": ExactField(1, "sigma1", **stress),
    }

    def residual(points, t):
        v, s = fields["primal_upper"], fields["primal_lower"]
        dv = v.space(points) * v.time_rate(t)
        ds = s.space(points) * s.time_rate(t)
        div_s = s.derivatives["div"](points) * s.time(t)
        grad_v = v.derivatives["grad"](points) * v.time(t)
        # dv/dt = -div sigma and d sigma/dt = -grad v (shared by both systems)
        return max(np.abs(dv + div_s).max(), np.abs(ds + grad_v).max())

    return ProblemDefinition("wave", config, fields, residual)


# ---------------------------------------------------------------- Maxwell

MU = 1.5
EPS = 2.0
LIGHT_SPEED = 1.0 / np.sqrt(MU * EPS)
OMEGA = SQRT3 * LIGHT_SPEED


def _maxwell_g(points):
    x, y, z = _xyz(points)
    return np.column_stack([-np.cos(x) * np.sin(y) * np.sin(z),
                            np.zeros_like(x),
                            np.sin(x) * np.sin(y) * np.cos(z)])


def _maxwell_curl_g(points):
    x, y, z = _xyz(points)
    return np.column_stack([np.sin(x) * np.cos(y) * np.cos(z),
                            -2.0 * np.cos(x) * np.sin(y) * np.cos(z),
                            np.cos(x) * np.cos(y) * np.sin(z)])


def _maxwell_curl_curl_g(points):
    x, y, z = _xyz(points)
    return np.column_stack([-3.0 * np.cos(x) * np.sin(y) * np.sin(z),
                            np.zeros_like(x),
                            3.0 * np.sin(x) * np.sin(y) * np.cos(z)])


def _maxwell_electric(points):
    return MU * _maxwell_g(points)


def _maxwell_curl_electric(points):
    return MU * _maxwell_curl_g(points)


def _maxwell_magnetic(points):
    return -_maxwell_curl_g(points)


def _maxwell_curl_magnetic(points):
    return -_maxwell_curl_curl_g(points)


def _maxwell_f(t):
    return np.sin(OMEGA * t) / OMEGA


def _maxwell_df(t):
    return np.cos(OMEGA * t)


def _maxwell_d2f(t):
    return -OMEGA * np.sin(OMEGA * t)


def maxwell_problem() -> ProblemDefinition:
    """Maxwell, p=q=2: electric field e = mu g f', magnetic field h = -curl g f."""
    config = make_config(2, 2, Materials(primal_upper=EPS, primal_lower=MU,
                                         dual_lower=EPS, dual_upper=MU))
    electric = dict(space=_maxwell_electric, time=_maxwell_df, time_rate=_maxwell_d2f,
                    derivatives={"curl": _maxwell_curl_electric})
    magnetic = dict(space=_maxwell_magnetic, time=_maxwell_f, time_rate=_maxwell_df,
                    derivatives={"curl": _maxwell_curl_magnetic})
    fields = {
        "primal_upper": ExactField(2, "e2", **electric),
        "primal_lower": ExactField(1, "h1", **magnetic),
        "dual_lower": ExactField(1, "e1", **electric),
        "dual_upper": ExactField(2, "h2", **magnetic),
    }

    def residual(points, t):
        e, h = fields["primal_upper"], fields["primal_lower"]
        de = e.space(points) * e.time_rate(t)
        dh = h.space(points) * h.time_rate(t)
        curl_h = h.derivatives["curl"](points) * h.time(t)
        curl_e = e.derivatives["curl"](points) * e.time(t)
        # eps de/dt = curl h and mu dh/dt = -curl e
        return max(np.abs(EPS * de - curl_h).max(), np.abs(MU * dh + curl_e).max())

    return ProblemDefinition("maxwell", config, fields, residual)


PROBLEMS = {"wave": wave_problem, "maxwell": maxwell_problem}


def get_problem(name: str) -> ProblemDefinition:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def problem_mesh(problem: ProblemDefinition, n: int) -> SimplicialComplex:
    """Box mesh with n cells per side and the problem's Gamma_1/Gamma_2 split."""
    complex = build_box_mesh(problem.lengths, (n, n, n))
    return classify_boundary(complex, *box_gamma_predicates(problem.lengths))


# ---------------------------------------------------------------- discrete data

@dataclass
class InterpolatedProblem:
    """Spatial DOF profiles of the four exact fields on one mesh.

    The interpolant of a field at time t is ``profiles[role] * time(t)``.
    """

    problem: ProblemDefinition
    complex: SimplicialComplex
    profiles: dict
    signal_dofs: dict

    def field_dofs(self, role: str, t: float) -> np.ndarray:
        return self.profiles[role] * self.problem.fields[role].time(t)

    def inputs(self, t: float) -> dict:
        """Boundary signals u1 (closure of Gamma_1) and u2 (closure of Gamma_2) at time t.

        u1 restricts the (q-1)-form interpolant. u2 restricts (-1)^p times the
        (p-1)-form interpolant, so that the primal essential condition
        (-1)^p e2 = u2 holds on Gamma_2.
        """
        config = self.problem.config
        u1 = self.field_dofs("dual_lower", t)[self.signal_dofs["u1"]]
        u2 = config.primal_sign * self.field_dofs("primal_lower", t)[self.signal_dofs["u2"]]
        return {"u1": u1, "u2": u2}

    def zero_inputs(self, t: float) -> dict:
        return {key: np.zeros(idx.shape[0]) for key, idx in self.signal_dofs.items()}

    def initial_states(self, t: float = 0.0):
        """(primal, dual) states interpolating the exact solution at time t."""
        primal = State(self.field_dofs("primal_upper", t), self.field_dofs("primal_lower", t))
        dual = State(self.field_dofs("dual_upper", t), self.field_dofs("dual_lower", t))
        return primal, dual


def interpolate_problem(problem: ProblemDefinition, complex: SimplicialComplex,
                        degree: int = feec.DOF_DEGREE) -> InterpolatedProblem:
    geometry = feec.tet_geometry(complex)
    profiles = {role: feec.interpolate(complex, f.degree, f.space, degree, geometry)
                for role, f in problem.fields.items()}
    return InterpolatedProblem(problem, complex, profiles, input_dofs(complex, problem.config))


def initial_state(problem: ProblemDefinition, complex: SimplicialComplex,
                  degree: int = feec.DOF_DEGREE) -> dict:
    """Coefficient vectors of all four fields at t=0, keyed by role."""
    data = interpolate_problem(problem, complex, degree)
    return {role: data.field_dofs(role, 0.0) for role in ROLES}
