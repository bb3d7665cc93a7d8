"""Energies, power balances, errors and the simulation/convergence drivers."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import feec
from .feec import OperatorSet
from .phsys import DiscreteSystem, PHConfig, assemble_dual, assemble_primal
from .problems import ROLES, InterpolatedProblem, ProblemDefinition, interpolate_problem, problem_mesh
from .quadrature import tet_rule, triangle_rule
from .timeint import State, TimeGrid, build_step_operator, step

log = logging.getLogger(__name__)

STEP_COLUMNS = ["t", "H_primal", "H_dual", "H_T_half", "res_rate_primal", "res_rate_dual",
                "res_power_mixed", "err_bd_flow"]
DIVERGENCE_FREE = {"maxwell": (("div_e2", "primal_upper"), ("div_h2", "dual_upper"))}
RESIDUAL_TOL = 1e-10
DIVERGENCE_DRIFT_TOL = 1e-12


def relative_gap(a: float, b: float) -> float:
    """|a - b| / max(|a|, |b|), or 0 when both vanish."""
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


# ---------------------------------------------------------------- energies

def dual_field_energy(config: PHConfig, ops: OperatorSet, primal: State, dual: State) -> float:
    """H_T / 2: half the sum of the wedge pairings of matching primal and dual fields."""
    p, q = config.p, config.q
    m = config.materials
    first = dual.lower @ (ops.duality[p] @ primal.upper) * m.primal_upper
    second = primal.lower @ (ops.duality[q] @ dual.upper) * m.dual_upper
    return 0.5 * (first + second)


def energies(primal_system: DiscreteSystem, dual_system: DiscreteSystem, primal: State,
             dual: State, ops: OperatorSet, config: PHConfig):
    """(H_primal, H_dual, H_T/2)."""
    return (primal_system.hamiltonian(primal), dual_system.hamiltonian(dual),
            dual_field_energy(config, ops, primal, dual))


# ---------------------------------------------------------------- power balances

@dataclass(frozen=True)
class Balance:
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def relative(self) -> float:
        return relative_gap(self.lhs, self.rhs)


def energy_rate_balance(system: DiscreteSystem, old: State, new: State, inputs_old: dict,
                        inputs_new: dict, dt: float) -> Balance:
    """Energy difference quotient versus the midpoint port power of one system.

    The port power is u_E . y~ (essential port, reaction output) plus
    u_N . y (natural port, collocated output), all at the midpoint.
    """
    rate = (system.hamiltonian(new) - system.hamiltonian(old)) / dt
    upper_mid = 0.5 * (old.upper + new.upper)
    mid = State(upper_mid, 0.5 * (old.lower + new.lower))
    reaction = system.reaction_output(upper_mid, (new.lower - old.lower) / dt)
    ess_mid = 0.5 * (inputs_old[system.essential_input] + inputs_new[system.essential_input])
    nat_mid = 0.5 * (inputs_old[system.natural_input] + inputs_new[system.natural_input])
    power = ess_mid @ reaction + nat_mid @ system.collocated_output(mid)
    return Balance(rate, power)


def mixed_power_balance(config: PHConfig, ops: OperatorSet, primal_old: State, primal_new: State,
                        dual_old: State, dual_new: State, dt: float) -> Balance:
    """Mixed duality power from volume pairings versus the boundary pairing.

    lhs = (e1_mid . C L^p de1 + e2hat_mid . E L^q de2) / dt, with de the step increments;
    rhs = ((-1)^p T^{p-1} e2hat_mid) . Psi^{q-1} (T^{q-1} e1_mid).
    """
    p, q = config.p, config.q
    m = config.materials
    e1_mid = 0.5 * (dual_old.lower + dual_new.lower)
    e2hat_mid = 0.5 * (primal_old.lower + primal_new.lower)
    lhs = (m.primal_upper * (e1_mid @ (ops.duality[p] @ (primal_new.upper - primal_old.upper)))
           + m.dual_upper * (e2hat_mid @ (ops.duality[q] @ (dual_new.upper - dual_old.upper)))) / dt
    e_bd = config.primal_sign * (ops.trace[p - 1] @ e2hat_mid)
    f_bd = ops.trace[q - 1] @ e1_mid
    rhs = e_bd @ (ops.boundary_wedge[q - 1] @ f_bd)
    return Balance(lhs, rhs)


def divergence_norm(ops: OperatorSet, coefficients: np.ndarray) -> float:
    """Norm of d^2 x measured with M^3."""
    div = ops.incidence[2] @ coefficients
    return float(np.sqrt(max(div @ (ops.mass[3] @ div), 0.0)))


def exact_boundary_power(problem: ProblemDefinition, ops: OperatorSet, t: float,
                         degree: int = 8) -> float:
    """Integral over the boundary of (-1)^p tr e2hat ^ tr e1 for the exact fields."""
    config = problem.config
    complex = ops.complex
    geom = ops.facets
    bary, w = triangle_rule(degree)
    faces = complex.simplices[2][complex.boundary_facets]
    pts = np.einsum("qi,fia->fqa", bary, complex.vertices[faces]).reshape(-1, 3)
    a = np.asarray(problem.fields["primal_lower"](pts, t)).reshape(faces.shape[0], len(w), -1)
    b = np.asarray(problem.fields["dual_lower"](pts, t)).reshape(faces.shape[0], len(w), -1)
    n = geom.normal[:, None, :]
    k_a, k_b = config.p - 1, config.q - 1
    if (k_a, k_b) == (1, 1):
        dens = np.einsum("fqa,fqa->fq", np.cross(a, b), np.broadcast_to(n, a.shape))
    elif k_a == 2:
        dens = np.einsum("fqa,fqa->fq", a, np.broadcast_to(n, a.shape)) * b[..., 0]
    else:
        dens = a[..., 0] * np.einsum("fqa,fqa->fq", b, np.broadcast_to(n, b.shape))
    return float(config.primal_sign * np.sum(dens @ w * geom.area))


# ---------------------------------------------------------------- errors

def l2_errors(problem: ProblemDefinition, ops: OperatorSet, primal: State, dual: State,
              t: float, degree: int = feec.ERROR_DEGREE) -> dict:
    """L2 errors of the four discrete fields at time t, keyed by field label,
    plus the primal/dual differences of matching physical fields."""
    complex = ops.complex
    states = {"primal_upper": primal.upper, "primal_lower": primal.lower,
              "dual_lower": dual.lower, "dual_upper": dual.upper}
    out = {}
    for role in ROLES:
        f = problem.fields[role]
        out[f.label] = feec.l2_norm(complex, f.degree, states[role], f.at(t), degree, ops.geometry)
    for a, b in (("primal_upper", "dual_lower"), ("primal_lower", "dual_upper")):
        fa, fb = problem.fields[a], problem.fields[b]
        out[f"{fa.label}-{fb.label}"] = field_difference(ops, fa.degree, states[a], fb.degree,
                                                         states[b], degree)
    return out


def field_difference(ops: OperatorSet, k_a: int, a: np.ndarray, k_b: int, b: np.ndarray,
                     degree: int = feec.ERROR_DEGREE) -> float:
    """L2 distance between the proxies of two discrete forms at shared quadrature points."""
    bary, w = tet_rule(degree)
    va = feec.evaluate(ops.complex, k_a, a, bary, ops.geometry)
    vb = feec.evaluate(ops.complex, k_b, b, bary, ops.geometry)
    diff = va - vb
    return float(np.sqrt(np.sum(np.einsum("q,tqc,tqc->t", w, diff, diff) * ops.geometry.volumes)))


# ---------------------------------------------------------------- simulation

@dataclass
class StepDiagnostics:
    t: float
    H_primal: float
    H_dual: float
    H_T_half: float
    res_rate_primal: float
    res_rate_dual: float
    res_power_mixed: float
    err_bd_flow: float
    divergence: dict = field(default_factory=dict)

    def row(self) -> list:
        values = [self.t, self.H_primal, self.H_dual, self.H_T_half, self.res_rate_primal,
                  self.res_rate_dual, self.res_power_mixed, self.err_bd_flow]
        return values + list(self.divergence.values())


@dataclass
class Simulation:
    """Everything needed to step one problem on one mesh."""

    problem: ProblemDefinition
    ops: OperatorSet
    data: InterpolatedProblem
    primal_system: DiscreteSystem
    dual_system: DiscreteSystem

    @classmethod
    def build(cls, problem: ProblemDefinition, n: int, complex=None) -> "Simulation":
        complex = complex if complex is not None else problem_mesh(problem, n)
        ops = feec.build_operators(complex)
        data = interpolate_problem(problem, complex)
        return cls(problem, ops, data, assemble_primal(problem.config, ops),
                   assemble_dual(problem.config, ops))


@dataclass
class Trajectory:
    steps: list
    primal: State
    dual: State
    grid: TimeGrid
    balances: list = field(default_factory=list)

    def max_relative(self, name: str) -> float:
        return max((getattr(s, name) for s in self.steps[1:]), default=0.0)

    def divergence_drift(self) -> dict:
        if not self.steps[0].divergence:
            return {}
        first = self.steps[0].divergence
        return {key: max(abs(s.divergence[key] - first[key]) for s in self.steps) for key in first}


def consistent_state(system: DiscreteSystem, state: State, inputs: dict) -> State:
    """Copy of ``state`` with its essential DOFs set from the given input signals."""
    lower = state.lower.copy()
    lower[system.partition.essential] = system.essential_values(inputs)
    return State(state.upper.copy(), lower)


def simulate(sim: Simulation, grid: TimeGrid, zero_inputs: bool = False,
             keep_states: bool = False, state_callback=None) -> Trajectory:
    """Step the primal and dual systems on one grid and record per-step diagnostics."""
    problem, ops, data = sim.problem, sim.ops, sim.data
    config = problem.config
    inputs = data.zero_inputs if zero_inputs else data.inputs
    dt = grid.dt
    times = grid.instants
    now = inputs(times[0])
    primal, dual = data.initial_states(times[0])
    primal = consistent_state(sim.primal_system, primal, now)
    dual = consistent_state(sim.dual_system, dual, now)
    op_primal = build_step_operator(sim.primal_system, dt)
    op_dual = build_step_operator(sim.dual_system, dt)
    div_roles = DIVERGENCE_FREE.get(problem.name, ())
    states = {"primal_upper": lambda p, d: p.upper, "dual_upper": lambda p, d: d.upper}

    def record(t, p_state, d_state, res=(0.0, 0.0, 0.0), flow_err=0.0):
        hp, hd, ht = energies(sim.primal_system, sim.dual_system, p_state, d_state, ops, config)
        div = {name: divergence_norm(ops, states[role](p_state, d_state)) for name, role in div_roles}
        return StepDiagnostics(t, hp, hd, ht, res[0], res[1], res[2], flow_err, div)

    steps = [record(times[0], primal, dual)]
    balances = []
    if state_callback is not None:
        state_callback(0, primal, dual)
    for n in range(grid.n_steps):
        nxt = inputs(times[n + 1])
        p_new = step(op_primal, primal, now, nxt)
        d_new = step(op_dual, dual, now, nxt)
        bp = energy_rate_balance(sim.primal_system, primal, p_new, now, nxt, dt)
        bd = energy_rate_balance(sim.dual_system, dual, d_new, now, nxt, dt)
        bm = mixed_power_balance(config, ops, primal, p_new, dual, d_new, dt)
        flow = 0.0 if zero_inputs else abs(bm.rhs - exact_boundary_power(problem, ops, times[n] + 0.5 * dt))
        balances.append((bp, bd, bm))
        steps.append(record(times[n + 1], p_new, d_new, (bp.relative, bd.relative, bm.relative), flow))
        primal, dual, now = p_new, d_new, nxt
        if state_callback is not None:
            state_callback(n + 1, primal, dual)
    return Trajectory(steps, primal, dual, grid, balances)


def step_columns(problem_name: str) -> list:
    return STEP_COLUMNS + [name for name, _ in DIVERGENCE_FREE.get(problem_name, ())]


def write_step_csv(path, problem_name: str, steps, stride: int = 1) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(step_columns(problem_name))
        last = len(steps) - 1
        for i, s in enumerate(steps):
            if i % stride == 0 or i == last:
                writer.writerow([repr(float(v)) for v in s.row()])


# ---------------------------------------------------------------- convergence

@dataclass
class ConvergenceTable:
    labels: list
    h: list = field(default_factory=list)
    n_el: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def add(self, h: float, n_el: int, errors: dict) -> None:
        self.h.append(h)
        self.n_el.append(n_el)
        self.errors.append([errors[label] for label in self.labels])

    def orders(self) -> list:
        """Observed orders log(e_i / e_{i+1}) / log(h_i / h_{i+1}) per consecutive pair."""
        out = []
        for i in range(1, len(self.h)):
            ratio = math.log(self.h[i - 1] / self.h[i])
            out.append([math.log(a / b) / ratio if a > 0 and b > 0 else float("nan")
                        for a, b in zip(self.errors[i - 1], self.errors[i])])
        return out

    def monotone(self) -> dict:
        return {label: all(self.errors[i][j] < self.errors[i - 1][j] for i in range(1, len(self.h)))
                for j, label in enumerate(self.labels)}

    def finest_orders(self) -> dict:
        orders = self.orders()
        return dict(zip(self.labels, orders[-1])) if orders else {}

    def write_csv(self, path) -> None:
        header = ["h", "n_el"] + [f"err_{l}" for l in self.labels]
        with_orders = len(self.h) > 1
        if with_orders:
            header += [f"order_{l}" for l in self.labels]
        orders = self.orders()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(len(self.h)):
                row = [repr(float(self.h[i])), str(self.n_el[i])] + [repr(float(e)) for e in self.errors[i]]
                if with_orders:
                    row += [""] * len(self.labels) if i == 0 else [repr(float(o)) for o in orders[i - 1]]
                writer.writerow(row)


def mesh_size(problem: ProblemDefinition, n: int) -> float:
    """Longest tet edge: the diagonal of one grid cell."""
    return float(np.sqrt(sum((length / n) ** 2 for length in problem.lengths)))


def _converge_one(args):
    name, n, t_end, n_steps = args
    from .problems import get_problem

    problem = get_problem(name)
    sim = Simulation.build(problem, n)
    traj = simulate(sim, TimeGrid(t_end, n_steps))
    errors = l2_errors(problem, sim.ops, traj.primal, traj.dual, t_end)
    return n, errors


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("DUALFIELD_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        limit = max(1, int(cap))
    return max(1, min(limit, requested or limit))


def run_convergence_study(problem: ProblemDefinition, meshes, t_end: float = 1.0,
                          n_steps: int = 100, workers: int | None = None) -> ConvergenceTable:
    meshes = [int(n) for n in meshes]
    if not meshes:
        raise ValueError("at least one mesh size is required")
    labels = problem.field_labels()
    jobs = [(problem.name, n, t_end, n_steps) for n in meshes]
    n_workers = min(worker_count(workers), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_converge_one, jobs))
    else:
        results = [_converge_one(job) for job in jobs]
    table = ConvergenceTable(labels)
    for n, errors in sorted(results, key=lambda r: -mesh_size(problem, r[0])):
        log.info("n=%d errors=%s", n, errors)
        table.add(mesh_size(problem, n), n, errors)
    return table


# ---------------------------------------------------------------- VTK

def write_vtk(path, ops: OperatorSet, fields: dict, title: str = "dualfield") -> None:
    """Legacy ASCII VTK unstructured grid with cell-centred proxies.

    ``fields`` maps a name to (form degree, coefficient vector).
    """
    complex = ops.complex
    tets = complex.simplices[3]
    centre = np.full((1, 4), 0.25)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {complex.n_vertices} double\n")
        for x in complex.vertices:
            fh.write(f"{x[0]!r} {x[1]!r} {x[2]!r}\n")
        fh.write(f"CELLS {tets.shape[0]} {5 * tets.shape[0]}\n")
        for t in tets:
            fh.write("4 " + " ".join(str(int(v)) for v in t) + "\n")
        fh.write(f"CELL_TYPES {tets.shape[0]}\n")
        fh.write("10\n" * tets.shape[0])
        fh.write(f"CELL_DATA {tets.shape[0]}\n")
        for name, (k, coeffs) in fields.items():
            vals = feec.evaluate(complex, k, coeffs, centre, ops.geometry)[:, 0, :]
            if vals.shape[1] == 1:
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.writelines(f"{v!r}\n" for v in vals[:, 0])
            else:
                fh.write(f"VECTORS {name} double\n")
                fh.writelines(f"{v[0]!r} {v[1]!r} {v[2]!r}\n" for v in vals)


def state_fields(problem: ProblemDefinition, primal: State, dual: State) -> dict:
    f = problem.fields
    return {f["primal_upper"].label: (f["primal_upper"].degree, primal.upper),
            f["primal_lower"].label: (f["primal_lower"].degree, primal.lower),
            f["dual_lower"].label: (f["dual_lower"].degree, dual.lower),
            f["dual_upper"].label: (f["dual_upper"].degree, dual.upper)}
