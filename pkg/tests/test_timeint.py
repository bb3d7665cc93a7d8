import numpy as np
import pytest
import scipy.sparse as sp

from dualfield.diagnostics import consistent_state
from dualfield.timeint import NumericalError, State, TimeGrid, build_step_operator, integrate, step


def test_time_grid():
    grid = TimeGrid(5.0, 200)
    assert grid.dt == 0.025
    assert grid.instants[0] == 0.0 and grid.instants[-1] == pytest.approx(5.0)
    assert grid.instants.size == 201
    np.testing.assert_allclose(grid.midpoints, grid.instants[:-1] + 0.0125)


@pytest.mark.parametrize("t_end, n", [(0.0, 10), (-1.0, 10), (float("nan"), 10), (1.0, 0), (1.0, 2.5)])
def test_time_grid_rejects_bad_arguments(t_end, n):
    with pytest.raises(ValueError):
        TimeGrid(t_end, n)


def test_zero_step_rejected(simulations):
    with pytest.raises(ValueError):
        build_step_operator(simulations("wave").primal_system, 0.0)


@pytest.mark.parametrize("role", ["primal_system", "dual_system"])
def test_factorization_is_well_conditioned(simulations, role):
    op = build_step_operator(getattr(simulations("wave"), role), 5.0 / 200)
    rcond = op.reciprocal_condition()
    assert 0.0 < rcond <= 1.0
    assert rcond > 1e-8


def test_small_dt_limit_is_block_mass(simulations):
    system = simulations("maxwell").primal_system
    op = build_step_operator(system, 1e-12)
    free = system.partition.free
    block = sp.block_diag([system.mass_upper, system.mass_lower[free][:, free]])
    assert abs(op.matrix - block).max() <= 1e-11 * abs(block).max()


def _inputs(sim):
    return sim.data.inputs


@pytest.mark.parametrize("name", ["wave", "maxwell"])
@pytest.mark.parametrize("role", ["primal_system", "dual_system"])
def test_forward_then_backward_returns_initial_state(simulations, name, role):
    sim = simulations(name)
    system = getattr(sim, role)
    grid = TimeGrid(0.5, 20)
    inputs = _inputs(sim)
    primal, dual = sim.data.initial_states(0.0)
    start = consistent_state(system, primal if role == "primal_system" else dual, inputs(0.0))
    forward = integrate(build_step_operator(system, grid.dt), start, grid, inputs)
    backward = build_step_operator(system, -grid.dt)
    state = forward
    times = grid.instants
    for n in range(grid.n_steps, 0, -1):
        state = step(backward, state, inputs(times[n]), inputs(times[n - 1]))
    err = np.linalg.norm(state.stacked() - start.stacked()) / np.linalg.norm(start.stacked())
    assert err <= 1e-10


@pytest.mark.parametrize("role", ["primal_system", "dual_system"])
def test_unforced_step_conserves_energy(simulations, role):
    sim = simulations("wave")
    system = getattr(sim, role)
    zero = sim.data.zero_inputs(0.0)
    rng = np.random.default_rng(7)
    state = State(rng.normal(size=system.sizes[0]), rng.normal(size=system.sizes[1]))
    state = consistent_state(system, state, zero)
    op = build_step_operator(system, 0.1)
    h0 = system.hamiltonian(state)
    for _ in range(10):
        state = step(op, state, zero, zero)
    assert abs(system.hamiltonian(state) - h0) <= 1e-12 * h0


def test_constant_essential_data_is_held(simulations):
    sim = simulations("wave")
    system = sim.dual_system
    fixed = sim.data.inputs(0.3)
    state = consistent_state(system, State(np.zeros(system.sizes[0]), np.zeros(system.sizes[1])), fixed)
    op = build_step_operator(system, 0.05)
    new = step(op, state, fixed, fixed)
    np.testing.assert_array_equal(new.lower[system.partition.essential],
                                  state.lower[system.partition.essential])


def test_integrate_calls_back_once_per_step(simulations):
    sim = simulations("wave")
    system = sim.primal_system
    grid = TimeGrid(0.1, 4)
    seen = []
    start = consistent_state(system, sim.data.initial_states(0.0)[0], sim.data.inputs(0.0))
    integrate(build_step_operator(system, grid.dt), start, grid, sim.data.inputs,
              callback=lambda n, old, new, now, nxt: seen.append(n))
    assert seen == [0, 1, 2, 3]


def test_non_finite_solution_raises(simulations):
    sim = simulations("wave")
    system = sim.primal_system
    op = build_step_operator(system, 0.1)
    bad = State(np.full(system.sizes[0], np.nan), np.zeros(system.sizes[1]))
    zero = sim.data.zero_inputs(0.0)
    with pytest.raises(NumericalError):
        step(op, bad, zero, zero)
