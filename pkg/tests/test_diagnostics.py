import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualfield import diagnostics as dg
from dualfield import feec
from dualfield.problems import get_problem
from dualfield.timeint import State, TimeGrid
from oracles import wave_energy_at_zero

# Exact H(0) of the wave benchmark, frozen from the sympy oracle.
WAVE_H0 = 0.12821483814933077


def test_frozen_wave_energy_matches_oracle():
    assert wave_energy_at_zero()[1] == pytest.approx(WAVE_H0, rel=1e-15)


def test_zero_state_has_zero_energies(simulations):
    sim = simulations("wave")
    p = State(np.zeros(sim.primal_system.sizes[0]), np.zeros(sim.primal_system.sizes[1]))
    d = State(np.zeros(sim.dual_system.sizes[0]), np.zeros(sim.dual_system.sizes[1]))
    assert dg.energies(sim.primal_system, sim.dual_system, p, d, sim.ops, sim.problem.config) == (0.0, 0.0, 0.0)


def test_initial_energies_close_to_exact(simulations):
    sim = simulations("wave")
    primal, dual = sim.data.initial_states(0.0)
    for value in dg.energies(sim.primal_system, sim.dual_system, primal, dual, sim.ops, sim.problem.config):
        assert abs(value - WAVE_H0) <= 0.05 * WAVE_H0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_dual_field_pairing_is_symmetric_under_swap(seed, simulations):
    # x^T L^k y = y^T L^{n-k} x: swapping which system supplies which factor leaves H_T unchanged.
    ops = simulations("maxwell").ops
    rng = np.random.default_rng(seed)
    for k in range(4):
        x, y = rng.normal(size=ops.complex.count(3 - k)), rng.normal(size=ops.complex.count(k))
        a = x @ (ops.duality[k] @ y)
        b = y @ (ops.duality[3 - k] @ x)
        assert a == pytest.approx(b, rel=1e-13, abs=1e-15)


def test_trajectory_invariants(problem, benchmark_runs):
    traj = benchmark_runs(problem.name)
    for s in traj.steps:
        assert min(s.H_primal, s.H_dual) >= 0.0
        assert all(math.isfinite(v) for v in s.row())
    for name in ("res_rate_primal", "res_rate_dual", "res_power_mixed"):
        assert traj.max_relative(name) <= dg.RESIDUAL_TOL


def test_unforced_residuals_are_energy_changes(problem, benchmark_runs):
    traj = benchmark_runs(problem.name, zero_inputs=True)
    dt = traj.grid.dt
    h0 = max(traj.steps[0].H_primal, traj.steps[0].H_dual)
    for bp, bd, bm in traj.balances:
        assert bp.rhs == 0.0 and bd.rhs == 0.0
        assert abs(bp.lhs) <= 1e-12 * h0 / dt and abs(bd.lhs) <= 1e-12 * h0 / dt
        assert abs(bm.lhs - bm.rhs) <= 1e-12 * h0 / dt


def test_energy_telescopes_with_accumulated_power(problem, benchmark_runs):
    traj = benchmark_runs(problem.name)
    n = traj.grid.n_steps
    for idx, attr in ((0, "H_primal"), (1, "H_dual")):
        h = np.array([getattr(s, attr) for s in traj.steps])
        accumulated = sum(b[idx].rhs for b in traj.balances) * traj.grid.dt
        assert abs((h[-1] - h[0]) - accumulated) <= n * 1e-14 * h[0]


def test_maxwell_divergence_is_conserved(benchmark_runs):
    traj = benchmark_runs("maxwell")
    drift = traj.divergence_drift()
    assert set(drift) == {"div_e2", "div_h2"}
    assert max(drift.values()) <= dg.DIVERGENCE_DRIFT_TOL
    assert benchmark_runs("wave").divergence_drift() == {}


def test_boundary_flow_error_shrinks_with_refinement(simulations):
    errors = []
    for n in (2, 4):
        traj = dg.simulate(simulations("wave", n), TimeGrid(1.0, 40))
        errors.append(traj.max_relative("err_bd_flow"))
    assert errors[1] < 0.5 * errors[0]


def test_error_of_exact_discrete_field_vanishes(simulations):
    sim = simulations("wave", 2)
    primal, dual = sim.data.initial_states(0.0)
    assert dg.field_difference(sim.ops, 3, primal.upper, 3, primal.upper) == 0.0
    affine = lambda p: 1.0 + p @ np.array([0.5, -1.0, 2.0])
    coeffs = feec.interpolate(sim.ops.complex, 0, affine)
    assert feec.l2_norm(sim.ops.complex, 0, coeffs, affine) <= 1e-12


def test_l2_errors_report_fields_and_differences(simulations):
    sim = simulations("maxwell", 2)
    primal, dual = sim.data.initial_states(0.0)
    errors = dg.l2_errors(sim.problem, sim.ops, primal, dual, 0.0)
    assert set(errors) == {"e2", "h1", "e1", "h2", "e2-e1", "h1-h2"}
    assert errors["h1"] == 0.0 and errors["h2"] == 0.0
    assert 0.0 < errors["e2"] < 0.1


def test_step_csv_schema(tmp_path, benchmark_runs):
    for name, extra in (("wave", []), ("maxwell", ["div_e2", "div_h2"])):
        path = tmp_path / f"{name}.csv"
        dg.write_step_csv(path, name, benchmark_runs(name).steps, stride=30)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["t", "H_primal", "H_dual", "H_T_half", "res_rate_primal", "res_rate_dual",
                           "res_power_mixed", "err_bd_flow"] + extra
        times = [float(r[0]) for r in rows[1:]]
        assert times[0] == 0.0 and times[-1] == pytest.approx(5.0) and len(times) == 8


def test_convergence_table_orders_and_csv(tmp_path):
    table = dg.ConvergenceTable(["a", "b"])
    table.add(0.4, 2, {"a": 0.16, "b": 1.0})
    table.add(0.2, 4, {"a": 0.04, "b": 0.5})
    table.add(0.1, 8, {"a": 0.01, "b": 0.6})
    assert table.orders() == [pytest.approx([2.0, 1.0]), pytest.approx([2.0, math.log2(0.5 / 0.6)])]
    assert table.monotone() == {"a": True, "b": False}
    path = tmp_path / "conv.csv"
    table.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["h", "n_el", "err_a", "err_b", "order_a", "order_b"]
    assert rows[1][4:] == ["", ""] and float(rows[2][4]) == pytest.approx(2.0)


def test_single_mesh_table_has_no_order_columns(tmp_path):
    table = dg.ConvergenceTable(["a"])
    table.add(0.5, 1, {"a": 0.3})
    assert table.orders() == [] and table.finest_orders() == {}
    table.write_csv(tmp_path / "one.csv")
    assert open(tmp_path / "one.csv").readline().strip() == "h,n_el,err_a"


def test_wave_errors_decrease_from_two_to_four_cells():
    table = dg.run_convergence_study(get_problem("wave"), [2, 4], workers=1)
    assert all(table.monotone().values())
    assert table.n_el == [2, 4]


def test_mesh_size_and_worker_cap(monkeypatch):
    assert dg.mesh_size(get_problem("wave"), 2) == pytest.approx(math.sqrt(0.25 + 2 * 0.0625))
    monkeypatch.setenv("DUALFIELD_THREADS", "1")
    assert dg.worker_count(8) == 1
    monkeypatch.delenv("DUALFIELD_THREADS")
    assert dg.worker_count(1) == 1


def test_vtk_dump(tmp_path, simulations):
    sim = simulations("maxwell", 2)
    primal, dual = sim.data.initial_states(0.0)
    path = tmp_path / "state.vtk"
    dg.write_vtk(path, sim.ops, dg.state_fields(sim.problem, primal, dual))
    text = path.read_text()
    assert text.startswith("# vtk DataFile Version 3.0")
    assert f"CELLS {sim.ops.complex.count(3)}" in text
    assert "VECTORS e2 double" in text and "VECTORS h1 double" in text
