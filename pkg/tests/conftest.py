import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dualfield import diagnostics, feec  # noqa: E402
from dualfield.mesh import build_box_mesh  # noqa: E402
from dualfield.problems import get_problem, problem_mesh  # noqa: E402
from dualfield.timeint import TimeGrid  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def report():
    """Record one pass/fail line per acceptance check; shown in the terminal summary."""

    def record(label: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture(scope="session")
def cube():
    return build_box_mesh((1.0, 1.0, 1.0), (1, 1, 1))


@pytest.fixture(scope="session", params=["wave", "maxwell"])
def problem(request):
    return get_problem(request.param)


@pytest.fixture(scope="session")
def wave():
    return get_problem("wave")


@pytest.fixture(scope="session")
def maxwell():
    return get_problem("maxwell")


@pytest.fixture(scope="session")
def box2_ops():
    return feec.build_operators(problem_mesh(get_problem("wave"), 2))


@pytest.fixture(scope="session")
def simulations():
    """Simulation objects on the 4-cells-per-side benchmark mesh, built once."""
    cache = {}

    def get(name, n=4):
        if (name, n) not in cache:
            cache[name, n] = diagnostics.Simulation.build(get_problem(name), n)
        return cache[name, n]

    return get


@pytest.fixture(scope="session")
def benchmark_runs(simulations):
    """Forced and unforced trajectories on the T=5, 200-step benchmark grid."""
    cache = {}

    def get(name, zero_inputs=False):
        if (name, zero_inputs) not in cache:
            cache[name, zero_inputs] = diagnostics.simulate(simulations(name), TimeGrid(5.0, 200),
                                                            zero_inputs=zero_inputs)
        return cache[name, zero_inputs]

    return get
