"""Command-line frontend: ``dualfield run | verify | converge``.

Exit codes: 0 pass, 1 verification failure, 2 configuration error,
3 numerical failure. Logs go to stderr; summaries go to stdout and data
to files under ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import diagnostics, feec
from .identities import run_identity_checks
from .mesh import write_mesh_dump
from .problems import PROBLEMS, get_problem, problem_mesh
from .timeint import NumericalError, TimeGrid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("dualfield")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CONVERGENCE_FLOOR = 0.8
CONVERGENCE_MIN_FIELDS = 3


class UsageError(ValueError):
    """Invalid command-line or TOML configuration."""


@dataclass(frozen=True)
class RunConfig:
    problem: str = "wave"
    n: int = 4
    meshes: tuple = (2, 4, 8)
    t_end: float = 5.0
    steps: int = 200
    out: str = "out"
    stride: int = 1
    dump_matrices: bool = False
    dump_vtk: bool = False
    verify_identities: bool = False
    workers: int | None = None
    corrupt_psi: bool = False

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise UsageError(f"problem must be one of {sorted(PROBLEMS)}, got {self.problem!r}")
        for name in ("n", "steps", "stride"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise UsageError(f"{name} must be a positive integer, got {value!r}")
        if not all(isinstance(m, int) and m >= 1 for m in self.meshes):
            raise UsageError(f"meshes must be positive integers, got {self.meshes!r}")
        if not (isinstance(self.t_end, (int, float)) and np.isfinite(self.t_end) and self.t_end > 0):
            raise UsageError(f"t-end must be a positive number, got {self.t_end!r}")
        if self.workers is not None and self.workers < 1:
            raise UsageError(f"workers must be positive, got {self.workers}")
        return self


# Defaults per command: a conservation run, an identity check on the
# 2-cells-per-side mesh, and a convergence study on T = 1 with 100 steps.
COMMAND_DEFAULTS = {
    "run": {},
    "verify": {"n": 2},
    "converge": {"t_end": 1.0, "steps": 100},
}


def _parse_meshes(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualfield", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with default settings (flags win)")
    common.add_argument("--problem", choices=sorted(PROBLEMS))
    common.add_argument("--n", type=int, help="cells per side")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dump-matrices", action="store_true", default=None,
                        help="write operators as Matrix Market files and a mesh dump")

    timing = argparse.ArgumentParser(add_help=False)
    timing.add_argument("--t-end", type=float, dest="t_end")
    timing.add_argument("--steps", type=int)

    run = sub.add_parser("run", parents=[common, timing], help="conservation run with step CSV")
    run.add_argument("--stride", type=int, help="write every stride-th step")
    run.add_argument("--dump-vtk", action="store_true", default=None)
    run.add_argument("--verify-identities", action="store_true", default=None,
                     help="check operator identities before stepping")

    verify = sub.add_parser("verify", parents=[common], help="check matrix identities and signs")
    verify.add_argument("--corrupt-psi", action="store_true", default=None, help=argparse.SUPPRESS)

    converge = sub.add_parser("converge", parents=[common, timing], help="mesh convergence study")
    converge.add_argument("--meshes", type=_parse_meshes, help="comma-separated cells per side")
    converge.add_argument("--workers", type=int, help="parallel mesh runs (capped by DUALFIELD_THREADS)")
    return parser


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid TOML in {path}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    settings = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in known:
            raise UsageError(f"unknown config key {key!r}")
        settings[name] = tuple(value) if name == "meshes" else value
    return settings


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then command defaults, then the TOML file, then explicit flags."""
    settings = dict(COMMAND_DEFAULTS[args.command])
    if getattr(args, "config", None):
        settings.update(load_toml(args.config))
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            settings[f.name] = value
    try:
        config = RunConfig(**settings)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    return config.validate()


def _out_dir(config: RunConfig) -> Path:
    path = Path(config.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump_matrices(config: RunConfig, ops, n: int) -> None:
    directory = _out_dir(config) / f"matrices_{config.problem}_n{n}"
    written = feec.write_matrix_market(ops, directory)
    write_mesh_dump(ops.complex, directory / "mesh.txt")
    log.info("wrote %d matrices to %s", len(written), directory)


def _report(checks) -> bool:
    for check in checks:
        print(check.line())
    return all(c.passed for c in checks)


def cmd_verify(config: RunConfig) -> int:
    start = time.perf_counter()
    problem = get_problem(config.problem)
    ops = feec.build_operators(problem_mesh(problem, config.n))
    if config.dump_matrices:
        _dump_matrices(config, ops, config.n)
    psi_sign = -1.0 if config.corrupt_psi else 1.0
    ok = _report(run_identity_checks(ops, psi_sign))
    log.info("verify n=%d finished in %.3f s", config.n, time.perf_counter() - start)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_run(config: RunConfig) -> int:
    start = time.perf_counter()
    problem = get_problem(config.problem)
    grid = TimeGrid(config.t_end, config.steps)
    sim = diagnostics.Simulation.build(problem, config.n)
    out = _out_dir(config)
    tag = f"{config.problem}_n{config.n}"
    if config.dump_matrices:
        _dump_matrices(config, sim.ops, config.n)
    if config.verify_identities and not _report(run_identity_checks(sim.ops)):
        return EXIT_VERIFY

    def write_snapshot(n, primal, dual):
        if n % config.stride == 0 or n == grid.n_steps:
            diagnostics.write_vtk(out / f"{tag}_{n:05d}.vtk", sim.ops,
                                  diagnostics.state_fields(problem, primal, dual), title=tag)

    traj = diagnostics.simulate(sim, grid, state_callback=write_snapshot if config.dump_vtk else None)
    csv_path = out / f"{tag}_steps.csv"
    diagnostics.write_step_csv(csv_path, problem.name, traj.steps, config.stride)

    ok = True
    for name in ("res_rate_primal", "res_rate_dual", "res_power_mixed"):
        worst = traj.max_relative(name)
        passed = worst <= diagnostics.RESIDUAL_TOL
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  max {name:<18s} {worst:.3e}  tol={diagnostics.RESIDUAL_TOL:.0e}")
    for name, drift in traj.divergence_drift().items():
        passed = drift <= diagnostics.DIVERGENCE_DRIFT_TOL
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  drift {name:<16s} {drift:.3e}  tol={diagnostics.DIVERGENCE_DRIFT_TOL:.0e}")
    energies = np.array([[s.H_primal, s.H_dual, s.H_T_half] for s in traj.steps])
    if not np.all(np.isfinite(energies)):
        raise NumericalError("non-finite energy in trajectory")
    between = np.mean((energies[:, 2] >= energies[:, :2].min(axis=1))
                      & (energies[:, 2] <= energies[:, :2].max(axis=1)))
    log.info("H_T/2 between the two mixed energies at %.0f%% of steps", 100 * between)
    log.info("max boundary-flow error %.3e", traj.max_relative("err_bd_flow"))
    log.info("wrote %s (%.2f s)", csv_path, time.perf_counter() - start)
    return EXIT_OK if ok else EXIT_VERIFY


def convergence_verdict(table: diagnostics.ConvergenceTable) -> tuple:
    """(passed, message): monotone errors for every field and enough fields above the order floor."""
    monotone = table.monotone()
    orders = table.finest_orders()
    above = sum(1 for o in orders.values() if o >= CONVERGENCE_FLOOR)
    passed = all(monotone.values()) and above >= min(CONVERGENCE_MIN_FIELDS, len(orders))
    message = f"monotone={monotone} finest orders=" + ", ".join(f"{k}:{v:.3f}" for k, v in orders.items())
    return passed, message


def cmd_converge(config: RunConfig) -> int:
    meshes = sorted(set(config.meshes))
    if len(meshes) < 2:
        raise UsageError("a convergence study needs at least two distinct mesh sizes")
    problem = get_problem(config.problem)
    table = diagnostics.run_convergence_study(problem, meshes, config.t_end, config.steps,
                                              config.workers)
    path = _out_dir(config) / f"{config.problem}_convergence.csv"
    table.write_csv(path)
    if config.dump_matrices:
        for n in meshes:
            _dump_matrices(config, feec.build_operators(problem_mesh(problem, n)), n)
    passed, message = convergence_verdict(table)
    print(f"{'PASS' if passed else 'FAIL'}  {message}")
    log.info("wrote %s", path)
    return EXIT_OK if passed else EXIT_VERIFY


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "converge": cmd_converge}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except ValueError as exc:
        # UsageError, ConfigError, MeshError and lower-layer argument checks
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
