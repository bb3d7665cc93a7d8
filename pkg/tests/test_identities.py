import pytest

from dualfield import feec
from dualfield.identities import ph_stokes_residual, run_identity_checks, stokes_residual
from dualfield.problems import get_problem, problem_mesh


@pytest.mark.parametrize("n", [1, 2, 4])
def test_all_identities_pass(n):
    ops = feec.build_operators(problem_mesh(get_problem("wave"), n))
    failed = [c.line() for c in run_identity_checks(ops) if not c.passed]
    assert not failed


def test_flipped_boundary_orientation_breaks_stokes_checks(box2_ops):
    failed = {c.name for c in run_identity_checks(box2_ops, psi_sign=-1.0) if not c.passed}
    assert failed == {"Stokes identity k=0", "Stokes identity k=1",
                      "port Stokes identity (p,q)=(3,1)", "port Stokes identity (p,q)=(2,2)"}


def test_stokes_residuals_are_at_round_off(box2_ops):
    for k in (0, 1):
        assert stokes_residual(box2_ops, k) <= 1e-14
    for p, q in ((3, 1), (2, 2)):
        assert ph_stokes_residual(box2_ops, p, q) <= 1e-14
