import numpy as np
import pytest
import scipy.sparse as sp

from dmpfem.basis import gll_nodes
from dmpfem.assembly import build_system
from dmpfem.errors import FormulationError, InvalidArgumentError
from dmpfem.problem import canonical_problem
from dmpfem.quadrature import gauss_rule
from dmpfem.solver import solve_spd


def test_identity():
    b = np.arange(1.0, 6.0)
    x, rep = solve_spd((sp.identity(5), b))
    np.testing.assert_array_equal(x, b)
    assert rep.method == "cholesky" and rep.relative_residual == 0.0


@pytest.mark.parametrize("method", ["cholesky", "cg"])
def test_two_by_two(method):
    x, rep = solve_spd((sp.csr_matrix([[2.0, -1.0], [-1.0, 2.0]]), np.array([1.0, 0.0])), method)
    np.testing.assert_allclose(x, [2 / 3, 1 / 3], atol=1e-12)
    assert rep.relative_residual <= 1e-10


def _system(kind="ls2"):
    prob = canonical_problem("lepotier")
    return build_system(prob.build_mesh(nx=4, ny=4, jitter=0.2), prob, gll_nodes(3), kind, gauss_rule(5))


@pytest.mark.parametrize("kind", ["galerkin", "ls1", "ls2"])
def test_cholesky_matches_cg(kind):
    s = _system(kind)
    x1, r1 = solve_spd(s, "cholesky")
    x2, r2 = solve_spd(s, "cg")
    assert r2.iterations > 0 and r1.iterations == 0
    assert np.max(np.abs(x1 - x2)) <= 1e-8 * max(1.0, np.abs(x1).max())


def test_permutation_invariance():
    s = _system()
    a, b = s.matrix, s.rhs
    perm = np.random.default_rng(4).permutation(a.shape[0])
    x, _ = solve_spd((a, b))
    xp, _ = solve_spd((a[perm][:, perm], b[perm]))
    np.testing.assert_allclose(xp, x[perm], atol=1e-10 * np.abs(x).max())


def test_matches_dense_solve():
    s = _system("galerkin")
    x, _ = solve_spd(s)
    np.testing.assert_allclose(x, np.linalg.solve(s.matrix.toarray(), s.rhs), atol=1e-10)


def test_indefinite_rejected():
    a = sp.csr_matrix([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(FormulationError):
        solve_spd((a, np.ones(2)), "cholesky")


def test_singular_rejected():
    a = sp.csr_matrix([[1.0, -1.0], [-1.0, 1.0]])
    with pytest.raises(FormulationError):
        solve_spd((a, np.array([1.0, -1.0])), "cholesky")


def test_negative_diagonal_rejected_by_cg():
    with pytest.raises(FormulationError):
        solve_spd((sp.csr_matrix([[-1.0]]), np.ones(1)), "cg")


def test_unknown_method():
    with pytest.raises(InvalidArgumentError):
        solve_spd((sp.identity(2), np.ones(2)), "lu")


def test_report_without_time():
    _, rep = solve_spd((sp.identity(3), np.ones(3)))
    d = rep.to_dict(include_time=False)
    assert set(d) == {"method", "relative_residual", "iterations"}
