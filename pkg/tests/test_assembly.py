import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmpfem.assembly import (
    Formulation,
    as_formulation,
    assemble_global,
    build_system,
    element_galerkin,
    element_ls,
    element_ls1_voigt,
    element_ls2_voigt,
    load_data,
    read_matrix,
    voigt_discrepancy,
    write_matrix,
)
from dmpfem.basis import gll_nodes
from dmpfem.errors import DegenerateCoefficientError, InvalidArgumentError
from dmpfem.mesh import NEUMANN, build_interval_mesh, build_rect_mesh, element_map, jitter_mesh
from dmpfem.problem import (
    BoundaryData,
    CoefficientField,
    ProblemSpec,
    box_breaks,
    box_indicator,
    canonical_problem,
    constant_field,
    constant_tensor,
    lepotier_diffusivity,
)
from dmpfem.quadrature import gauss_rule
from dmpfem.solver import solve_spd


def _coeff(dim, alpha=0.0, d=None, f=None, **kw):
    d = np.eye(dim) if d is None else d
    f = f if f is not None else constant_field(0.0)
    return CoefficientField(dim, constant_field(alpha), constant_tensor(d), f, alpha_max=alpha,
                            ellipticity=(1.0, 1.0), constant=True, **kw)


def _problem(coeff, dirichlet, neumann=None, mesh=None):
    return ProblemSpec("patch", coeff, BoundaryData(dirichlet, neumann), lambda: mesh)


def test_formulation_names():
    assert as_formulation("single-field").kind == "galerkin"
    assert as_formulation("LS2").kind == "ls2"
    with pytest.raises(InvalidArgumentError):
        as_formulation("ls3")
    with pytest.raises(InvalidArgumentError):
        Formulation("nope")


def test_galerkin_1d_linear_element():
    h = 0.25
    mesh = build_interval_mesh(0, 1, 4)
    emap = element_map(mesh, 1)
    es = element_galerkin(emap, _coeff(1), gll_nodes(1).with_dim(1), gauss_rule(2))
    np.testing.assert_allclose(es.matrix, np.array([[1, -1], [-1, 1]]) / h, atol=1e-13)
    alpha = 3.0
    es = element_galerkin(emap, _coeff(1, alpha), gll_nodes(1).with_dim(1), gauss_rule(2))
    mass = alpha * h / 6 * np.array([[2, 1], [1, 2]])
    np.testing.assert_allclose(es.matrix, np.array([[1, -1], [-1, 1]]) / h + mass, atol=1e-13)


def test_galerkin_global_1d():
    mesh = build_interval_mesh(0, 1, 2)
    sys_ = assemble_global(mesh, _coeff(1), gll_nodes(1), "galerkin", gauss_rule(2))
    dense = sys_.matrix.toarray()
    assert dense[1, 1] == pytest.approx(4.0, abs=1e-13)
    np.testing.assert_allclose(dense.sum(axis=1), 0.0, atol=1e-12)


def test_ls1_equals_ls2_for_identity():
    emap = element_map(jitter_mesh(build_rect_mesh(0, 0, 1, 1, 3, 3), 0.2, 1), 4)
    coeff = _coeff(2, alpha=1.0, f=constant_field(1.0))
    b, r = gll_nodes(3).with_dim(2), gauss_rule(5)
    a, c = element_ls(emap, coeff, b, r, "ls1"), element_ls(emap, coeff, b, r, "ls2")
    np.testing.assert_allclose(a.matrix, c.matrix, atol=1e-13)
    np.testing.assert_allclose(a.vector, c.vector, atol=1e-13)


@pytest.mark.parametrize("kind", ["galerkin", "ls1", "ls2"])
def test_element_matrices_symmetric_psd(kind):
    mesh = jitter_mesh(build_rect_mesh(0, 0, 0.5, 0.5, 4, 4), 0.2, 42)
    coeff = canonical_problem("lepotier").coefficients
    b = gll_nodes(3).with_dim(2)
    for e in (0, 5, 15):
        emap = element_map(mesh, e)
        es = (element_galerkin(emap, coeff, b, gauss_rule(5)) if kind == "galerkin"
              else element_ls(emap, coeff, b, gauss_rule(5), kind))
        np.testing.assert_array_equal(es.matrix, es.matrix.T)
        lam = np.linalg.eigvalsh(es.matrix)
        assert lam.min() > -1e-12 * lam.max()


def test_global_ls_spd_after_dirichlet():
    prob = canonical_problem("burman_ern")
    mesh = prob.build_mesh(nx=4, ny=2)
    for kind in ("ls1", "ls2"):
        s = build_system(mesh, prob, gll_nodes(2), kind, gauss_rule(4))
        dense = s.matrix.toarray()
        np.testing.assert_allclose(dense, dense.T, atol=1e-13)
        assert np.linalg.eigvalsh(dense).min() > 0


def _random_element(seed):
    rng = np.random.default_rng(seed)
    mesh = jitter_mesh(build_rect_mesh(0, 0, 1, 1, 3, 3), 0.25, int(rng.integers(1, 10_000)))
    return element_map(mesh, int(rng.integers(0, 9)))


@pytest.mark.parametrize("seed", range(50))
def test_voigt_ls1_matches_residual_operator(seed):
    emap = _random_element(seed)
    rng = np.random.default_rng(1000 + seed)
    coeff = _coeff(2, alpha=float(rng.uniform(0, 5)), d=np.array([[2.0, 0.3], [0.3, 1.0]]),
                   f=constant_field(1.0))
    b, r = gll_nodes(int(rng.integers(1, 5))).with_dim(2), gauss_rule(6)
    fast, ref = element_ls1_voigt(emap, coeff, b, r), element_ls(emap, coeff, b, r, "ls1")
    scale = np.abs(ref.matrix).max()
    assert np.abs(fast.matrix - ref.matrix).max() <= 1e-12 * scale
    np.testing.assert_allclose(fast.vector, ref.vector, atol=1e-12 * np.abs(ref.vector).max())


@pytest.mark.parametrize("seed", range(20))
def test_voigt_ls2_matches_when_decay_free(seed):
    emap = _random_element(seed)
    coeff = canonical_problem("hole", k1=1, k2=100).coefficients
    b, r = gll_nodes(3).with_dim(2), gauss_rule(5)
    fast, ref = element_ls2_voigt(emap, coeff, b, r), element_ls(emap, coeff, b, r, "ls2")
    assert np.abs(fast.matrix - ref.matrix).max() <= 1e-12 * np.abs(ref.matrix).max()
    assert voigt_discrepancy(emap, coeff, b, r, "ls2", tol=1.0) < 1e-9


def test_voigt_ls2_differs_with_decay():
    # the closed-form blocks carry no beta^2 weight, so alpha != 1 separates them
    emap = _random_element(3)
    coeff = _coeff(2, alpha=4.0, d=np.diag([4.0, 9.0]))
    b, r = gll_nodes(2).with_dim(2), gauss_rule(4)
    gap = voigt_discrepancy(emap, coeff, b, r, "ls2", tol=np.inf)
    assert gap > 1e-3


def test_ls2_inverse_entries():
    # with q = N_i e_x and a constant D, the q-q block is int N_i N_j (D^{-1})_xx
    emap = element_map(build_rect_mesh(0, 0, 2, 2, 1, 1), 0)
    coeff = _coeff(2, d=np.diag([4.0, 9.0]))
    es = element_ls(emap, coeff, gll_nodes(1).with_dim(2), gauss_rule(3), "ls2")
    nl = 4
    qq = es.matrix[nl : 2 * nl, nl : 2 * nl]
    grad_block = element_galerkin(emap, _coeff(2, d=np.diag([1.0, 0.0])), gll_nodes(1).with_dim(2),
                                  gauss_rule(3)).matrix
    mass = element_galerkin(emap, _coeff(2, alpha=1.0, d=np.zeros((2, 2))), gll_nodes(1).with_dim(2),
                            gauss_rule(3)).matrix
    np.testing.assert_allclose(qq, grad_block + 0.25 * mass, atol=1e-13)


def test_ls2_singular_diffusivity_reports_location():
    coeff = canonical_problem("lepotier").coefficients
    mesh = build_rect_mesh(0, 0, 0.5, 0.5, 1, 1)
    # an odd Gauss rule on an element centered at the origin samples D exactly where it vanishes
    centered = build_rect_mesh(-0.5, -0.5, 0.5, 0.5, 1, 1)
    with pytest.raises(DegenerateCoefficientError) as info:
        element_ls(element_map(centered, 0), coeff, gll_nodes(1).with_dim(2), gauss_rule(3), "ls2")
    assert info.value.args[0].startswith("LS2 weight undefined")
    element_ls(element_map(mesh, 0), coeff, gll_nodes(1).with_dim(2), gauss_rule(3), "ls2")


def test_dirichlet_elimination_hole():
    prob = canonical_problem("hole", k1=1, k2=100)
    mesh = prob.build_mesh(n=1)
    s = build_system(mesh, prob, gll_nodes(2), "galerkin", gauss_rule(4))
    x, _ = solve_spd(s)
    inner = s.dofmap.dirichlet_dofs["inner"]
    outer = s.dofmap.dirichlet_dofs["outer"]
    assert np.all(x[inner] == 2.0) and np.all(x[outer] == 0.0)
    rows = s.matrix[inner].toarray()
    expected = np.zeros_like(rows)
    expected[np.arange(len(inner)), inner] = 1.0
    np.testing.assert_array_equal(rows, expected)


@pytest.mark.parametrize("kind", ["galerkin", "ls1", "ls2"])
def test_neumann_1d(kind):
    # -c'' = 0, c(0) = 1, outward flux c'(1) = 2, so c = 1 + 2x
    mesh = build_interval_mesh(0, 1, 3).with_boundary_kind(NEUMANN, predicate=lambda a: a[0] == 1)
    prob = _problem(_coeff(1), lambda x, r: np.full(len(x), 1.0), lambda x: np.full(len(x), 2.0))
    s = build_system(mesh, prob, gll_nodes(2), kind, gauss_rule(4))
    x, _ = solve_spd(s)
    n = s.dofmap.n_dofs
    np.testing.assert_allclose(x[:n], 1 + 2 * s.dofmap.coords[:, 0], atol=1e-11)
    if kind != "galerkin":
        np.testing.assert_allclose(x[n:], -2.0, atol=1e-10)


@pytest.mark.parametrize("kind", ["galerkin", "ls1", "ls2"])
def test_manufactured_patch_2d(kind):
    # c = 1 + 2x + 3y, D = diag(2, 1), alpha = 1, f = alpha c; Neumann data on x = 1
    d = np.diag([2.0, 1.0])

    def exact(x):
        return 1 + 2 * x[:, 0] + 3 * x[:, 1]

    mesh = jitter_mesh(build_rect_mesh(0, 0, 1, 1, 3, 3), 0.2, 9)
    mesh = mesh.with_boundary_kind(NEUMANN, predicate=lambda a, b: a[0] == 1 and b[0] == 1)
    coeff = CoefficientField(2, constant_field(1.0), constant_tensor(d), exact, alpha_max=1.0,
                             ellipticity=(1.0, 2.0), constant=True)
    prob = _problem(coeff, lambda x, r: exact(x), lambda x: np.full(len(x), 4.0))
    s = build_system(mesh, prob, gll_nodes(2), kind, gauss_rule(5))
    x, _ = solve_spd(s)
    n = s.dofmap.n_dofs
    np.testing.assert_allclose(x[:n], exact(s.dofmap.coords), atol=1e-10)
    if kind != "galerkin":
        np.testing.assert_allclose(x[n : 2 * n], -4.0, atol=1e-9)
        np.testing.assert_allclose(x[2 * n :], -3.0, atol=1e-9)


def test_matrix_dump_round_trip(tmp_path):
    prob = canonical_problem("burman_ern")
    s = build_system(prob.build_mesh(nx=2, ny=1), prob, gll_nodes(2), "ls1", gauss_rule(4))
    path = tmp_path / "k.txt"
    write_matrix(s, path)
    header, back = read_matrix(path)
    assert header == {"dimension": s.size, "formulation": "ls1", "p": 2, "nnz": s.matrix.nnz}
    assert (back != s.matrix).nnz == 0


def test_assembly_deterministic():
    prob = canonical_problem("lepotier")
    mesh = prob.build_mesh(nx=3, ny=3)
    a = build_system(mesh, prob, gll_nodes(3), "ls2", gauss_rule(5))
    b = build_system(mesh, prob, gll_nodes(3), "ls2", gauss_rule(5))
    np.testing.assert_array_equal(a.matrix.data, b.matrix.data)
    np.testing.assert_array_equal(a.rhs, b.rhs)


def _indicator_coeff():
    box = [(0.0, 0.5), (0.0, 0.075)]
    return _coeff(2, f=box_indicator(box), forcing_breaks=box_breaks(box))


def test_load_exact_on_cut_rectangle():
    # summing the Galerkin load over all basis functions integrates f over the element
    emap = element_map(build_rect_mesh(0.4, 0.0, 0.6, 0.1, 1, 1), 0)
    b = gll_nodes(4).with_dim(2)
    es = element_galerkin(emap, _indicator_coeff(), b, gauss_rule(5))
    assert es.vector.sum() == pytest.approx(0.1 * 0.075, abs=1e-15)
    ld = load_data(emap, _indicator_coeff(), b, gauss_rule(5))
    assert len(ld.weights) == 4 * 25
    assert ld.weights.sum() == pytest.approx(0.02, abs=1e-15)


def test_load_uncut_element_uses_standard_rule():
    emap = element_map(build_rect_mesh(0.6, 0.1, 0.8, 0.2, 1, 1), 0)
    b = gll_nodes(2).with_dim(2)
    ld = load_data(emap, _indicator_coeff(), b, gauss_rule(4))
    assert len(ld.weights) == 16
    assert element_galerkin(emap, _indicator_coeff(), b, gauss_rule(4)).vector.sum() == 0.0


def test_load_composite_on_distorted_element():
    mesh = jitter_mesh(build_rect_mesh(0.3, -0.1, 0.7, 0.3, 2, 2), 0.2, 5)
    b = gll_nodes(2).with_dim(2)
    total = sum(element_galerkin(element_map(mesh, e), _indicator_coeff(), b, gauss_rule(4)).vector.sum()
                for e in range(4))
    # covered part of the support: [0.3, 0.5] x [0, 0.075]
    assert total == pytest.approx(0.2 * 0.075, rel=0.05)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.49), st.floats(0.01, 0.49))
def test_lepotier_element_matrix_finite(x0, y0):
    emap = element_map(build_rect_mesh(x0, y0, x0 + 0.01, y0 + 0.01, 1, 1), 0)
    coeff = canonical_problem("lepotier").coefficients
    es = element_ls(emap, coeff, gll_nodes(2).with_dim(2), gauss_rule(4), "ls2")
    assert np.isfinite(es.matrix).all()
    d = lepotier_diffusivity(x0, y0)
    assert np.linalg.eigvalsh(d).min() > 0
