import numpy as np
import pytest

from dmpfem.errors import InvalidArgumentError
from dmpfem.quadrature import check_full_integration, default_ngp, gauss_rule, integrate_ref


def test_small_rules():
    r1 = gauss_rule(1)
    assert r1.points == (0.0,) and r1.weights == (2.0,)
    r2 = gauss_rule(2)
    np.testing.assert_allclose(r2.point_array, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(r2.weight_array, [1, 1], atol=1e-15)
    r3 = gauss_rule(3)
    np.testing.assert_allclose(r3.point_array, [-np.sqrt(0.6), 0, np.sqrt(0.6)], atol=1e-15)
    np.testing.assert_allclose(r3.weight_array, [5 / 9, 8 / 9, 5 / 9], atol=1e-15)


@pytest.mark.parametrize("ngp", range(1, 33))
def test_matches_numpy_leggauss(ngp):
    x, w = np.polynomial.legendre.leggauss(ngp)
    r = gauss_rule(ngp)
    np.testing.assert_allclose(r.point_array, x, atol=1e-14)
    np.testing.assert_allclose(r.weight_array, w, atol=1e-14)
    assert abs(r.weight_array.sum() - 2) < 1e-13
    np.testing.assert_array_equal(r.point_array, -r.point_array[::-1])
    np.testing.assert_array_equal(r.weight_array, r.weight_array[::-1])
    assert np.all(r.weight_array > 0) and np.all(np.abs(r.point_array) < 1)


@pytest.mark.parametrize("ngp", range(1, 13))
def test_exactness_degree(ngp):
    r = gauss_rule(ngp)
    for k in range(2 * ngp):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(r.weight_array @ r.point_array**k - exact) < 1e-12


def test_not_exact_beyond_degree():
    r = gauss_rule(3)
    assert abs(r.weight_array @ r.point_array**6 - 2 / 7) > 1e-4


@pytest.mark.parametrize("ngp", [0, 33, -1])
def test_out_of_range(ngp):
    with pytest.raises(InvalidArgumentError):
        gauss_rule(ngp)


def test_integrate_ref_examples():
    assert integrate_ref(lambda x: 1.0, 2, 2) == pytest.approx(4.0, abs=1e-14)
    assert integrate_ref(lambda x: x[0] ** 2 * x[1] ** 2, 2, 2) == pytest.approx(4 / 9, abs=1e-12)
    assert abs(integrate_ref(lambda x: x[0] ** 5, 3, 1)) < 1e-13
    assert integrate_ref(lambda x: x[0] ** 2 * x[1] ** 4 * x[2] ** 2, 3, 3) == pytest.approx(
        (2 / 3) * (2 / 5) * (2 / 3), abs=1e-13
    )


def test_default_ngp_policy():
    assert default_ngp(4, True, "galerkin") == 5
    assert default_ngp(4, False, "galerkin") == 6
    assert default_ngp(4, True, "ls1") == 6


def test_full_integration_guard():
    check_full_integration(3, gauss_rule(4))
    with pytest.raises(InvalidArgumentError):
        check_full_integration(3, gauss_rule(3))
