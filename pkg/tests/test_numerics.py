import numpy as np
import pytest

from hyperdyn import gluing as gl
from hyperdyn import product as pr
from hyperdyn.errors import MaxDepth, NoSignChange
from hyperdyn.numerics import Tolerances, bisect, integrate, jacobian_fd


def test_tolerances_validate():
    Tolerances()
    with pytest.raises(ValueError):
        Tolerances(eq_tol=0.0)
    with pytest.raises(ValueError):
        Tolerances(fd_step=1e-9)


def test_bisect_linear_root():
    assert bisect(lambda x: x - 0.5, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_bisect_sqrt2():
    root = bisect(lambda x: x * x - 2.0, 1.0, 2.0, tol=1e-13)
    assert root == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_bisect_requires_sign_change():
    with pytest.raises(NoSignChange):
        bisect(lambda x: x * x + 1.0, -1.0, 1.0)


def test_bisect_fixed_radius_matches_dense_scan(cat_system):
    # oracle: locate the sign change of kappa(r) - r by dense scanning
    sys_ = cat_system
    rs = np.linspace(sys_.hole_radius, sys_.z_halfwidth, 200001)
    vals = gl.kappa(sys_, rs) - rs
    i = int(np.argmax(vals[:-1] * vals[1:] <= 0.0))
    scan_estimate = 0.5 * (rs[i] + rs[i + 1])
    root = bisect(
        lambda r: float(gl.kappa(sys_, r) - r), sys_.hole_radius, sys_.z_halfwidth, tol=1e-13
    )
    assert abs(root - scan_estimate) < (rs[1] - rs[0])
    assert abs(gl.kappa(sys_, root) - root) < 1e-12


def test_bisect_stable_under_tolerance_halving(cat_system):
    sys_ = cat_system
    f = lambda r: float(gl.kappa(sys_, r) - r)
    a = bisect(f, sys_.hole_radius, sys_.z_halfwidth, tol=1e-10)
    b = bisect(f, sys_.hole_radius, sys_.z_halfwidth, tol=5e-11)
    assert abs(a - b) <= 1e-10


def test_integrate_constant_and_linear():
    assert integrate(lambda x: 1.0, 0.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert integrate(lambda x: x, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_integrate_additive():
    f = lambda x: np.exp(-x) * np.sin(3 * x) + 0.2
    tol = 1e-8
    whole = integrate(f, 0.0, 2.0, tol=tol)
    split = integrate(f, 0.0, 0.7, tol=tol) + integrate(f, 0.7, 2.0, tol=tol)
    assert abs(whole - split) <= 3 * tol


def test_integrate_depth_cap():
    # a discontinuity at an irrational point defeats the refinement
    with pytest.raises(MaxDepth):
        integrate(lambda x: 0.0 if x < np.sqrt(0.5) else 1.0, 0.0, 1.0, tol=1e-15, max_depth=12)


def test_jacobian_identity():
    jac = jacobian_fd(lambda p: p, np.array([0.3, -0.7, 2.0]))
    assert np.allclose(jac, np.eye(3), atol=1e-9)


def test_jacobian_linear_map_exact():
    M = np.array([[2.0, 1.0, 0.0], [0.5, -1.0, 3.0], [0.0, 0.25, 1.5]])
    jac = jacobian_fd(lambda p: M @ p, np.array([0.1, 0.2, 0.3]))
    assert np.allclose(jac, M, atol=1e-8)


def test_jacobian_product_map_block_structure(cat_system):
    # analytic oracle: away from the surgery disk the product map is the
    # automorphism on the torus part and multiplies z by 1/lambda
    sys_ = cat_system
    p = np.array([0.5, 0.8, 0.01])
    jac = jacobian_fd(
        lambda q: pr.phi_apply(sys_, "A", q[None, :])[0], p, h=1e-6, wrap=[0, 1]
    )
    expected = np.zeros((3, 3))
    expected[:2, :2] = sys_.C
    expected[2, 2] = 1.0 / sys_.lam
    assert np.allclose(jac, expected, atol=1e-8)


def test_jacobian_composition_product(cat_system):
    sys_ = cat_system
    p = np.array([0.52, 0.81, 0.02])
    f = lambda q: pr.phi_apply(sys_, "A", q[None, :])[0]
    fp = f(p)
    j_f = jacobian_fd(f, p, wrap=[0, 1])
    j_g = jacobian_fd(f, fp, wrap=[0, 1])
    j_fg = jacobian_fd(lambda q: f(f(q)), p, wrap=[0, 1])
    assert np.allclose(j_fg, j_g @ j_f, atol=1e-5)
