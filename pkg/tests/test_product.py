import numpy as np
import pytest

from hyperdyn import product as P
from hyperdyn.errors import BadCoords, NotInDomain


def test_phi_fixed_torus_point(cat_system):
    lam = cat_system.lam
    out = P.phi_apply(cat_system, "A", np.array([0.0, 0.0, 1.0]))
    assert np.allclose(out, [0.0, 0.0, 1.0 / lam], atol=1e-15)
    out = P.phi_apply(cat_system, "R", np.array([0.0, 0.0, 1.0]))
    assert np.allclose(out, [0.0, 0.0, lam], atol=1e-15)


def test_phi_inverse_roundtrip(cat_system, rng):
    pts = np.stack(
        [rng.uniform(0, 1, 1000), rng.uniform(0, 1, 1000), rng.uniform(-0.05, 0.05, 1000)],
        axis=-1,
    )
    for side in ("A", "R"):
        back = P.phi_apply(cat_system, side, P.phi_apply(cat_system, side, pts), inverse=True)
        d = np.abs(back - pts)
        d[:, :2] = np.minimum(d[:, :2], 1.0 - d[:, :2])
        assert np.max(d) < 1e-9


def test_trapping_margin_zero_on_boundary(cat_system, rng):
    pts = P.sample_trapping_boundary(cat_system, 2000, rng)
    assert np.max(np.abs(P.trapping_margin(cat_system, pts))) < 1e-12


def test_trapping_margin_zero_on_hole_circle(cat_system):
    from hyperdyn.torus import chart_point

    ang = np.linspace(0.0, 2 * np.pi, 50)
    xi = cat_system.hole_radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    pts = P.join_pts(chart_point(cat_system, xi), np.zeros(50))
    assert np.max(np.abs(P.trapping_margin(cat_system, pts))) < 1e-12


def test_boundary_maps_strictly_inside(cat_system, rng):
    pts = P.sample_trapping_boundary(cat_system, 10000, rng)
    margins = P.trapping_margin(cat_system, P.phi_apply(cat_system, "A", pts))
    assert np.min(margins) > 0.0


def test_leaf_roundtrip_boundary_leaves(cat_system, rng):
    for t, expect in ((0.0, 0.0), (1.0, 1.0)):
        pts = P.sample_leaf(cat_system, t, 300, rng)
        assert np.max(np.abs(P.leaf_of(cat_system, pts) - expect)) < 1e-12


def test_leaf_point_trivial_cases(cat_system):
    # outer leaf, far torus coordinate, top copy
    p = P.leaf_point(cat_system, 0.0, "upper", np.array([[0.5, 0.75]]))
    assert p[0, 2] == pytest.approx(cat_system.z_halfwidth, abs=1e-15)
    # innermost leaf cylinder at height zero sits on the hole circle
    p = P.leaf_point(cat_system, 1.0, "cylinder", np.array([[0.3, 0.0]]))
    from hyperdyn.torus import chart_coords

    assert np.linalg.norm(chart_coords(cat_system, p[0, :2])) == pytest.approx(
        cat_system.z_halfwidth, abs=1e-12
    )
    assert p[0, 2] == 0.0


def test_leaf_roundtrip_random(cat_system, rng):
    ts = rng.uniform(0.0, 1.0, 60)
    pts = np.concatenate([P.sample_leaf(cat_system, t, 30, rng) for t in ts])
    expect = np.repeat(ts, 30)
    assert np.max(np.abs(P.leaf_of(cat_system, pts) - expect)) < 1e-9


def test_leaf_point_rejects_hole_coords(cat_system):
    with pytest.raises(BadCoords):
        P.leaf_point(cat_system, 1.0, "upper", np.array([[0.0, 0.0]]))
    with pytest.raises(BadCoords):
        P.leaf_point(cat_system, 0.5, "cylinder", np.array([[0.1, 1.0]]))


def test_leaf_of_rejects_outside(cat_system):
    with pytest.raises(NotInDomain):
        P.leaf_of(cat_system, np.array([[0.5, 0.5, 0.2]]))


def test_shell_partition_coverage(cat_system, rng):
    # a uniform sample of the shell classifies everywhere and the leaf
    # values fill [0, 1] densely
    n = 40000
    cand = np.stack(
        [
            rng.uniform(0, 1, n),
            rng.uniform(0, 1, n),
            rng.uniform(-cat_system.z_halfwidth, cat_system.z_halfwidth, n),
        ],
        axis=-1,
    )
    keep = P.in_shell(cat_system, cand, tol=0.0)
    ts = np.sort(P.leaf_of(cat_system, cand[keep]))
    assert len(ts) > 10000
    assert ts[0] < 0.01 and ts[-1] > 0.99
    assert np.max(np.diff(ts)) < 0.01


def test_deep_region_is_forward_image(cat_system, rng):
    pts = P.grid_on_trapping(cat_system, 24, 5)
    img = P.phi_apply(cat_system, "A", pts)
    assert np.all(P.in_deep(cat_system, img, tol=1e-12))
    assert np.all(P.in_trapping(cat_system, img))
