import numpy as np
import pytest

from hyperdyn import gluing as G
from hyperdyn import product as P
from hyperdyn.errors import NotInDomain
from hyperdyn.system import build_system


def wrapped_err(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b))
    d[..., :2] = np.minimum(d[..., :2], 1.0 - d[..., :2])
    return np.max(d)


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------


def test_profile_endpoint_identities(cat_system):
    prof = G.profile(cat_system)
    lam = cat_system.lam
    assert prof.mu(lam ** -4) == pytest.approx(0.0, abs=1e-12)
    assert prof.mu(lam ** -3) == pytest.approx(1.0, abs=1e-12)
    assert prof.tau(0.0) == pytest.approx(1.0, abs=1e-12)
    assert prof.tau(1.0) == pytest.approx(0.0, abs=1e-12)
    assert prof.eta(0.0) == pytest.approx(lam, abs=1e-12)
    assert prof.eta(1.0) == pytest.approx(1.0 / lam, abs=1e-12)


def test_profile_fixed_points(cat_system):
    prof = G.profile(cat_system)
    assert abs(prof.kappa(prof.r_star) - prof.r_star) < 1e-12
    assert abs(prof.tau(prof.t_star) - prof.t_star) < 1e-12
    assert cat_system.hole_radius < prof.r_star < cat_system.z_halfwidth


def test_zeta_identity_at_fixed_leaf(cat_system):
    prof = G.profile(cat_system)
    zs = np.linspace(-3.0, 3.0, 100)
    assert np.max(np.abs(prof.zeta(prof.t_star, zs) - zs)) < 1e-12


def test_tau_composition_keeps_fixed_point(cat_system):
    prof = G.profile(cat_system)
    t2 = prof.tau(prof.tau(prof.t_star))
    assert abs(t2 - prof.t_star) < 1e-12


# ---------------------------------------------------------------------------
# gluing map
# ---------------------------------------------------------------------------


def test_h_on_inner_boundary_matches_closed_form(cat_system, rng):
    # on the innermost leaf the gluing is the pure expanding surgery with
    # the height stretched by lambda
    from hyperdyn.torus import da_apply

    pts = P.sample_leaf(cat_system, 1.0, 500, rng)
    img = G.h_map(cat_system, pts)
    expect = np.concatenate(
        [da_apply(cat_system, "R", pts[:, :2]), (cat_system.lam * pts[:, 2])[:, None]],
        axis=-1,
    )
    assert wrapped_err(img, expect) < 1e-11
    assert np.max(np.abs(P.leaf_of(cat_system, img) - 0.0)) < 1e-9


def test_h_fixed_leaf_keeps_height(cat_system, rng):
    prof = G.profile(cat_system)
    pts = P.sample_leaf(cat_system, prof.t_star, 400, rng)
    img = G.h_map(cat_system, pts)
    assert np.max(np.abs(img[:, 2] - pts[:, 2])) < 1e-10


def test_h_leaf_exchange(cat_system, rng):
    ts = rng.uniform(0.0, 1.0, 50)
    pts = np.concatenate([P.sample_leaf(cat_system, t, 20, rng) for t in ts])
    t_in = P.leaf_of(cat_system, pts)
    t_out = P.leaf_of(cat_system, G.h_map(cat_system, pts))
    assert np.max(np.abs(t_out - G.tau(cat_system, t_in))) < 1e-9


def test_h_boundary_exchange(cat_system, rng):
    p1 = P.sample_leaf(cat_system, 0.0, 400, rng)
    p2 = P.sample_leaf(cat_system, 1.0, 400, rng)
    assert np.max(np.abs(P.leaf_of(cat_system, G.h_map(cat_system, p2)))) < 1e-9
    assert np.max(np.abs(P.leaf_of(cat_system, G.h_map(cat_system, p1)) - 1.0)) < 1e-9


def test_h_inverse_roundtrip(cat_system, rng):
    ts = rng.uniform(0.0, 1.0, 40)
    pts = np.concatenate([P.sample_leaf(cat_system, t, 20, rng) for t in ts])
    back = G.h_inv(cat_system, G.h_map(cat_system, pts))
    assert wrapped_err(back, pts) < 1e-10


def test_h_rejects_outside_shell(cat_system):
    with pytest.raises(NotInDomain):
        G.h_map(cat_system, np.array([[0.5, 0.5, 0.3]]))


def test_commutation_identity(cat_system, rng):
    pts = P.sample_leaf(cat_system, 1.0, 3000, rng)
    lhs = P.phi_apply(cat_system, "A", G.h_map(cat_system, pts))
    rhs = G.h_map(cat_system, P.phi_apply(cat_system, "R", pts))
    assert wrapped_err(lhs, rhs) < 1e-9


# ---------------------------------------------------------------------------
# straightening map
# ---------------------------------------------------------------------------


def test_theta_identity_on_upper(cat_system, rng):
    pts = P.sample_leaf(cat_system, 0.3, 200, rng, cylinder_frac=0.0)
    upper = pts[pts[:, 2] > 0]
    assert np.array_equal(G.theta_map(cat_system, upper), upper)


def test_theta_cylinder_radius_formula(cat_system):
    # stated boundary-leaf form of the remapped radius
    sys_ = cat_system
    lam, n = sys_.lam, sys_.n_exponent
    lamn = lam ** n
    z = np.linspace(-sys_.z_halfwidth, sys_.z_halfwidth, 33)
    expect = (lamn - 1) / (2 * lamn) * (sys_.hole_radius / sys_.z_halfwidth) * z + (
        lamn + 1
    ) / (2 * lamn) * sys_.hole_radius
    got = G.rtilde(sys_, np.zeros_like(z), z)
    assert np.max(np.abs(got - expect)) < 1e-15
    # and the other boundary leaf joins the shrunken hole at the bottom
    assert G.rtilde(sys_, 1.0, -sys_.hole_radius) == pytest.approx(
        sys_.z_halfwidth / lamn, abs=1e-15
    )


def test_theta_equivariance(cat_system, rng):
    pts = P.sample_leaf(cat_system, 0.0, 3000, rng, cylinder_frac=0.34)
    lhs = G.theta_map(cat_system, P.phi_apply(cat_system, "A", pts))
    rhs = P.phi_apply(cat_system, "A", G.theta_map(cat_system, pts))
    assert wrapped_err(lhs, rhs) < 1e-9


def test_theta_inverse_roundtrip(cat_system, rng):
    ts = rng.uniform(0.0, 1.0, 40)
    pts = np.concatenate(
        [P.sample_leaf(cat_system, t, 25, rng, cylinder_frac=0.3) for t in ts]
    )
    back = G.theta_inv(cat_system, G.theta_map(cat_system, pts))
    assert wrapped_err(back, pts) < 1e-9


# ---------------------------------------------------------------------------
# the global diffeomorphism
# ---------------------------------------------------------------------------


def test_f_a_side_contracts_height(cat_system):
    m = G.ManifoldPoint("A", [0.5, 0.8, 0.01])
    out = G.f_apply(cat_system, m)
    assert out.side == "A"
    assert out.pts[2] == pytest.approx(0.01 / cat_system.lam, abs=1e-15)


def test_f_double_route_agreement(cat_system, rng):
    # both representations of the transition must agree on the inner leaf
    pts = P.sample_leaf(cat_system, 1.0, 1000, rng)
    route1 = P.phi_apply(cat_system, "A", G.h_map(cat_system, pts))
    route2 = G.h_map(cat_system, P.phi_apply(cat_system, "R", pts))
    assert wrapped_err(route1, route2) < 1e-9


@pytest.mark.parametrize("kind", ["plain_H", "generic_Htilde"])
def test_f_forward_inverse_identity(kind, rng):
    sys_ = build_system([[2, 1], [1, 1]], gluing_kind=kind)
    base = np.concatenate(
        [P.sample_leaf(sys_, t, 25, rng) for t in rng.uniform(0.05, 0.95, 40)]
    )
    sides = np.full(len(base), G.SIDE_R, dtype=np.int8)
    s, p = sides.copy(), base.copy()
    for _ in range(3):
        s, p = G.f_apply_many(sys_, s, p)
    for _ in range(3):
        s, p = G.f_apply_many(sys_, s, p, inverse=True)
    assert wrapped_err(p, base) < 1e-7
    assert np.array_equal(s, sides)


def test_f_injective_on_samples(cat_system, rng):
    from scipy.spatial import cKDTree

    base = np.concatenate(
        [P.sample_leaf(cat_system, t, 100, rng) for t in rng.uniform(0.1, 0.9, 40)]
    )
    sides = np.full(len(base), G.SIDE_R, dtype=np.int8)
    s, p = G.f_apply_many(cat_system, sides, base)
    assert np.all(s == G.SIDE_A)
    tiled = G.cloud_tree(p)
    d, _ = tiled.query(p, k=2)
    assert d[:, 1].min() > 1e-12


def test_orbit_group_property(cat_system, rng):
    m = G.ManifoldPoint("R", P.sample_leaf(cat_system, 0.4, 4, rng)[0])
    orb = G.orbit(cat_system, m, 5)
    assert len(orb) == 6
    back = G.orbit(cat_system, orb[-1], -5)
    dists = [G.manifold_distance(cat_system, a, b) for a, b in zip(orb[::-1], back)]
    assert max(dists) < 1e-9


def test_orbit_zero_steps(cat_system):
    m = G.ManifoldPoint("A", [0.5, 0.8, 0.01])
    assert len(G.orbit(cat_system, m, 0)) == 1


def test_orbit_monotone_wandering_coordinate(cat_system, rng):
    from hyperdyn.energy import wandering_time

    m = G.ManifoldPoint("R", P.sample_leaf(cat_system, 0.5, 4, rng)[0])
    orb = G.orbit(cat_system, m, 6)
    ts = []
    for p in orb:
        side = G.SIDE_R if p.side == "R" else G.SIDE_A
        t, _ = wandering_time(cat_system, np.array([side]), p.pts[None, :])
        ts.append(float(t[0]))
    assert np.all(np.diff(ts) > 0.0)


def test_f_re_represents_stray_points(cat_system):
    # a point handed in above the trapping band is re-expressed through the
    # equivariant extension instead of failing; its image is the A-chart
    # image of the stray coordinates, seen as a manifold point
    stray = np.array([0.35, 0.6, 0.08])
    out = G.f_apply(cat_system, G.ManifoldPoint("A", stray))
    expect = G.ManifoldPoint("A", P.phi_apply(cat_system, "A", stray[None, :])[0])
    assert G.manifold_distance(cat_system, out, expect) < 1e-9


# ---------------------------------------------------------------------------
# clouds
# ---------------------------------------------------------------------------


def test_attractor_sample_zero_iters_is_grid(cat_system):
    cloud = G.attractor_sample(cat_system, 24, 0)
    grid = P.grid_on_trapping(cat_system, 24, 5)
    assert np.array_equal(cloud, grid)


def test_attractor_z_contraction_exact(cat_system):
    lam = cat_system.lam
    for k in (1, 4, 9):
        cloud = G.attractor_sample(cat_system, 16, k, n_z=3)
        assert np.max(np.abs(cloud[:, 2])) == pytest.approx(
            cat_system.z_halfwidth * lam ** -k, abs=1e-12
        )


def test_attractor_cloud_margins(cat_system):
    cloud = G.attractor_sample(cat_system, 32, 8)
    assert np.min(P.trapping_margin(cat_system, cloud)) >= 0.0


def test_repeller_cloud_margins(cat_system):
    cloud = G.repeller_sample(cat_system, 32, 8)
    assert np.min(P.trapping_margin(cat_system, cloud)) >= 0.0
    assert np.max(np.abs(cloud[:, 2])) < cat_system.z_halfwidth * cat_system.lam ** -7
