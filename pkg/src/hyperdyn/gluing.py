"""The glued 3-manifold: scalar gluing profile, the leafwise gluing map of the
two fundamental shells, the leaf-straightening modification used for the
generic variant, the global diffeomorphism, orbits, and cloud sampling.

A manifold point is a side tag ('A' or 'R') plus product coordinates in that
side's T^2 x R copy.  The two shells coincide as subsets of T^2 x R; the
gluing identifies the R-side shell with the A-side one leafwise, reversing
the leaf order (outermost leaf of one side lands on the innermost of the
other).  Points in the overlap are canonically stored on the R side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import IterationBound, NotInDomain
from .numerics import bisect, bisect_vec
from .product import (
    PART_CYLINDER,
    PART_LOWER,
    PART_UPPER,
    grid_on_trapping,
    in_deep,
    in_shell,
    in_trapping,
    join_pts,
    leaf_of,
    mu_of_r,
    phi_apply,
    r_of_t,
    shell_part,
    split_pts,
    trapping_margin,
)
from .torus import chart_coords, chart_point, da_apply, da_power

SIDE_A = 0
SIDE_R = 1
_TRANSITION_CAP = 64


# ---------------------------------------------------------------------------
# scalar profile
# ---------------------------------------------------------------------------


def eta(sys, t):
    """Radius stretch factor along the leaf family: lam at t=0, 1/lam at t=1.

    Defined as the ratio r(1-t)/r(t) so that kappa(r) = eta(mu(r)) * r is an
    orientation-reversing diffeomorphism of [lam^-4, lam^-3]; an affine
    interpolation between the endpoint values would bulge past the segment
    and break leafwise injectivity of the gluing.
    """
    t = np.asarray(t, dtype=float)
    return r_of_t(sys, 1.0 - t) / r_of_t(sys, t)


def kappa(sys, r):
    """Orientation-reversing self-map of the leaf radius range."""
    return eta(sys, mu_of_r(sys, r)) * np.asarray(r, dtype=float)


def tau(sys, t):
    """Leaf exchange map: tau(0)=1, tau(1)=0, unique interior fixed point."""
    return mu_of_r(sys, kappa(sys, r_of_t(sys, t)))


def tau_inv(sys, tq):
    """Inverse of the (decreasing) leaf exchange map on [0, 1]."""
    tq = np.asarray(tq, dtype=float)
    return bisect_vec(
        lambda t: tau(sys, t) - tq,
        np.zeros(tq.shape),
        np.ones(tq.shape),
    )


def zeta(sys, t, z):
    """Leafwise height rescaling carrying heights of G_t onto G_tau(t)."""
    t = np.asarray(t, dtype=float)
    return r_of_t(sys, 1.0 - tau(sys, t)) / r_of_t(sys, 1.0 - t) * np.asarray(z, dtype=float)


@dataclass(frozen=True)
class GluingProfile:
    """The six scalar maps of the gluing plus their fixed points."""

    lam: float
    r_star: float
    t_star: float
    r: object
    mu: object
    eta: object
    kappa: object
    tau: object
    zeta: object


def profile(sys):
    """Assemble the gluing profile; fixed points located by bisection."""
    r_lo, r_hi = sys.hole_radius, sys.z_halfwidth
    r_star = bisect(lambda r: kappa(sys, r) - r, r_lo, r_hi, tol=sys.tol.fix_tol)
    t_star = bisect(lambda t: tau(sys, t) - t, 0.0, 1.0, tol=sys.tol.fix_tol)
    prof = GluingProfile(
        lam=sys.lam,
        r_star=float(r_star),
        t_star=float(t_star),
        r=lambda t: r_of_t(sys, t),
        mu=lambda r: mu_of_r(sys, r),
        eta=lambda t: eta(sys, t),
        kappa=lambda r: kappa(sys, r),
        tau=lambda t: tau(sys, t),
        zeta=lambda t, z: zeta(sys, t, z),
    )
    if abs(kappa(sys, prof.r_star) - prof.r_star) > 10.0 * sys.tol.fix_tol:
        raise NotInDomain("radius fixed point failed to certify")
    if abs(tau(sys, prof.t_star) - prof.t_star) > 10.0 * sys.tol.fix_tol:
        raise NotInDomain("leaf fixed point failed to certify")
    return prof


# ---------------------------------------------------------------------------
# shell gluing
# ---------------------------------------------------------------------------


def blend_param(sys, t):
    """Blend parameter used on leaf G_t.

    The affine blend of the two disk surgeries stretches the leaf radius by
    beta/lam + (1-beta)*lam, so the parameter must solve that for the ratio
    eta(t) = r(tau(t))/r(t) to carry G_t exactly onto its partner leaf;
    using t itself would push interior leaves outside the shell.  beta(0)=0
    and beta(1)=1, so the boundary leaves still use the pure surgeries.
    """
    lam = sys.lam
    return (lam - eta(sys, t)) / (lam - 1.0 / lam)


def h_map(sys, pts, validate=True):
    """Leafwise gluing of the R-side shell onto the A-side shell.

    A point on leaf G_t goes to (blended surgery of w, zeta_t(z)) on leaf
    G_tau(t); the two boundary leaves exchange.  validate=False skips the
    shell membership check and leaves the leaf parameter unclipped so the
    map stays smooth across the boundary leaves (finite differences).
    """
    pts = np.asarray(pts, dtype=float)
    if validate:
        t = leaf_of(sys, pts)
    else:
        _, t = shell_part(sys, pts, raw=True)
    w, z = split_pts(pts)
    return join_pts(da_apply(sys, blend_param(sys, t), w), zeta(sys, t, z))


def h_inv(sys, pts):
    """Inverse of h_map: A-side shell back onto the R-side shell."""
    pts = np.asarray(pts, dtype=float)
    t_img = leaf_of(sys, pts)
    t = tau_inv(sys, t_img)
    w, z = split_pts(pts)
    scale = r_of_t(sys, 1.0 - tau(sys, t)) / r_of_t(sys, 1.0 - t)
    return join_pts(da_apply(sys, blend_param(sys, t), w, inverse=True), z / scale)


# ---------------------------------------------------------------------------
# leaf straightening (generic gluing variant)
# ---------------------------------------------------------------------------


def rtilde(sys, t, z):
    """Remapped cylinder radius of the straightened leaves.

    Piecewise linear in z with the kink at z = -lam^-4; the anchor value
    there interpolates affinely between its two boundary-leaf values, which
    reproduces the exact boundary-leaf formula at t = 0 and t = 1.
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    lam, n = sys.lam, sys.n_exponent
    lamn = lam ** n
    c1 = (lamn - 1.0) / (2.0 * lamn)
    c2 = (lamn + 1.0) / (2.0 * lamn)
    r0, r1 = sys.hole_radius, sys.z_halfwidth
    zk = -sys.hole_radius
    anchor0 = c1 * (r0 / r1) * zk + c2 * r0
    anchor1 = c1 * (r1 / r0) * zk + c2 * r1
    anchor = (anchor1 - anchor0) * t + anchor0
    r_t = r_of_t(sys, t)
    h_t = r_of_t(sys, 1.0 - t)
    upper = (anchor - r_t) / (zk - h_t) * (z - h_t) + r_t
    denom = np.where(np.abs(h_t + zk) < 1e-300, 1.0, zk + h_t)
    lower = (anchor - r_t / lamn) / denom * (z + h_t) + r_t / lamn
    return np.where(z >= zk, upper, lower)


def theta_map(sys, pts, validate=True):
    """Straightening map on the A-side shell: identity on the upper tori,
    n-fold inverse surgery on the lower tori, radius remap on cylinders."""
    pts = np.asarray(pts, dtype=float)
    if validate and not np.all(in_shell(sys, pts)):
        raise NotInDomain("point outside the fundamental shell")
    part, t = shell_part(sys, pts, raw=not validate)
    out = np.array(pts, dtype=float)
    lo = part == PART_LOWER
    if np.any(lo):
        out[lo, :2] = da_power(sys, "A", pts[lo, :2], -sys.n_exponent)
    cyl = part == PART_CYLINDER
    if np.any(cyl):
        w, z = split_pts(pts[cyl])
        xi = chart_coords(sys, w)
        ang = np.arctan2(xi[..., 1], xi[..., 0])
        rho = rtilde(sys, t[cyl], z)
        out[cyl, :2] = chart_point(sys, rho[..., None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1))
    return out


def straight_shell_classify(sys, pts, tol=None):
    """Classify points of the straightened shell: (valid, part, t).

    Same three parts as the plain shell, but the lower tori holes shrink by
    lam^-n and the cylinders are slanted according to rtilde.
    """
    tol = sys.tol.eq_tol if tol is None else tol
    pts = np.asarray(pts, dtype=float)
    w, z = split_pts(pts)
    xi = chart_coords(sys, w)
    rho_raw = np.linalg.norm(xi, axis=-1)
    rho = np.where(rho_raw <= 2.0, rho_raw, np.inf)
    az = np.abs(z)
    lamn = sys.lam ** sys.n_exponent

    mu_z = np.clip(mu_of_r(sys, np.clip(az, sys.hole_radius, sys.z_halfwidth)), 0.0, 1.0)
    t_torus = 1.0 - mu_z
    in_band = (az >= sys.hole_radius - tol) & (az <= sys.z_halfwidth + tol)
    upper = in_band & (z > 0.0) & (rho >= r_of_t(sys, t_torus) - tol)
    lower = in_band & (z < 0.0) & (rho >= r_of_t(sys, t_torus) / lamn - tol)

    part = np.full(z.shape, PART_CYLINDER, dtype=int)
    part[upper] = PART_UPPER
    part[lower] = PART_LOWER
    t = np.where(upper | lower, t_torus, 0.0)

    cyl = ~(upper | lower)
    valid = np.ones(z.shape, dtype=bool)
    if np.any(cyl):
        zc = z[cyl]
        rc = rho[cyl]
        t_max = np.where(
            np.abs(zc) <= sys.hole_radius,
            1.0,
            1.0 - np.clip(mu_of_r(sys, np.clip(np.abs(zc), sys.hole_radius, sys.z_halfwidth)), 0.0, 1.0),
        )
        f_lo = rtilde(sys, np.zeros_like(zc), zc) - rc
        f_hi = rtilde(sys, t_max, zc) - rc
        ok = (f_lo <= tol) & (f_hi >= -tol) & np.isfinite(rc)
        t_cyl = np.zeros_like(zc)
        if np.any(ok):
            t_cyl[ok] = bisect_vec(
                lambda tt: rtilde(sys, tt, zc[ok]) - rc[ok],
                np.zeros(ok.sum()),
                t_max[ok],
            )
        sub_valid = np.array(ok)
        idx = np.where(cyl)[0]
        t[idx] = np.clip(t_cyl, 0.0, 1.0)
        valid[idx] = sub_valid
    return valid, part, t


def theta_inv(sys, pts):
    """Inverse of the straightening map (straightened shell -> plain shell)."""
    pts = np.asarray(pts, dtype=float)
    valid, part, t = straight_shell_classify(sys, pts)
    if not np.all(valid):
        raise NotInDomain("point outside the straightened shell")
    out = np.array(pts, dtype=float)
    lo = part == PART_LOWER
    if np.any(lo):
        out[lo, :2] = da_power(sys, "A", pts[lo, :2], sys.n_exponent)
    cyl = part == PART_CYLINDER
    if np.any(cyl):
        w, z = split_pts(pts[cyl])
        xi = chart_coords(sys, w)
        ang = np.arctan2(xi[..., 1], xi[..., 0])
        rho = r_of_t(sys, t[cyl])
        out[cyl, :2] = chart_point(sys, rho[..., None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1))
    return out


# ---------------------------------------------------------------------------
# the glued diffeomorphism
# ---------------------------------------------------------------------------


def glue_fwd(sys, pts, validate=True):
    """R-side shell representative -> A-side representative."""
    out = h_map(sys, pts, validate=validate)
    if sys.gluing_kind == "generic_Htilde":
        out = theta_map(sys, out, validate=validate)
    return out


def glue_inv(sys, pts):
    """A-side shell representative -> R-side representative."""
    if sys.gluing_kind == "generic_Htilde":
        pts = theta_inv(sys, pts)
    return h_inv(sys, pts)


def in_glued_shell(sys, pts, tol=None):
    """Membership of A-side coordinates in the glued-image shell."""
    if sys.gluing_kind == "generic_Htilde":
        valid, _, _ = straight_shell_classify(sys, pts, tol)
        return valid
    return in_shell(sys, pts, tol)


def in_A_domain(sys, pts, tol=None):
    """Membership in the A-side region of the glued manifold."""
    return in_deep(sys, pts, tol) | in_glued_shell(sys, pts, tol)


def shell_leaf_A(sys, pts):
    """Leaf parameter of A-side shell points (straightened shell if generic)."""
    if sys.gluing_kind == "generic_Htilde":
        valid, _, t = straight_shell_classify(sys, pts)
        if not np.all(valid):
            raise NotInDomain("point outside the straightened shell")
        return t
    return leaf_of(sys, pts)


@dataclass(frozen=True)
class ManifoldPoint:
    """Chart-side tag plus product coordinates of a point of the glued manifold."""

    side: str
    pts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pts", np.asarray(self.pts, dtype=float).reshape(3))


def _check_A_side(sys, sub, tol):
    """Cheap A-side domain sanity; with the straightened shell the region
    between it and the plain deep part is legitimate, so only the z band is
    enforced there."""
    if sys.gluing_kind == "generic_Htilde":
        ok = np.abs(sub[:, 2]) <= sys.z_halfwidth + tol
    else:
        ok = in_trapping(sys, sub, tol)
    if not np.all(ok):
        raise NotInDomain("A-side point outside its chart domain")


def f_apply_many(sys, sides, pts, inverse=False):
    """Vectorized global diffeomorphism on valid manifold points.

    sides: int array (0 = A, 1 = R).  Transitions between the charts happen
    through the configured gluing; overlap points land canonically on the R
    side.  Points must already be valid representatives (the scalar f_apply
    re-represents stragglers first).
    """
    sides = np.array(sides, dtype=np.int8, copy=True)
    pts = np.array(pts, dtype=float, copy=True)
    tol = sys.tol.eq_tol
    is_r = sides == SIDE_R
    is_a = ~is_r
    if not inverse:
        if np.any(is_r):
            sub = pts[is_r]
            trans = in_shell(sys, sub, tol)
            stay = in_trapping(sys, sub, tol) & ~trans
            if not np.all(trans | stay):
                raise NotInDomain("R-side point outside its chart domain")
            if np.any(trans):
                sub[trans] = phi_apply(sys, "A", glue_fwd(sys, sub[trans]))
            if np.any(stay):
                sub[stay] = phi_apply(sys, "R", sub[stay])
            pts[is_r] = sub
            sides[np.where(is_r)[0][trans]] = SIDE_A
        if np.any(is_a):
            sub = pts[is_a]
            _check_A_side(sys, sub, tol)
            pts[is_a] = phi_apply(sys, "A", sub)
        return sides, pts
    if np.any(is_a):
        sub = pts[is_a]
        new_r = np.zeros(len(sub), dtype=bool)
        trans = in_glued_shell(sys, sub, tol)
        if np.any(trans):
            # overlap point: already identified with an R-side shell point
            sub[trans] = phi_apply(sys, "R", glue_inv(sys, sub[trans]), inverse=True)
            new_r |= trans
        stay = ~trans
        if np.any(stay):
            _check_A_side(sys, sub[stay], tol)
            back = phi_apply(sys, "A", sub[stay], inverse=True)
            # canonicalize: inverse images landing in the overlap move to R
            hit = in_glued_shell(sys, back, tol)
            if np.any(hit):
                back[hit] = glue_inv(sys, back[hit])
            sub[stay] = back
            new_r[np.where(stay)[0][hit]] = True
        pts[is_a] = sub
        sides[np.where(is_a)[0][new_r]] = SIDE_R
    if np.any(is_r):
        sub = pts[is_r]
        if not np.all(in_trapping(sys, sub, tol)):
            raise NotInDomain("R-side point outside its chart domain")
        pts[is_r] = phi_apply(sys, "R", sub, inverse=True)
    return sides, pts


def f_apply(sys, m, direction="fwd"):
    """Global diffeomorphism on a single manifold point.

    Points handed in outside their side's domain are re-represented through
    the equivariant extension of the gluing (bounded number of pull-backs).
    """
    if direction not in ("fwd", "inv"):
        raise ValueError("direction must be 'fwd' or 'inv'")
    side = SIDE_R if m.side == "R" else SIDE_A
    pts = m.pts[None, :]
    try:
        sides, out = f_apply_many(sys, np.array([side]), pts, inverse=direction == "inv")
    except NotInDomain:
        side, pts = _re_represent(sys, side, pts)
        sides, out = f_apply_many(sys, np.array([side]), pts, inverse=direction == "inv")
    return ManifoldPoint("R" if sides[0] == SIDE_R else "A", out[0])


def _re_represent(sys, side, pts):
    """Equivariant re-representation of a point outside its side's domain."""
    tol = sys.tol.eq_tol
    if side == SIDE_R:
        cur = pts
        for k in range(1, _TRANSITION_CAP + 1):
            cur = phi_apply(sys, "R", cur, inverse=True)
            if in_shell(sys, cur, tol)[0]:
                out = glue_fwd(sys, cur)
                for _ in range(k):
                    out = phi_apply(sys, "A", out)
                return SIDE_A, out
        raise IterationBound("R-side point not reachable from the shell")
    cur = pts
    for k in range(1, _TRANSITION_CAP + 1):
        cur = phi_apply(sys, "A", cur)
        if in_glued_shell(sys, cur, tol)[0]:
            out = glue_inv(sys, cur)
            for _ in range(k):
                out = phi_apply(sys, "R", out, inverse=True)
            return SIDE_R, out
    raise IterationBound("A-side point not reachable from the shell")


def orbit(sys, m, n):
    """Orbit [m, f(m), ..., f^n(m)] (inverse iterates for negative n)."""
    if abs(n) > 10 ** 6:
        raise ValueError("orbit length capped at 1e6")
    direction = "fwd" if n >= 0 else "inv"
    out = [m]
    cur = m
    for _ in range(abs(int(n))):
        cur = f_apply(sys, cur, direction)
        out.append(cur)
    return out


def manifold_distance(sys, m1, m2):
    """Distance between manifold points, re-representing across the overlap."""
    reps1 = _all_reps(sys, m1)
    reps2 = _all_reps(sys, m2)
    best = np.inf
    for s1, p1 in reps1:
        for s2, p2 in reps2:
            if s1 != s2:
                continue
            d = p1 - p2
            d[:2] = (d[:2] + 0.5) % 1.0 - 0.5
            best = min(best, float(np.linalg.norm(d)))
    return best


def _all_reps(sys, m):
    reps = [(m.side, np.asarray(m.pts, dtype=float))]
    pts = m.pts[None, :]
    if m.side == "R" and in_shell(sys, pts, sys.tol.eq_tol)[0]:
        reps.append(("A", glue_fwd(sys, pts)[0]))
    elif m.side == "A" and in_glued_shell(sys, pts, sys.tol.eq_tol)[0]:
        reps.append(("R", glue_inv(sys, pts)[0]))
    return reps


# ---------------------------------------------------------------------------
# cloud sampling
# ---------------------------------------------------------------------------


def attractor_sample(sys, grid_density=64, iters=12, n_z=5):
    """Forward images of a uniform trapping-region grid; approximates the attractor."""
    if iters > 100:
        raise ValueError("iters capped at 100")
    pts = grid_on_trapping(sys, grid_density, n_z)
    for _ in range(int(iters)):
        pts = phi_apply(sys, "A", pts)
    return pts


def repeller_sample(sys, grid_density=64, iters=12, n_z=5):
    """Backward images of a uniform trapping-region grid on the R side."""
    if iters > 100:
        raise ValueError("iters capped at 100")
    pts = grid_on_trapping(sys, grid_density, n_z)
    for _ in range(int(iters)):
        pts = phi_apply(sys, "R", pts, inverse=True)
    return pts


def cloud_tree(cloud):
    """KD-tree over a point cloud tiled across torus translates (exact wrap)."""
    shifts = [
        np.array([du, dv, 0.0])
        for du in (-1.0, 0.0, 1.0)
        for dv in (-1.0, 0.0, 1.0)
    ]
    tiled = np.concatenate([cloud + s for s in shifts], axis=0)
    return cKDTree(tiled)


def cloud_distance(tree, pts):
    """Distance from each point to a tiled cloud tree."""
    d, _ = tree.query(np.asarray(pts, dtype=float), k=1)
    return d


def hausdorff(cloud_a, cloud_b):
    """Symmetric Hausdorff distance between clouds under the wrapped metric."""
    ta, tb = cloud_tree(cloud_a), cloud_tree(cloud_b)
    d_ab = cloud_distance(tb, cloud_a).max()
    d_ba = cloud_distance(ta, cloud_b).max()
    return max(float(d_ab), float(d_ba))
