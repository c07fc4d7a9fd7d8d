"""The T^2 x R layer: product dynamics over the surgered torus maps, trapping
membership, and the foliation of the fundamental shell by genus-2 leaves.

Product points are arrays of shape (..., 3) holding (u, v, z): torus
coordinates in [0, 1) plus the real line coordinate.

Region glossary (A side; the R side uses the same sets):
  U      = (T^2 minus the open chart hole of radius lam^-4) x [-lam^-3, lam^-3]
  deep   = image of U under the forward A-side map, i.e.
           (T^2 minus the open chart disk of radius lam^-3) x [-lam^-4, lam^-4]
  shell  = U minus the interior of deep; foliated by leaves G_t, t in [0, 1],
           where G_t consists of two tori-with-hole at heights +-r(1-t)
           (hole radius r(t)) joined by the chart cylinder of radius r(t),
           with r(t) = (lam^-3 - lam^-4) t + lam^-4.
"""

from __future__ import annotations

import numpy as np

from .errors import BadCoords, NotInDomain
from .torus import chart_coords, chart_point, da_apply, mod1

PART_UPPER = 0
PART_LOWER = 1
PART_CYLINDER = 2


def r_of_t(sys, t):
    """Leaf radius r(t) = (lam^-3 - lam^-4) t + lam^-4."""
    return (sys.z_halfwidth - sys.hole_radius) * np.asarray(t, dtype=float) + sys.hole_radius


def mu_of_r(sys, r):
    """Inverse of r_of_t: mu(r) = (lam^4 r - 1) / (lam - 1)."""
    return (sys.lam ** 4 * np.asarray(r, dtype=float) - 1.0) / (sys.lam - 1.0)


def split_pts(pts):
    pts = np.asarray(pts, dtype=float)
    return pts[..., :2], pts[..., 2]


def join_pts(w, z):
    return np.concatenate([np.asarray(w, dtype=float), np.asarray(z, dtype=float)[..., None]], axis=-1)


def phi_apply(sys, side, pts, inverse=False):
    """Product dynamics: side A contracts z by lam, side R expands it."""
    w, z = split_pts(pts)
    if side == "A":
        w2 = da_apply(sys, "A", w, inverse=inverse)
        z2 = z * sys.lam if inverse else z / sys.lam
    elif side == "R":
        w2 = da_apply(sys, "R", w, inverse=inverse)
        z2 = z / sys.lam if inverse else z * sys.lam
    else:
        raise ValueError(f"side must be 'A' or 'R', got {side!r}")
    return join_pts(w2, z2)


def hole_distance(sys, w):
    """Chart radius of w, +inf outside the chart disk (no hole constraint)."""
    r = np.linalg.norm(chart_coords(sys, w), axis=-1)
    return np.where(r <= 2.0, r, np.inf)


def trapping_margin(sys, pts):
    """Signed distance-like margin to the boundary of U: positive inside."""
    w, z = split_pts(pts)
    rho = hole_distance(sys, w)
    return np.minimum(sys.z_halfwidth - np.abs(z), rho - sys.hole_radius)


def in_trapping(sys, pts, tol=None):
    tol = sys.tol.eq_tol if tol is None else tol
    return trapping_margin(sys, pts) >= -tol


def in_deep(sys, pts, tol=None):
    """Membership in the forward image of U (the region past the shell)."""
    tol = sys.tol.eq_tol if tol is None else tol
    w, z = split_pts(pts)
    rho = hole_distance(sys, w)
    return (np.abs(z) <= sys.hole_radius + tol) & (rho >= sys.z_halfwidth - tol)


def in_shell(sys, pts, tol=None):
    """Membership in the fundamental shell K = U minus the interior of deep."""
    tol = sys.tol.eq_tol if tol is None else tol
    w, z = split_pts(pts)
    rho = hole_distance(sys, w)
    az = np.abs(z)
    return (
        (az <= sys.z_halfwidth + tol)
        & (rho >= sys.hole_radius - tol)
        & ((rho <= sys.z_halfwidth + tol) | (az >= sys.hole_radius - tol))
    )


def shell_part(sys, pts, tol=None, raw=False):
    """Classify shell points into (part, t): torus parts or the cylinder.

    Torus parts carry t = 1 - mu(|z|); the cylinder carries t = mu(rho).
    The corner seam rho-mu + z-mu = 1 splits the two regimes.  With raw=True
    the leaf parameter is left unclipped (the formulas extend smoothly past
    the boundary leaves), which finite differencing through the gluing needs.
    """
    tol = sys.tol.eq_tol if tol is None else tol
    w, z = split_pts(pts)
    rho = hole_distance(sys, w)
    az = np.abs(z)
    mu_z = mu_of_r(sys, az)
    mu_rho = mu_of_r(sys, np.where(np.isinf(rho), sys.z_halfwidth, rho))
    if not raw:
        mu_z = np.clip(mu_z, 0.0, 1.0)
        mu_rho = np.clip(mu_rho, 0.0, 1.0)
    torus_like = (rho >= sys.z_halfwidth) | (mu_rho + mu_z >= 1.0)
    # torus parts need |z| in the leaf-height range; below it only the cylinder exists
    torus_like &= az >= sys.hole_radius - tol
    part = np.where(torus_like, np.where(z >= 0.0, PART_UPPER, PART_LOWER), PART_CYLINDER)
    t = np.where(torus_like, 1.0 - mu_z, mu_rho)
    return part, t if raw else np.clip(t, 0.0, 1.0)


def leaf_of(sys, pts, tol=None):
    """Leaf parameter t in [0, 1] of shell points; NotInDomain otherwise."""
    tol = sys.tol.eq_tol if tol is None else tol
    ok = in_shell(sys, pts, tol)
    if not np.all(ok):
        raise NotInDomain("point outside the fundamental shell")
    _, t = shell_part(sys, pts, tol)
    return t


def leaf_point(sys, t, part, coords):
    """Point on leaf G_t from surface coordinates.

    part upper/lower: coords = torus point (u, v), must lie outside the chart
    hole of radius r(t).  part cylinder: coords = (angle, height) with
    |height| <= r(1-t).
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise BadCoords("leaf parameter must lie in [0, 1]")
    coords = np.asarray(coords, dtype=float)
    r_t = float(r_of_t(sys, t))
    h_t = float(r_of_t(sys, 1.0 - t))
    if part in (PART_UPPER, PART_LOWER, "upper", "lower"):
        w = mod1(coords)
        rho = hole_distance(sys, w)
        if np.any(rho < r_t * (1.0 - 1e-12)):
            raise BadCoords("torus coordinate falls inside the leaf hole")
        sign = 1.0 if part in (PART_UPPER, "upper") else -1.0
        z = np.full(w.shape[:-1], sign * h_t)
        return join_pts(w, z)
    if part in (PART_CYLINDER, "cylinder"):
        angle, height = coords[..., 0], coords[..., 1]
        if np.any(np.abs(height) > h_t * (1.0 + 1e-12)):
            raise BadCoords("cylinder height exceeds the leaf half-height")
        xi = r_t * np.stack([np.cos(angle), np.sin(angle)], axis=-1)
        return join_pts(chart_point(sys, xi), np.clip(height, -h_t, h_t))
    raise ValueError(f"unknown leaf part {part!r}")


def sample_leaf(sys, t, n, rng, cylinder_frac=0.2):
    """Random points on leaf G_t, mixing all three parts."""
    n_cyl = int(round(n * cylinder_frac))
    n_tor = n - n_cyl
    n_up = n_tor // 2
    n_lo = n_tor - n_up
    r_t = float(r_of_t(sys, t))
    h_t = float(r_of_t(sys, 1.0 - t))
    out = []
    for part, count in ((PART_UPPER, n_up), (PART_LOWER, n_lo)):
        if count == 0:
            continue
        got = []
        while sum(len(g) for g in got) < count:
            w = rng.uniform(0.0, 1.0, size=(2 * count + 8, 2))
            keep = hole_distance(sys, w) >= r_t * (1.0 + 1e-9)
            got.append(w[keep])
        w = np.concatenate(got)[:count]
        out.append(leaf_point(sys, t, part, w))
    if n_cyl:
        ang = rng.uniform(0.0, 2.0 * np.pi, size=n_cyl)
        h = rng.uniform(-h_t, h_t, size=n_cyl)
        out.append(leaf_point(sys, t, PART_CYLINDER, np.stack([ang, h], axis=-1)))
    return np.concatenate(out, axis=0)


def sample_trapping_boundary(sys, n, rng):
    """Random points on the boundary of U (outer tori plus the hole cylinder)."""
    n_cyl = max(1, n // 10)
    n_tor = n - n_cyl
    n_up = n_tor // 2
    pieces = []
    for sign, count in ((1.0, n_up), (-1.0, n_tor - n_up)):
        got = []
        while sum(len(g) for g in got) < count:
            w = rng.uniform(0.0, 1.0, size=(2 * count + 8, 2))
            keep = hole_distance(sys, w) >= sys.hole_radius * (1.0 + 1e-9)
            got.append(w[keep])
        w = np.concatenate(got)[:count]
        pieces.append(join_pts(w, np.full(count, sign * sys.z_halfwidth)))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n_cyl)
    z = rng.uniform(-sys.z_halfwidth, sys.z_halfwidth, size=n_cyl)
    xi = sys.hole_radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    pieces.append(join_pts(chart_point(sys, xi), z))
    return np.concatenate(pieces, axis=0)


def grid_on_trapping(sys, density, n_z):
    """Uniform (u, v, z) grid restricted to U; z includes the endpoints."""
    u = np.arange(density) / density
    zz = np.linspace(-sys.z_halfwidth, sys.z_halfwidth, n_z)
    uu, vv, z = np.meshgrid(u, u, zz, indexing="ij")
    pts = np.stack([uu.ravel(), vv.ravel(), z.ravel()], axis=-1)
    keep = hole_distance(sys, pts[:, :2]) >= sys.hole_radius
    return pts[keep]
