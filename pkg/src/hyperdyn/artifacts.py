"""Artifact assembly: CSV rows and raster fields for every run kind."""

from __future__ import annotations

import numpy as np

from . import energy as en
from . import foliation as fo
from . import gluing as gl
from . import product as pr

CLOUD_HEADER = ("side", "u", "v", "z", "leaf_t")


def _leaf_or_none(sys, side, pts):
    out = np.full(len(pts), np.nan)
    try:
        if side == "R":
            mask = pr.in_shell(sys, pts, sys.tol.eq_tol)
            if np.any(mask):
                out[mask] = pr.leaf_of(sys, pts[mask])
        else:
            mask = gl.in_glued_shell(sys, pts, sys.tol.eq_tol)
            if np.any(mask):
                out[mask] = gl.shell_leaf_A(sys, pts[mask])
    except Exception:
        pass
    return out


def orbit_rows(sys, start_side, start_point, steps):
    """Orbit rows: side, coordinates, and leaf parameter when on the shell."""
    m = gl.ManifoldPoint(start_side, np.asarray(start_point, dtype=float))
    orb = gl.orbit(sys, m, steps)
    rows = []
    for p in orb:
        leaf = _leaf_or_none(sys, p.side, p.pts[None, :])[0]
        rows.append((p.side, p.pts[0], p.pts[1], p.pts[2], None if np.isnan(leaf) else leaf))
    return rows


def cloud_rows(sys, side, pts):
    leafs = _leaf_or_none(sys, side, pts)
    return [
        (side, p[0], p[1], p[2], None if np.isnan(lf) else lf)
        for p, lf in zip(pts, leafs)
    ]


def density_field(pts, bins=128):
    """Normalized 2D histogram of the cloud over the torus coordinates."""
    h, _, _ = np.histogram2d(
        pts[:, 0] % 1.0, pts[:, 1] % 1.0, bins=bins, range=[[0.0, 1.0], [0.0, 1.0]]
    )
    peak = h.max()
    return h / peak if peak > 0 else h


def attractor_artifacts(sys, grid_density, iters, n_z=5):
    cloud = gl.attractor_sample(sys, grid_density, iters, n_z)
    rows = cloud_rows(sys, "A", cloud)
    field = density_field(cloud)
    stats = {
        "points": int(len(cloud)),
        "z_extent": float(np.max(np.abs(cloud[:, 2]))) if len(cloud) else 0.0,
        "min_margin": float(np.min(pr.trapping_margin(sys, cloud))),
    }
    return cloud, rows, field, stats


TANGENCY_HEADER = ("u", "v", "z", "part", "leaf_t", "image_x", "image_y", "gap", "locus")


def tangency_artifacts(sys, grid, tol, threads=None):
    rep = fo.tangency_scan(sys, grid=grid, tangency_tol=tol, threads=threads)
    rows = [
        (
            n[0],
            n[1],
            n[2],
            int(p),
            lf,
            None if np.isnan(xy[0]) else xy[0],
            None if np.isnan(xy[1]) else xy[1],
            g,
            int(l),
        )
        for n, p, lf, xy, g, l in zip(
            rep.nodes, rep.parts, rep.leaves, rep.image_xy, rep.gaps, rep.loci
        )
    ]
    # min-gap heat map projected to the torus coordinates of the image points
    bins = max(grid[0], 64)
    field = np.full((bins, bins), 0.5)
    iu = np.minimum((rep.images[:, 0] % 1.0 * bins).astype(int), bins - 1)
    iv = np.minimum((rep.images[:, 1] % 1.0 * bins).astype(int), bins - 1)
    np.minimum.at(field, (iu, iv), rep.gaps)
    band = sys.z_halfwidth / 2.0
    stats = {
        "nodes": int(len(rep.nodes)),
        "loci": rep.loci_count,
        "loci_in_band": rep.loci_in_band(band),
        "band_halfwidth": float(band),
        "min_gap": float(np.min(rep.gaps)),
        "min_refined_gap": float(np.min(rep.refined_gaps)),
        "min_gap_in_band": rep.min_gap_in_band(band),
    }
    return rep, rows, field, stats


def gamma_rows(gamma):
    return [
        (c, a, b, g_raw, g)
        for c, a, b, g_raw, g in zip(
            gamma.c, gamma.alpha, gamma.beta, gamma.gamma_raw, gamma.gamma
        )
    ]


GAMMA_HEADER = ("c", "alpha", "beta", "gamma_raw", "gamma")
G_HEADER = ("c", "g", "dg")


def g_rows(gfun, count=600):
    cs = np.concatenate([[0.0], np.exp(np.linspace(np.log(2.0 ** -40), 0.0, count - 1))])
    gs = en.g_eval(gfun, cs)
    dgs = en.g_eval(gfun, cs, order=1)
    return [(c, g, dg) for c, g, dg in zip(cs, gs, dgs)]


MARGIN_HEADER = ("side", "u", "v", "z", "psi", "psi_next", "margin")


def energy_margin_rows(ctx, budget, rng):
    sys = ctx.sys
    sides, pts = en.wandering_samples(sys, budget, rng)
    psi0 = en.psi_many(ctx, sides, pts)
    sides1, pts1 = gl.f_apply_many(sys, sides, pts)
    psi1 = en.psi_many(ctx, sides1, pts1)
    rows = [
        ("R" if s == gl.SIDE_R else "A", p[0], p[1], p[2], a, b, b - a)
        for s, p, a, b in zip(sides, pts, psi0, psi1)
    ]
    return rows
