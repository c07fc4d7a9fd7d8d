"""Tangent-plane fields of the contracting/expanding foliations, their
pushforward through the gluing, and transversality / tangency scanning.

Frames are pairs of 3-vectors in local chart coordinates (two torus tangent
components plus the line axis).  The transversality gap between two tangent
planes is the sine of the angle between their unit normals: zero exactly at
a tangency, one for planes meeting at right angles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFrame
from .gluing import glue_fwd
from .product import PART_CYLINDER, PART_LOWER, PART_UPPER, r_of_t, split_pts
from .torus import chart_coords, da_apply, mod1

_WRAP = np.array([True, True, False])


@dataclass(frozen=True)
class TangentFrame:
    """Ordered spanning pair of a tangent plane in chart coordinates."""

    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self):
        e1 = np.asarray(self.e1, dtype=float).reshape(3)
        e2 = np.asarray(self.e2, dtype=float).reshape(3)
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)
        n = np.cross(e1, e2)
        if np.linalg.norm(n) <= 1e-12 * np.linalg.norm(e1) * np.linalg.norm(e2):
            raise DegenerateFrame("spanning vectors are numerically collinear")


def da_jacobian_many(sys, kind, w, h=None, inverse=False):
    """Batched central-difference Jacobians of the surgered torus map."""
    h = sys.tol.fd_step if h is None else h
    w = np.asarray(w, dtype=float)
    cols = []
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        dp = da_apply(sys, kind, mod1(w + e), inverse=inverse)
        dm = da_apply(sys, kind, mod1(w - e), inverse=inverse)
        d = dp - dm
        d = (d + 0.5) % 1.0 - 0.5
        cols.append(d / (2.0 * h))
    return np.stack(cols, axis=-1)


def _refine_direction(sys, kind, w, seed, steps=5, backward=False):
    """Power iteration toward the invariant contracting/expanding direction.

    backward=True pulls a seed vector back along the forward orbit (the
    contracting direction); otherwise a seed is pushed up the backward orbit
    (the expanding direction).
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    orbit = [w]
    for _ in range(steps):
        orbit.append(da_apply(sys, kind, orbit[-1], inverse=not backward))
    v = np.broadcast_to(seed, (n, 2)).copy()
    for j in range(steps, 0, -1):
        base = orbit[j - 1] if backward else orbit[j]
        jac = da_jacobian_many(sys, kind, base)
        if backward:
            # pull back: solve D(map) x = v at the earlier orbit point
            det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
            x = np.empty_like(v)
            x[:, 0] = (jac[:, 1, 1] * v[:, 0] - jac[:, 0, 1] * v[:, 1]) / det
            x[:, 1] = (-jac[:, 1, 0] * v[:, 0] + jac[:, 0, 0] * v[:, 1]) / det
            v = x
        else:
            v = np.einsum("nij,nj->ni", jac, v)
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
    # deterministic orientation
    flip = np.einsum("ni,i->n", v, seed) < 0.0
    v[flip] *= -1.0
    return v


def stable_frame_A(sys, pts, refine=True):
    """Frames spanning the contracting foliation on the A side.

    e1 is the contracting torus direction (refined by power iteration inside
    the chart, where the blend perturbs the map), e2 the line axis.
    """
    pts = np.asarray(pts, dtype=float)
    w, _ = split_pts(pts)
    n = w.shape[0]
    e1 = np.zeros((n, 3))
    e1[:, :2] = sys.v_s
    if refine:
        inside = np.linalg.norm(chart_coords(sys, w), axis=-1) <= 2.0
        if np.any(inside):
            v = _refine_direction(sys, "A", w[inside], sys.v_s, backward=True)
            e1[inside, :2] = v
    e2 = np.zeros((n, 3))
    e2[:, 2] = 1.0
    return e1, e2


def unstable_frame_R(sys, pts, refine=True):
    """Frames spanning the expanding foliation on the R side (mirror image)."""
    pts = np.asarray(pts, dtype=float)
    w, _ = split_pts(pts)
    n = w.shape[0]
    e1 = np.zeros((n, 3))
    e1[:, :2] = sys.v_u
    if refine:
        inside = np.linalg.norm(chart_coords(sys, w), axis=-1) <= 2.0
        if np.any(inside):
            v = _refine_direction(sys, "R", w[inside], sys.v_u, backward=False)
            e1[inside, :2] = v
    e2 = np.zeros((n, 3))
    e2[:, 2] = 1.0
    return e1, e2


def pushforward_many(sys, map_fn, pts, e1, e2, h=None):
    """Push frames through a product-space map by central differences."""
    h = sys.tol.fd_step if h is None else h
    pts = np.asarray(pts, dtype=float)
    cols = []
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        up = np.array(pts) + e
        dn = np.array(pts) - e
        up[:, :2] = mod1(up[:, :2])
        dn[:, :2] = mod1(dn[:, :2])
        d = map_fn(up) - map_fn(dn)
        d[:, :2] = (d[:, :2] + 0.5) % 1.0 - 0.5
        cols.append(d / (2.0 * h))
    jac = np.stack(cols, axis=-1)
    f1 = np.einsum("nij,nj->ni", jac, np.asarray(e1, dtype=float))
    f2 = np.einsum("nij,nj->ni", jac, np.asarray(e2, dtype=float))
    bad = np.linalg.norm(np.cross(f1, f2), axis=-1) <= 1e-12 * np.linalg.norm(
        f1, axis=-1
    ) * np.linalg.norm(f2, axis=-1)
    if np.any(bad):
        raise DegenerateFrame("pushed frame vectors are numerically collinear")
    return f1, f2


def pushforward_frame(sys, map_fn, p, frame):
    """Single-frame convenience wrapper around pushforward_many."""
    f1, f2 = pushforward_many(
        sys, map_fn, np.asarray(p, dtype=float)[None, :], frame.e1[None, :], frame.e2[None, :]
    )
    return TangentFrame(f1[0], f2[0])


def gap_many(a1, a2, b1, b2):
    """Transversality gap between plane pairs: |sin(angle between normals)|."""
    na = np.cross(a1, a2)
    nb = np.cross(b1, b2)
    norm_a = np.linalg.norm(na, axis=-1)
    norm_b = np.linalg.norm(nb, axis=-1)
    if np.any(norm_a <= 0.0) or np.any(norm_b <= 0.0):
        raise DegenerateFrame("degenerate plane in gap computation")
    cross = np.linalg.norm(np.cross(na, nb), axis=-1)
    return np.clip(cross / (norm_a * norm_b), 0.0, 1.0)


def transversality_gap(frame_a, frame_b):
    """Gap between two single frames."""
    return float(
        gap_many(
            frame_a.e1[None, :], frame_a.e2[None, :], frame_b.e1[None, :], frame_b.e2[None, :]
        )[0]
    )


@dataclass
class TransversalityReport:
    """Per-node gap data of one tangency scan."""

    grid: tuple
    tangency_tol: float
    gluing_kind: str
    nodes: np.ndarray       # (N, 3) source coordinates in the R-side shell
    parts: np.ndarray       # (N,) part codes
    leaves: np.ndarray      # (N,) leaf parameter
    images: np.ndarray      # (N, 3) image coordinates on the A side
    image_xy: np.ndarray    # (N, 2) image chart coordinates (nan outside chart)
    gaps: np.ndarray        # (N,) transversality gap per node
    loci: np.ndarray        # (N,) bool: node flagged as tangency locus
    refined_gaps: np.ndarray  # (N,) gap after local refinement (inf where skipped)
    field: dict = field(default_factory=dict)

    @property
    def loci_count(self):
        return int(np.count_nonzero(self.loci))

    def loci_in_band(self, halfwidth):
        """Loci whose image chart |y| is below halfwidth (in-chart only)."""
        y = self.image_xy[:, 1]
        in_chart = np.isfinite(y)
        return int(np.count_nonzero(self.loci & in_chart & (np.abs(y) < halfwidth)))

    def min_gap_in_band(self, halfwidth):
        y = self.image_xy[:, 1]
        sel = np.isfinite(y) & (np.abs(y) < halfwidth)
        pool = np.where(sel, np.minimum(self.gaps, self.refined_gaps), np.inf)
        return float(np.min(pool)) if np.any(sel) else float("inf")


def _scan_nodes(sys, grid):
    """Build scan nodes over the R-side shell: per leaf, two tori grids plus
    one cylinder grid, slightly inset from the part seams."""
    na, nh, nt = grid
    ts = np.linspace(0.0, 1.0, nt)
    nodes, parts, leaves = [], [], []
    uu = (np.arange(na) + 0.31) / na
    vv = (np.arange(nh) + 0.47) / nh
    tor_w = np.stack(np.meshgrid(uu, vv, indexing="ij"), axis=-1).reshape(-1, 2)
    for t in ts:
        r_t = float(r_of_t(sys, t))
        h_t = float(r_of_t(sys, 1.0 - t))
        keep = np.linalg.norm(chart_coords(sys, tor_w), axis=-1) >= r_t * (1.0 + 1e-6)
        w = tor_w[keep]
        for part, sign in ((PART_UPPER, 1.0), (PART_LOWER, -1.0)):
            pts = np.concatenate([w, np.full((len(w), 1), sign * h_t)], axis=-1)
            nodes.append(pts)
            parts.append(np.full(len(w), part))
            leaves.append(np.full(len(w), t))
        ang = 2.0 * np.pi * (np.arange(na) + 0.5) / na
        hh = np.linspace(-h_t, h_t, nh + 2)[1:-1]
        aa, zz = np.meshgrid(ang, hh, indexing="ij")
        xi = r_t * np.stack([np.cos(aa.ravel()), np.sin(aa.ravel())], axis=-1)
        from .torus import chart_point

        cyl = np.concatenate([chart_point(sys, xi), zz.ravel()[:, None]], axis=-1)
        nodes.append(cyl)
        parts.append(np.full(len(cyl), PART_CYLINDER))
        leaves.append(np.full(len(cyl), t))
    return np.concatenate(nodes), np.concatenate(parts), np.concatenate(leaves)


def _gap_at(sys, pts):
    """Gap pipeline: pushforward of the expanding frames through the gluing
    against the contracting frames at the image points.

    Uses the unrefined (exact-invariant) eigendirection frames: the blend
    moves points along the foliation leaves, so the leaf tangents equal the
    eigendirections everywhere; a test pins the refined/unrefined agreement.
    """
    e1, e2 = unstable_frame_R(sys, pts, refine=False)
    imgs = glue_fwd(sys, pts, validate=False)
    f1, f2 = pushforward_many(sys, lambda q: glue_fwd(sys, q, validate=False), pts, e1, e2)
    s1, s2 = stable_frame_A(sys, imgs, refine=False)
    return gap_many(s1, s2, f1, f2), imgs


def tangency_scan(sys, grid=(64, 64, 16), tangency_tol=1e-3, refine=True, threads=None):
    """Scan the shell for tangencies between the contracting foliation and
    the glued image of the expanding foliation.

    Nodes below tangency_tol are loci outright; grid cells around local
    minima are refined by two zoom passes so sheet/curve crossings between
    nodes are still detected.  Counts are reported, never asserted here.
    """
    nodes, parts, leaves = _scan_nodes(sys, grid)
    gaps, imgs = _map_chunked(sys, nodes, threads)
    xi = chart_coords(sys, imgs[:, :2])
    rad = np.linalg.norm(xi, axis=-1)
    image_xy = np.where(rad[:, None] <= 2.0, xi, np.nan)
    loci = gaps < tangency_tol
    refined = np.full(len(nodes), np.inf)
    if refine:
        cand = _local_minima(sys, grid, nodes, parts, leaves, gaps)
        if np.any(cand):
            refined_min = _refine_candidates(sys, grid, nodes[cand], parts[cand], leaves[cand], gaps[cand])
            refined[cand] = refined_min
            loci = loci | (refined < tangency_tol)
    return TransversalityReport(
        grid=tuple(grid),
        tangency_tol=float(tangency_tol),
        gluing_kind=sys.gluing_kind,
        nodes=nodes,
        parts=parts,
        leaves=leaves,
        images=imgs,
        image_xy=image_xy,
        gaps=gaps,
        loci=loci,
        refined_gaps=refined,
    )


def _map_chunked(sys, nodes, threads):
    """Evaluate the gap pipeline, optionally chunked across a thread pool."""
    import os

    if threads is None:
        env = os.environ.get("HYPERDYN_THREADS", "1")
        threads = os.cpu_count() or 1 if env == "0" else max(1, int(env))
    if threads <= 1 or len(nodes) < 4096:
        return _gap_at(sys, nodes)
    from concurrent.futures import ThreadPoolExecutor

    chunks = np.array_split(np.arange(len(nodes)), threads * 4)
    gaps = np.empty(len(nodes))
    imgs = np.empty_like(nodes)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for idx, (g, im) in zip(
            chunks, pool.map(lambda ii: _gap_at(sys, nodes[ii]), chunks)
        ):
            gaps[idx] = g
            imgs[idx] = im
    return gaps, imgs


def _local_minima(sys, grid, nodes, parts, leaves, gaps, gate=0.35):
    """Cheap candidate mask: nodes under the gate whose gap is minimal among
    the nodes of the same part and leaf (coarse pre-filter for refinement)."""
    cand = np.zeros(len(nodes), dtype=bool)
    keys = (parts.astype(np.int64) << 32) ^ np.round(leaves * 1e6).astype(np.int64)
    for key in np.unique(keys):
        sel = np.where(keys == key)[0]
        g = gaps[sel]
        under = g < gate
        if not np.any(under):
            continue
        order = sel[np.argsort(g)]
        cand[order[: max(8, len(sel) // 64)]] = True
        cand[sel[under & (g < 10 * np.min(g) + 1e-9)]] = True
    return cand & (gaps < gate)


_COMPASS = [
    (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0),
    (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0),
]


def _refine_candidates(sys, grid, nodes, parts, leaves, gaps, rounds=30, min_step=5e-4):
    """Compass pattern search of the gap around candidate nodes.

    Each point carries its own step (in units of its part's grid cell);
    a round with no improvement halves the step, so crossings of the
    tangency sets between grid nodes are resolved well below tangency_tol.
    """
    na, nh, _ = grid
    best_pts = np.array(nodes, dtype=float)
    best_gap = np.array(gaps, dtype=float)
    du = np.empty((len(nodes), 2))
    tor = parts != PART_CYLINDER
    du[tor] = [1.0 / na, 1.0 / nh]
    if np.any(~tor):
        h_t = r_of_t(sys, 1.0 - leaves[~tor])
        du[~tor, 0] = 2.0 * np.pi / na
        du[~tor, 1] = 2.0 * h_t / (nh + 1)
    step = np.full(len(nodes), 0.75)
    for _ in range(rounds):
        improved = np.zeros(len(nodes), dtype=bool)
        for da_, db in _COMPASS:
            trial = _offset_nodes(
                sys, best_pts, parts, leaves, du * step[:, None], da_, db
            )
            g, _ = _gap_at(sys, trial)
            better = g < best_gap
            best_pts[better] = trial[better]
            best_gap[better] = g[better]
            improved |= better
        step = np.where(improved, step, 0.5 * step)
        if np.all(step < min_step):
            break
    return best_gap


def _offset_nodes(sys, pts, parts, leaves, du, da_, db):
    """Move nodes inside their own part's surface coordinates."""
    out = np.array(pts, dtype=float)
    tor = parts != PART_CYLINDER
    out[tor, 0] = (out[tor, 0] + da_ * du[tor, 0]) % 1.0
    out[tor, 1] = (out[tor, 1] + db * du[tor, 1]) % 1.0
    cyl = ~tor
    if np.any(cyl):
        xi = chart_coords(sys, out[cyl, :2])
        ang = np.arctan2(xi[:, 1], xi[:, 0]) + da_ * du[cyl, 0]
        rho = r_of_t(sys, leaves[cyl])
        from .torus import chart_point

        out[cyl, :2] = chart_point(
            sys, rho[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        )
        h_t = r_of_t(sys, 1.0 - leaves[cyl])
        out[cyl, 2] = np.clip(out[cyl, 2] + db * du[cyl, 1], -h_t * 0.999, h_t * 0.999)
    return out
