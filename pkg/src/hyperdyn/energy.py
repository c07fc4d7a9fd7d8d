"""Lyapunov function on the glued manifold and its smoothing into an energy
function.

The wandering set is foliated by copies of the shell leaves; each point gets
a global coordinate t = n + s (n = signed count of steps to the shell, s =
leaf parameter there), strictly increasing toward the attractor.  The
continuous Lyapunov function is phi = 1/2 - arctan(t)/pi, and the energy
function is psi = g(phi) with g the C^2 reparametrization built from a
partition of unity whose coefficients are bounded by the gamma-profile
alpha/beta (squared set distance over gradient bound).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.isotonic import IsotonicRegression

from .errors import InsufficientSamples, NegativeEps3, NonWandering
from .gluing import (
    SIDE_A,
    SIDE_R,
    attractor_sample,
    cloud_distance,
    cloud_tree,
    f_apply_many,
    glue_inv,
    in_glued_shell,
    repeller_sample,
    shell_leaf_A,
    theta_map,
)
from .numerics import integrate
from .product import in_deep, in_shell, leaf_of, phi_apply, sample_leaf
from .gluing import tau

I_MAX = 40
WALK_CAP = 200
STATUS_OK = 0
STATUS_NEAR_A = 1
STATUS_NEAR_R = 2


# ---------------------------------------------------------------------------
# wandering coordinate and the continuous Lyapunov function
# ---------------------------------------------------------------------------


def _shell_value(sys, sides, pts):
    """Leaf parameter s of points currently on the shell (nan elsewhere)."""
    s = np.full(len(pts), np.nan)
    r_mask = sides == SIDE_R
    if np.any(r_mask):
        sub = pts[r_mask]
        ok = in_shell(sys, sub, sys.tol.eq_tol)
        if np.any(ok):
            vals = tau(sys, leaf_of(sys, sub[ok]))
            tmp = np.full(len(sub), np.nan)
            tmp[ok] = vals
            s[r_mask] = tmp
    a_mask = ~r_mask
    if np.any(a_mask):
        sub = pts[a_mask]
        ok = in_glued_shell(sys, sub, sys.tol.eq_tol)
        if np.any(ok):
            vals = shell_leaf_A(sys, sub[ok])
            tmp = np.full(len(sub), np.nan)
            tmp[ok] = vals
            s[a_mask] = tmp
    return s


def wandering_time(sys, sides, pts, cap=WALK_CAP):
    """Global wandering coordinate t = s - (applied f power) per point.

    Returns (t, status): status NEAR_A marks points whose backward walk never
    left the deep attractor region, NEAR_R the forward analogue; their t is
    +inf / -inf respectively.
    """
    sides = np.array(sides, dtype=np.int8).reshape(-1)
    pts = np.array(pts, dtype=float).reshape(-1, 3)
    n = len(pts)
    t_out = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)
    steps = np.zeros(n, dtype=np.int64)

    s0 = _shell_value(sys, sides, pts)
    done = ~np.isnan(s0)
    t_out[done] = s0[done]

    # backward walkers: A-side points past the shell (plain deep region is
    # inside the straightened-shell deep region as well)
    back = ~done & (sides == SIDE_A) & in_deep(sys, pts, sys.tol.eq_tol)
    fwd = ~done & ~back

    cur = pts.copy()
    j = np.zeros(n, dtype=np.int64)
    active = back.copy()
    for _ in range(cap):
        if not np.any(active):
            break
        sub = cur[active]
        sub = phi_apply(sys, "A", sub, inverse=True)
        cur[active] = sub
        j[active] -= 1
        hit = in_glued_shell(sys, sub, sys.tol.eq_tol)
        overshoot = np.abs(sub[:, 2]) > sys.z_halfwidth + sys.tol.eq_tol
        idx = np.where(active)[0]
        if np.any(hit):
            hi = idx[hit]
            t_out[hi] = shell_leaf_A(sys, sub[hit]) - j[hi]
            done[hi] = True
            active[hi] = False
        bad = idx[overshoot & ~hit]
        if len(bad):
            # walked the wrong way: these were in front of the shell after all
            fwd[bad] = True
            cur[bad] = pts[bad]
            j[bad] = 0
            active[bad] = False
    still = np.where(back & ~done & ~fwd & (np.abs(j) >= cap))[0]
    status[still] = STATUS_NEAR_A
    t_out[still] = np.inf

    # forward walkers: R-side deep points and A-side points in front of the
    # shell (large |z| or the chart hole); the latter walk in pure A-chart
    # coordinates, which is the smooth continuation of the manifold charts.
    cur_side = sides.copy()
    active = fwd.copy()
    for _ in range(cap):
        if not np.any(active):
            break
        idx = np.where(active)[0]
        sub = cur[idx]
        sd = cur_side[idx]
        r_m = sd == SIDE_R
        if np.any(r_m):
            rsub = sub[r_m]
            on_shell = in_shell(sys, rsub, sys.tol.eq_tol)
            if np.any(on_shell):
                ri = idx[r_m][on_shell]
                t_out[ri] = tau(sys, leaf_of(sys, rsub[on_shell])) - j[ri]
                done[ri] = True
                active[ri] = False
            move = idx[r_m][~on_shell]
            if len(move):
                cur[move] = phi_apply(sys, "R", cur[move])
                j[move] += 1
        a_m = ~r_m
        if np.any(a_m):
            asub = sub[a_m]
            on_shell = in_glued_shell(sys, asub, sys.tol.eq_tol)
            if np.any(on_shell):
                ai = idx[a_m][on_shell]
                t_out[ai] = shell_leaf_A(sys, asub[on_shell]) - j[ai]
                done[ai] = True
                active[ai] = False
            move = idx[a_m][~on_shell]
            if len(move):
                cur[move] = phi_apply(sys, "A", cur[move])
                j[move] += 1
    still = np.where(fwd & ~done)[0]
    status[still] = STATUS_NEAR_R
    t_out[still] = -np.inf
    return t_out, status


@dataclass(frozen=True)
class LeafCoordinate:
    """Wandering coordinate: shell entry count n, leaf parameter s, t = n + s."""

    n: int
    s: float
    t: float


def leaf_coordinate(sys, m):
    """Wandering coordinate of a single manifold point; NonWandering if the
    walk caps out (the point sits numerically on the attractor/repeller)."""
    side = SIDE_R if m.side == "R" else SIDE_A
    t, status = wandering_time(sys, np.array([side]), m.pts[None, :])
    if status[0] != STATUS_OK:
        raise NonWandering("point did not reach the fundamental shell")
    t = float(t[0])
    n = int(np.floor(t + 0.5)) if abs(t - round(t)) < 1e-9 else int(np.floor(t))
    s = t - n
    return LeafCoordinate(n=n, s=s, t=t)


def phi_of_t(sys, t):
    """Continuous Lyapunov value of a wandering coordinate array."""
    t = np.asarray(t, dtype=float)
    if sys.phi_orientation == "paper":
        out = np.arctan(t) / np.pi + 0.5
        out = np.where(np.isposinf(t), 1.0, out)
        out = np.where(np.isneginf(t), 0.0, out)
    else:
        out = 0.5 - np.arctan(t) / np.pi
        out = np.where(np.isposinf(t), 0.0, out)
        out = np.where(np.isneginf(t), 1.0, out)
    return out


def lyapunov_phi(sys, m):
    """phi at a single manifold point (0 on the attractor, 1 on the repeller)."""
    side = SIDE_R if m.side == "R" else SIDE_A
    t, status = wandering_time(sys, np.array([side]), m.pts[None, :])
    return float(phi_of_t(sys, t)[0])


def phi_many(sys, sides, pts):
    t, _ = wandering_time(sys, sides, pts)
    return phi_of_t(sys, t)


# ---------------------------------------------------------------------------
# gamma profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaProfile:
    """Sampled bound alpha/beta for the reparametrization growth."""

    c: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma_raw: np.ndarray
    gamma: np.ndarray

    def gamma_at(self, c):
        c = np.asarray(c, dtype=float)
        lo = self.c[0]
        return np.interp(np.maximum(c, lo), self.c, self.gamma)


def default_c_grid():
    """Dyadic grid 2^-I_MAX .. 1/2 plus mirrored repeller-side levels."""
    dyadic = 0.5 ** np.arange(1, I_MAX + 1)
    upper = 1.0 - 0.5 ** np.arange(1, 21)
    grid = np.unique(np.concatenate([dyadic, [0.75], upper]))
    return np.sort(grid)


def t_of_phi(sys, c):
    """Inverse of phi_of_t for the default (decreasing) orientation."""
    c = np.asarray(c, dtype=float)
    return np.tan(np.pi * (0.5 - c))


def level_set_samples(sys, t_level, count, rng, depth_cap=60):
    """Sample points with wandering coordinate t_level.

    Returns (sides, pts).  Shell-leaf samples are pushed by the appropriate
    power of the dynamics; depths past depth_cap are indistinguishable in
    double precision (the transverse coordinate underflows) and are clamped.
    """
    n = int(np.floor(t_level))
    s = float(t_level - n)
    base = sample_leaf(sys, s, count, rng)
    if sys.gluing_kind == "generic_Htilde":
        base = theta_map(sys, base)
    if n >= 0:
        out = base
        for _ in range(min(n, depth_cap)):
            out = phi_apply(sys, "A", out)
        return np.full(len(out), SIDE_A, dtype=np.int8), out
    out = glue_inv(sys, base)
    for _ in range(min(-n, depth_cap) - 1):
        out = phi_apply(sys, "R", out, inverse=True)
    return np.full(len(out), SIDE_R, dtype=np.int8), out


def _grad_phi_mag(sys, sides, pts, h=None):
    """Finite-difference gradient magnitude of phi in each point's own chart."""
    h = sys.tol.fd_step if h is None else h
    grads = np.zeros((len(pts), 3))
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        up = pts + e
        dn = pts - e
        up[:, :2] %= 1.0
        dn[:, :2] %= 1.0
        pu = phi_many(sys, sides, up)
        pd = phi_many(sys, sides, dn)
        grads[:, axis] = (pu - pd) / (2.0 * h)
    return np.linalg.norm(grads, axis=-1)


def estimate_gamma(
    sys,
    attractor_cloud=None,
    repeller_cloud=None,
    c_grid=None,
    budget=4000,
    rng=None,
):
    """Estimate the gamma profile from level-set samples and cloud distances.

    alpha(c): squared distance from the phi-level set to the sampled
    non-wandering clouds, clamped at 1.  beta(c): max(1, max |grad phi|)
    over the region phi >= c.  gamma = alpha/beta, made non-decreasing by
    isotonic regression.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if attractor_cloud is None:
        attractor_cloud = attractor_sample(sys, 96, 30)
    if repeller_cloud is None:
        repeller_cloud = repeller_sample(sys, 96, 30)
    c_grid = default_c_grid() if c_grid is None else np.sort(np.asarray(c_grid, dtype=float))
    per_level = max(24, budget // max(1, len(c_grid)))
    if per_level < 8:
        raise InsufficientSamples("budget too small for the level grid")
    tree_a = cloud_tree(attractor_cloud)
    tree_r = cloud_tree(repeller_cloud)

    alpha = np.empty(len(c_grid))
    grad_max = np.zeros(len(c_grid))
    for i, c in enumerate(c_grid):
        t_level = float(t_of_phi(sys, c))
        sides, pts = level_set_samples(sys, t_level, per_level, rng)
        tree = tree_a if sides[0] == SIDE_A else tree_r
        d = cloud_distance(tree, pts)
        alpha[i] = min(1.0, float(np.min(d)) ** 2)
        # |grad phi| <= |grad t| / (pi (1 + t^2)); beta has floor 1, so deep
        # levels cannot contribute and are skipped
        if 1.0 + t_level ** 2 <= 256.0:
            sub = slice(0, max(8, per_level // 4))
            grad_max[i] = float(np.max(_grad_phi_mag(sys, sides[sub], pts[sub])))
    # beta(c) covers the whole region phi >= c: running max from the top
    beta = np.maximum(1.0, np.maximum.accumulate(grad_max[::-1])[::-1])
    gamma_raw = np.maximum(alpha, 1e-24) / beta
    iso = IsotonicRegression(increasing=True)
    gamma = iso.fit_transform(c_grid, gamma_raw)
    gamma = np.maximum(gamma, np.min(gamma_raw))
    return GammaProfile(c=c_grid, alpha=alpha, beta=beta, gamma_raw=gamma_raw, gamma=gamma)


# ---------------------------------------------------------------------------
# partition of unity and the reparametrization g
# ---------------------------------------------------------------------------


def _bump(i, x):
    """Even-index partition bump on (2^-i, 2^-(i-2)), equal to 1 at 2^-(i-1)."""
    lo, mid, hi = 0.5 ** i, 0.5 ** (i - 1), 0.5 ** (i - 2)
    out = np.zeros_like(x)
    m = (x > lo) & (x < hi)
    if np.any(m):
        xm = x[m]
        q = (xm - mid) ** 4 / ((xm - lo) * (xm - hi))
        out[m] = np.exp(np.clip(q, -745.0, 0.0))
    return out


def sigma_partition(i, x):
    """Member i >= 1 of the dyadic partition of unity on (0, 1]."""
    if i < 1:
        raise ValueError("partition index starts at 1")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if i == 1:
        out = np.zeros_like(x)
        m = (x > 0.5) & (x <= 1.0)
        out[m] = 1.0 - _bump(2, x[m])
    elif i % 2 == 0:
        out = _bump(i, x)
    else:
        out = np.zeros_like(x)
        m_hi = (x >= 0.5 ** (i - 1)) & (x < 0.5 ** (i - 2))
        m_lo = (x > 0.5 ** i) & (x < 0.5 ** (i - 1))
        out[m_hi] = 1.0 - _bump(i - 1, x[m_hi])
        out[m_lo] = 1.0 - _bump(i + 1, x[m_lo])
    return float(out[0]) if scalar else out


def partition_sum(x, i_max=I_MAX):
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for i in range(1, i_max + 1):
        total = total + sigma_partition(i, x)
    return total


@dataclass(frozen=True)
class SmoothingFunction:
    """Truncated coefficient sequence and quadrature table of g."""

    epsilons: np.ndarray       # index 0 unused; epsilons[i] pairs sigma_i
    nodes: np.ndarray          # ascending grid on (0, 1]
    cumulative: np.ndarray     # g at the nodes
    quad_tol: float

    def derivative(self, x):
        """g' = S, the weighted partition sum (exact by construction)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        for i in range(1, len(self.epsilons)):
            eps = self.epsilons[i]
            if eps != 0.0:
                out = out + eps * sigma_partition(i, x)
        return float(out[0]) if scalar else out


def s_eval(gfun, x):
    return gfun.derivative(x)


def _simpson_table(fn, a, b, n_sub):
    """Composite-Simpson cumulative integral table on [a, b]."""
    xs = np.linspace(a, b, 2 * n_sub + 1)
    ys = fn(xs)
    h = (b - a) / n_sub
    chunks = h / 6.0 * (ys[0:-1:2] + 4.0 * ys[1::2] + ys[2::2])
    return xs[::2], np.concatenate([[0.0], np.cumsum(chunks)])


def build_g(profile, quad_tol=1e-8):
    """Assemble the C^2 reparametrization from a gamma profile.

    Coefficients: eps_1 = eps_2 = 1, eps_i = gamma(2^-i) for i >= 4, and
    eps_3 chosen so the integral of the derivative over (0, 1/2] is exactly
    1/2, which splices g onto the identity above 1/2.
    """
    eps = np.zeros(I_MAX + 1)
    eps[1] = eps[2] = 1.0
    for i in range(4, I_MAX + 1):
        eps[i] = float(profile.gamma_at(0.5 ** i))
    if np.any(eps[4:] <= 0.0):
        raise InsufficientSamples("gamma profile vanishes on the dyadic grid")

    def sigma0(x):
        out = np.zeros_like(x)
        for i in range(4, I_MAX + 1):
            out = out + eps[i] * sigma_partition(i, x)
        return out

    # the normalization integrals use the same composite quadrature as the
    # table below, so the splice at 1/2 is consistent by construction
    def dyadic_integral(fn, i_lo, i_hi, n_sub=2048):
        total = 0.0
        for i in range(i_lo, i_hi + 1):
            _, cs = _simpson_table(fn, 0.5 ** i, 0.5 ** (i - 1), n_sub)
            total += cs[-1]
        return total

    int_sigma0 = dyadic_integral(sigma0, 3, I_MAX)
    int_sigma2 = dyadic_integral(lambda x: sigma_partition(2, x), 2, 2)
    int_sigma3 = dyadic_integral(lambda x: sigma_partition(3, x), 2, 3)
    eps3 = (0.5 - int_sigma0 - int_sigma2) / int_sigma3
    if eps3 <= 0.0:
        raise NegativeEps3(f"normalization coefficient {eps3:.3e} <= 0")
    eps[3] = eps3

    stub = SmoothingFunction(epsilons=eps, nodes=np.array([0.0, 1.0]), cumulative=np.zeros(2), quad_tol=quad_tol)
    nodes = [np.array([0.5 ** I_MAX])]
    cums = [np.array([0.0])]
    total = 0.0
    # 2048 panels per dyadic interval resolve the exponential boundary
    # layers of the bumps to ~1e-14 relative accuracy
    for i in range(I_MAX, 0, -1):
        a, b = 0.5 ** i, 0.5 ** (i - 1)
        xs, cs = _simpson_table(stub.derivative, a, b, 2048)
        nodes.append(xs[1:])
        cums.append(total + cs[1:])
        total += cs[-1]
    nodes = np.concatenate(nodes)
    cums = np.concatenate(cums)
    # splice exactness: the normalization makes g(1/2) = 1/2 up to quadrature
    i_half = int(np.searchsorted(nodes, 0.5))
    drift = abs(cums[i_half] - 0.5)
    if drift > 50.0 * quad_tol:
        raise NegativeEps3(f"normalization drift {drift:.2e} exceeds tolerance")
    return SmoothingFunction(epsilons=eps, nodes=nodes, cumulative=cums, quad_tol=quad_tol)


def g_eval(gfun, c, order=0):
    """Evaluate g (order 0) or its derivative S (order 1) at c in [0, 1]."""
    c = np.asarray(c, dtype=float)
    scalar = c.ndim == 0
    c = np.atleast_1d(c)
    if np.any((c < -1e-12) | (c > 1.0 + 1e-12)):
        raise ValueError("g is defined on [0, 1]")
    c = np.clip(c, 0.0, 1.0)
    if order == 1:
        out = gfun.derivative(c)
        return float(np.atleast_1d(out)[0]) if scalar else out
    out = np.zeros_like(c)
    lo = gfun.nodes[0]
    live = c > lo
    if np.any(live):
        cc = c[live]
        idx = np.searchsorted(gfun.nodes, cc, side="right") - 1
        idx = np.clip(idx, 0, len(gfun.nodes) - 1)
        x0 = gfun.nodes[idx]
        base = gfun.cumulative[idx]
        # local Simpson correction from the nearest node below
        mid = 0.5 * (x0 + cc)
        corr = (cc - x0) / 6.0 * (
            gfun.derivative(x0) + 4.0 * gfun.derivative(mid) + gfun.derivative(cc)
        )
        out[live] = base + corr
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# the energy function and its certification
# ---------------------------------------------------------------------------


@dataclass
class EnergyContext:
    """Clouds, trees, gamma profile, and smoothing function of one system."""

    sys: object
    attractor_cloud: np.ndarray
    repeller_cloud: np.ndarray
    attractor_tree: object
    repeller_tree: object
    gamma: GammaProfile
    gfun: SmoothingFunction
    detect_tol: float = 1e-6


def build_energy(sys, rng=None, cloud_density=96, cloud_iters=30, budget=4000):
    """Assemble clouds, gamma profile, and the smoothing function."""
    rng = np.random.default_rng(0) if rng is None else rng
    a_cloud = attractor_sample(sys, cloud_density, cloud_iters)
    r_cloud = repeller_sample(sys, cloud_density, cloud_iters)
    gamma = estimate_gamma(sys, a_cloud, r_cloud, budget=budget, rng=rng)
    gfun = build_g(gamma, quad_tol=sys.tol.quad_tol)
    return EnergyContext(
        sys=sys,
        attractor_cloud=a_cloud,
        repeller_cloud=r_cloud,
        attractor_tree=cloud_tree(a_cloud),
        repeller_tree=cloud_tree(r_cloud),
        gamma=gamma,
        gfun=gfun,
    )


def psi_many(ctx, sides, pts):
    """Energy values: g(phi), with cloud-proximity detection pinning the
    non-wandering values exactly to 0 (attractor) and 1 (repeller)."""
    sys = ctx.sys
    sides = np.asarray(sides, dtype=np.int8).reshape(-1)
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    out = np.empty(len(pts))
    on_a = np.zeros(len(pts), dtype=bool)
    on_r = np.zeros(len(pts), dtype=bool)
    a_m = sides == SIDE_A
    if np.any(a_m):
        d = cloud_distance(ctx.attractor_tree, pts[a_m])
        on_a[np.where(a_m)[0][d < ctx.detect_tol]] = True
    r_m = ~a_m
    if np.any(r_m):
        d = cloud_distance(ctx.repeller_tree, pts[r_m])
        on_r[np.where(r_m)[0][d < ctx.detect_tol]] = True
    live = ~(on_a | on_r)
    if np.any(live):
        t, status = wandering_time(sys, sides[live], pts[live])
        phi = phi_of_t(sys, t)
        out[live] = g_eval(ctx.gfun, phi)
        li = np.where(live)[0]
        out[li[status == STATUS_NEAR_A]] = 0.0
        out[li[status == STATUS_NEAR_R]] = 1.0
    out[on_a] = 0.0
    out[on_r] = 1.0
    return out


def energy_psi(ctx, m):
    """Energy value at a single manifold point."""
    side = SIDE_R if m.side == "R" else SIDE_A
    return float(psi_many(ctx, np.array([side]), m.pts[None, :])[0])


def wandering_samples(sys, count, rng, depth=8):
    """Random wandering manifold points spread over shells [-depth, depth]."""
    per = max(1, count // (2 * depth + 1))
    sides_all, pts_all = [], []
    for n in range(-depth, depth + 1):
        s = float(rng.uniform(0.02, 0.98))
        sides, pts = level_set_samples(sys, n + s, per, rng)
        sides_all.append(sides)
        pts_all.append(pts)
    return np.concatenate(sides_all), np.concatenate(pts_all)


@dataclass
class EnergyReport:
    """Certification summary of one energy function."""

    samples: int
    decrease_violations: int
    worst_margin: float          # max of psi(f(m)) - psi(m); certified < 0
    grad_distances: tuple
    grad_magnitudes: tuple
    grad_decreasing: bool
    g_identity_max_err: float    # max |g(c) - c| on [1/2, 1]
    g_below_gamma: bool
    dg_below_gamma: bool
    s_min: float                 # min of S on (0, 1) samples
    partition_max_err: float
    psi_cloud_variance: float
    min_on_attractor: bool
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(
            self.decrease_violations == 0
            and self.worst_margin < 0.0
            and self.grad_decreasing
            and self.g_identity_max_err < 1e-6
            and self.g_below_gamma
            and self.dg_below_gamma
            and self.s_min >= 0.0
            and self.partition_max_err < 1e-12
            and self.psi_cloud_variance < 1e-8
            and self.min_on_attractor
        )

    def lines(self):
        yield f"samples:            {self.samples}"
        yield f"decrease violations: {self.decrease_violations}"
        yield f"worst decrease margin (must be < 0): {self.worst_margin:.3e}"
        yield (
            "grad |psi| at distances "
            + ", ".join(f"{d:g}" for d in self.grad_distances)
            + ": "
            + ", ".join(f"{g:.3e}" for g in self.grad_magnitudes)
            + (" (decreasing)" if self.grad_decreasing else " (NOT decreasing)")
        )
        yield f"max |g(c) - c| on [1/2, 1]: {self.g_identity_max_err:.3e}"
        yield f"g <= gamma on (0, 1/8): {self.g_below_gamma}"
        yield f"g' <= gamma on (0, 1/8): {self.dg_below_gamma}"
        yield f"min S on (0, 1) samples: {self.s_min:.3e}"
        yield f"max |partition sum - 1|: {self.partition_max_err:.3e}"
        yield f"psi variance on attractor cloud: {self.psi_cloud_variance:.3e}"
        yield f"psi minimal on attractor cloud: {self.min_on_attractor}"
        yield f"overall: {'OK' if self.passed else 'FAILED'}"

    def to_text(self):
        return "\n".join(self.lines()) + "\n"


def grad_psi_mag(ctx, pts, h=None):
    """|grad psi| by central differences in A-chart coordinates."""
    sys = ctx.sys
    h = sys.tol.fd_step if h is None else h
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    sides = np.full(len(pts), SIDE_A, dtype=np.int8)
    grads = np.zeros((len(pts), 3))
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        up = pts + e
        dn = pts - e
        up[:, :2] %= 1.0
        dn[:, :2] %= 1.0
        grads[:, axis] = (psi_many(ctx, sides, up) - psi_many(ctx, sides, dn)) / (2.0 * h)
    return np.linalg.norm(grads, axis=-1)


def verify_energy(ctx, budget=10000, rng=None, grad_distances=(0.1, 0.01, 0.001)):
    """Run the full certification battery and return an EnergyReport."""
    sys = ctx.sys
    rng = np.random.default_rng(0) if rng is None else rng

    sides, pts = wandering_samples(sys, budget, rng)
    psi0 = psi_many(ctx, sides, pts)
    sides1, pts1 = f_apply_many(sys, sides, pts)
    psi1 = psi_many(ctx, sides1, pts1)
    margins = psi1 - psi0
    violations = int(np.count_nonzero(margins >= 0.0))
    worst = float(np.max(margins))

    # smoothness certificate: |grad psi| at controlled distances from the
    # attractor cloud, built by offsetting cloud points along the line axis
    base = ctx.attractor_cloud[
        rng.choice(len(ctx.attractor_cloud), size=48, replace=False)
    ]
    mags = []
    for d in grad_distances:
        probe = np.array(base)
        probe[:, 2] = d
        mags.append(float(np.mean(grad_psi_mag(ctx, probe))))
    grad_ok = all(mags[i] > mags[i + 1] for i in range(len(mags) - 1))

    cs = np.linspace(0.5, 1.0, 251)
    g_id_err = float(np.max(np.abs(g_eval(ctx.gfun, cs) - cs)))
    c_lo = np.exp(rng.uniform(np.log(2.0 ** -39), np.log(0.125 - 1e-9), 400))
    g_lo = g_eval(ctx.gfun, c_lo)
    dg_lo = g_eval(ctx.gfun, c_lo, order=1)
    gam_lo = ctx.gamma.gamma_at(c_lo)
    below = bool(np.all(g_lo <= gam_lo * (1.0 + 1e-12)))
    dbelow = bool(np.all(dg_lo <= gam_lo * (1.0 + 1e-12)))
    cs_all = np.exp(rng.uniform(np.log(2.0 ** -39), np.log(1.0 - 1e-9), 1000))
    s_min = float(np.min(g_eval(ctx.gfun, cs_all, order=1)))
    part_err = float(
        np.max(np.abs(partition_sum(np.exp(rng.uniform(np.log(2.0 ** -39), 0.0, 1000))) - 1.0))
    )

    cloud_sub = ctx.attractor_cloud[
        rng.choice(len(ctx.attractor_cloud), size=min(500, len(ctx.attractor_cloud)), replace=False)
    ]
    psi_cloud = psi_many(ctx, np.full(len(cloud_sub), SIDE_A, dtype=np.int8), cloud_sub)
    rep_sub = ctx.repeller_cloud[
        rng.choice(len(ctx.repeller_cloud), size=min(500, len(ctx.repeller_cloud)), replace=False)
    ]
    psi_rep = psi_many(ctx, np.full(len(rep_sub), SIDE_R, dtype=np.int8), rep_sub)
    min_on_attr = bool(
        np.max(psi_cloud) <= np.min(psi0) + 1e-12 and np.min(psi_rep) >= np.max(psi0) - 1e-12
    )

    return EnergyReport(
        samples=len(pts),
        decrease_violations=violations,
        worst_margin=worst,
        grad_distances=tuple(grad_distances),
        grad_magnitudes=tuple(mags),
        grad_decreasing=grad_ok,
        g_identity_max_err=g_id_err,
        g_below_gamma=below,
        dg_below_gamma=dbelow,
        s_min=s_min,
        partition_max_err=part_err,
        psi_cloud_variance=float(np.var(psi_cloud)),
        min_on_attractor=min_on_attr,
    )
