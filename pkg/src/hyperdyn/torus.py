"""The 2-torus layer: hyperbolic automorphism, the local surgery chart around
the fixed point O, the sigmoid/blend profile machinery, and the surgered
(derived-from-Anosov) maps.

Torus points are arrays of shape (..., 2) with coordinates in [0, 1)
(half-open fundamental domain).  Chart coordinates (x, y) live on the disk of
radius 2; x runs along the contracting eigendirection, y along the expanding
one, so the unperturbed automorphism reads (x, y) -> (x/lam, lam*y) there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHyperbolic, NotUnimodular, OutOfDisk, OutOfDomain
from .numerics import bisect_vec

_DISK_RADIUS = 2.0
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class AnosovData:
    """Expanding eigenvalue and unit eigendirections of a hyperbolic matrix."""

    lam: float
    v_u: np.ndarray
    v_s: np.ndarray


def check_matrix(C):
    """Validate a 2x2 integer matrix: det must be +1, trace > 2."""
    C = np.asarray(C)
    if C.shape != (2, 2):
        raise ValueError("matrix must be 2x2")
    if not np.issubdtype(C.dtype, np.integer):
        if not np.all(C == np.round(C)):
            raise ValueError("matrix entries must be integers")
        C = C.astype(np.int64)
    det = int(C[0, 0]) * int(C[1, 1]) - int(C[0, 1]) * int(C[1, 0])
    if det != 1:
        raise NotUnimodular(f"determinant is {det}, must be +1")
    tr = int(C[0, 0]) + int(C[1, 1])
    if abs(tr) <= 2:
        raise NotHyperbolic(f"|trace| = {abs(tr)} <= 2, matrix is not hyperbolic")
    if tr < 0:
        raise NotHyperbolic("negative trace not supported (positivity convention)")
    return C.astype(np.int64)


def eigen_data(C):
    """Eigenvalue lambda > 1 and unit eigendirections of a hyperbolic matrix."""
    C = check_matrix(C)
    w, V = np.linalg.eig(C.astype(float))
    iu = int(np.argmax(np.abs(w)))
    js = 1 - iu
    lam = float(np.abs(w[iu]))
    v_u = V[:, iu] / np.linalg.norm(V[:, iu])
    v_s = V[:, js] / np.linalg.norm(V[:, js])
    # deterministic orientation: first nonzero component positive
    if v_u[0] < 0 or (v_u[0] == 0 and v_u[1] < 0):
        v_u = -v_u
    if v_s[0] < 0 or (v_s[0] == 0 and v_s[1] < 0):
        v_s = -v_s
    for vec, val in ((v_u, lam), (v_s, 1.0 / lam)):
        res = np.linalg.norm(C @ vec - val * vec)
        if res > 1e-10:
            raise NotHyperbolic(f"eigenpair residual {res:.2e} too large")
    return AnosovData(lam=lam, v_u=v_u, v_s=v_s)


def mod1(w):
    """Reduce to the half-open fundamental domain [0, 1)^2.

    np.mod(x, 1.0) can round up to exactly 1.0 for tiny negative x; fold
    that back so the half-open convention holds everywhere.
    """
    out = np.mod(np.asarray(w, dtype=float), 1.0)
    return np.where(out >= 1.0, 0.0, out)


def anosov_apply(sys, w, inverse=False):
    """Action of the automorphism (or its inverse) on torus points."""
    M = sys.C_inv if inverse else sys.C
    return mod1(np.asarray(w, dtype=float) @ M.T.astype(float))


def chart_coords(sys, w):
    """Chart coordinates of the centered lift of w (meaningful up to radius 2)."""
    w = np.asarray(w, dtype=float)
    lift = w - np.round(w)
    return lift @ sys.E_inv.T


def chart_point(sys, xi):
    """Torus point of chart coordinates xi."""
    return mod1(np.asarray(xi, dtype=float) @ sys.E.T)


def chart_radius(sys, w):
    """Chart radius of w; +inf for points outside the radius-2 chart disk."""
    r = np.linalg.norm(chart_coords(sys, w), axis=-1)
    return np.where(r <= _DISK_RADIUS, r, np.inf)


def _split(x):
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _join(out, scalar):
    return float(out[0]) if scalar else out


def sigmoid(sys, x):
    """Sigmoid profile: 0 up to lam^-3, 1 from 1 on, strictly rising between."""
    x, scalar = _split(x)
    a = sys.lam ** -3
    out = np.where(x >= 1.0, 1.0, 0.0)
    mid = (x > a) & (x < 1.0)
    if np.any(mid):
        xm = x[mid]
        denom = (xm - a) ** 2 * (xm - 1.0) ** 2
        q = np.clip((sys.sig_mid - xm) / denom, -700.0, 700.0)
        out[mid] = 1.0 / (1.0 + np.exp(q))
    return _join(out, scalar)


def sigmoid_deriv(sys, x):
    """Derivative of the sigmoid (zero outside the transition interval)."""
    x, scalar = _split(x)
    a = sys.lam ** -3
    out = np.zeros_like(x)
    mid = (x > a) & (x < 1.0)
    if np.any(mid):
        xm = x[mid]
        D = (xm - a) ** 2 * (xm - 1.0) ** 2
        Dp = 2.0 * (xm - a) * (xm - 1.0) ** 2 + 2.0 * (xm - a) ** 2 * (xm - 1.0)
        q = np.clip((sys.sig_mid - xm) / D, -700.0, 700.0)
        s = 1.0 / (1.0 + np.exp(q))
        out[mid] = s * (1.0 - s) * (D + (sys.sig_mid - xm) * Dp) / D ** 2
    return _join(out, scalar)


def nu_profile(lam):
    """Parameters (a, b, floor) of the normalized slope profile of nu.

    The blend branch of nu is defined through its derivative: lam^2 near the
    left seam, the floor value in the middle, 1 at the right seam, joined by
    quintic smoothsteps so nu is C^2 at both seams, strictly increasing, and
    integrates exactly to the required endpoint value nu(1) = 1.
    """
    L = 1.0 - lam ** -3
    target = (1.0 - 1.0 / lam) / L
    a = min(0.1, target / lam ** 2)
    b = min(0.2, target / 2.0)
    floor = (target - a * lam ** 2 / 2.0 - b / 2.0) / (1.0 - (a + b) / 2.0)
    if not floor > 0.0:
        raise ValueError("slope profile degenerate; lambda too extreme")
    return a, b, floor


def _smoothstep(v):
    return v ** 3 * (10.0 - 15.0 * v + 6.0 * v ** 2)


def _smoothstep_int(v):
    # antiderivative of the quintic smoothstep, zero at 0
    return v ** 4 * (2.5 - 3.0 * v + v ** 2)


def _nu_pos(sys, ax):
    """nu on [0, 2] (nonnegative arguments)."""
    lam = sys.lam
    x1 = lam ** -3
    L = 1.0 - x1
    a, b, s = sys.nu_a, sys.nu_b, sys.nu_floor
    u = np.clip((ax - x1) / L, 0.0, 1.0)
    left = lam ** 2 * u + (s - lam ** 2) * a * _smoothstep_int(np.minimum(u, a) / a)
    base_left = a * (lam ** 2 + s) / 2.0
    mid = base_left + s * (np.clip(u, a, 1.0 - b) - a)
    base_mid = base_left + s * (1.0 - a - b)
    vr = np.clip(u - (1.0 - b), 0.0, b) / b
    right = base_mid + s * np.clip(u - (1.0 - b), 0.0, b) + (1.0 - s) * b * _smoothstep_int(vr)
    integral = np.where(u <= a, left, np.where(u <= 1.0 - b, mid, right))
    blend = 1.0 / lam + L * integral
    return np.where(ax <= x1, lam ** 2 * ax, np.where(ax >= 1.0, ax, blend))


def _nu_pos_deriv(sys, ax):
    lam = sys.lam
    x1 = lam ** -3
    L = 1.0 - x1
    a, b, s = sys.nu_a, sys.nu_b, sys.nu_floor
    u = np.clip((ax - x1) / L, 0.0, 1.0)
    m = np.where(
        u <= a,
        lam ** 2 + (s - lam ** 2) * _smoothstep(np.minimum(u, a) / a),
        np.where(u <= 1.0 - b, s, s + (1.0 - s) * _smoothstep(np.clip(u - (1.0 - b), 0.0, b) / b)),
    )
    return np.where(ax <= x1, lam ** 2, np.where(ax >= 1.0, 1.0, m))


def nu(sys, x):
    """Odd, strictly increasing surgery profile: lam^2*x near 0, identity past 1."""
    x, scalar = _split(x)
    if np.any(np.abs(x) > 2.0 + _EDGE_TOL):
        raise OutOfDomain("nu is defined on [-2, 2]")
    ax = np.minimum(np.abs(x), 2.0)
    return _join(np.sign(x) * _nu_pos(sys, ax), scalar)


def nu_deriv(sys, x):
    x, scalar = _split(x)
    return _join(_nu_pos_deriv(sys, np.minimum(np.abs(x), 2.0)), scalar)


def nu_inv(sys, y):
    """Inverse of nu on [-2, 2]."""
    y, scalar = _split(y)
    if np.any(np.abs(y) > 2.0 + _EDGE_TOL):
        raise OutOfDomain("nu_inv is defined on [-2, 2]")
    lam = sys.lam
    ay = np.minimum(np.abs(y), 2.0)
    out = np.where(ay >= 1.0, ay, ay / lam ** 2)
    mid = (ay > 1.0 / lam) & (ay < 1.0)
    if np.any(mid):
        target = ay[mid]
        lo = np.full(target.shape, lam ** -3)
        hi = np.ones(target.shape)
        out[mid] = bisect_vec(lambda x: _nu_pos(sys, x) - target, lo, hi)
    return _join(np.sign(y) * out, scalar)


def nu_inv_deriv(sys, y):
    y, scalar = _split(y)
    x = np.abs(np.atleast_1d(nu_inv(sys, y)))
    return _join(1.0 / _nu_pos_deriv(sys, x), scalar)


def gamma_A(sys, x, y):
    """Profile stretching the contracting coordinate, faded out in |y|."""
    s = sigmoid(sys, np.abs(y))
    return s * x + (1.0 - s) * nu(sys, x)


def gamma_R(sys, x, y):
    """Profile compressing the expanding coordinate, faded out in |x|."""
    s = sigmoid(sys, np.abs(x))
    return s * y + (1.0 - s) * nu_inv(sys, y)


def _check_disk(xy):
    r2 = np.sum(np.asarray(xy, dtype=float) ** 2, axis=-1)
    if np.any(r2 > _DISK_RADIUS ** 2 * (1.0 + 1e-9)):
        raise OutOfDisk("point outside the radius-2 surgery disk")


def blend_disk(sys, kind, xy, check=True):
    """Disk diffeomorphism: 'A', 'R', or a numeric blend parameter t in [0,1].

    Identity on the boundary circle of radius 2; equals (lam^2 x, y) /
    (x, y/lam^2) on the disk of radius lam^-3 for kinds A / R.
    """
    xy = np.asarray(xy, dtype=float)
    if check:
        _check_disk(xy)
    x, y = xy[..., 0], xy[..., 1]
    if isinstance(kind, str):
        if kind == "A":
            return np.stack([gamma_A(sys, x, y), y], axis=-1)
        if kind == "R":
            return np.stack([x, gamma_R(sys, x, y)], axis=-1)
        raise ValueError(f"unknown blend kind {kind!r}")
    t = np.asarray(kind, dtype=float)
    bA = np.stack([gamma_A(sys, x, y), y], axis=-1)
    bR = np.stack([x, gamma_R(sys, x, y)], axis=-1)
    return t[..., None] * bR + (1.0 - t[..., None]) * bA


def _gamma_A_dx(sys, x, y):
    s = sigmoid(sys, np.abs(y))
    return s + (1.0 - s) * nu_deriv(sys, x)


def _gamma_A_dy(sys, x, y):
    return sigmoid_deriv(sys, np.abs(y)) * np.sign(y) * (x - nu(sys, x))


def _gamma_R_dy(sys, x, y):
    s = sigmoid(sys, np.abs(x))
    return s + (1.0 - s) * nu_inv_deriv(sys, y)


def _gamma_R_dx(sys, x, y):
    return sigmoid_deriv(sys, np.abs(x)) * np.sign(x) * (y - nu_inv(sys, y))


def blend_disk_inv(sys, kind, xy, check=True):
    """Inverse of blend_disk on the radius-2 disk.

    The expanding-side inverse substitutes u for the inverse profile value,
    so every residual evaluation is closed form (no nested inversion).
    """
    xy = np.asarray(xy, dtype=float)
    if check:
        _check_disk(xy)
    X, Y = xy[..., 0], xy[..., 1]
    if isinstance(kind, str):
        if kind == "A":
            s = sigmoid(sys, np.abs(Y))
            x = bisect_vec(
                lambda x_: s * x_ + (1.0 - s) * nu(sys, x_) - X,
                np.full(np.shape(X), -2.0),
                np.full(np.shape(X), 2.0),
            )
            return np.stack([x, Y], axis=-1)
        if kind == "R":
            # solve sigma*nu(u) + (1-sigma)*u = Y, then y = nu(u)
            s = sigmoid(sys, np.abs(X))
            u = bisect_vec(
                lambda u_: s * nu(sys, u_) + (1.0 - s) * u_ - Y,
                np.full(np.shape(Y), -2.0),
                np.full(np.shape(Y), 2.0),
            )
            return np.stack([X, nu(sys, u)], axis=-1)
        raise ValueError(f"unknown blend kind {kind!r}")
    t = np.asarray(kind, dtype=float)
    t0 = np.broadcast_to(t, X.shape).astype(float)
    return _blend_inv_newton(sys, t0, xy)


def _blend_residual_xu(sys, t, x, u, target):
    """Blend residual in (x, u) variables with y = nu(u) (all closed form)."""
    nu_u = nu(sys, u)
    s_y = sigmoid(sys, np.abs(nu_u))
    s_x = sigmoid(sys, np.abs(x))
    f1 = t * x + (1.0 - t) * (s_y * x + (1.0 - s_y) * nu(sys, x))
    f2 = t * (s_x * nu_u + (1.0 - s_x) * u) + (1.0 - t) * nu_u
    return np.stack([f1 - target[..., 0], f2 - target[..., 1]], axis=-1)


def _blend_inv_newton(sys, t, target, iters=80, tol=1e-13):
    """Solve t*B_R(p) + (1-t)*B_A(p) = target by backtracked Newton.

    Runs in (x, u) variables with y = nu(u) so no inverse-profile values are
    needed inside the loop.  Plain Newton 2-cycles between the steep stretch
    zone near the origin and the shallow floor of the profile, so each point
    backtracks until its residual norm actually decreases.
    """
    x = np.clip(np.array(target[..., 0], dtype=float), -2.0, 2.0)
    u = np.clip(
        np.where(
            np.abs(target[..., 1]) <= 1.0 / sys.lam,
            target[..., 1] / sys.lam ** 2,
            target[..., 1],
        ),
        -2.0,
        2.0,
    )
    F = _blend_residual_xu(sys, t, x, u, target)
    for _ in range(iters):
        res = np.linalg.norm(F, axis=-1)
        if np.max(res) < tol:
            break
        nu_u = nu(sys, u)
        nu_du = nu_deriv(sys, u)
        s_y = sigmoid(sys, np.abs(nu_u))
        s_x = sigmoid(sys, np.abs(x))
        ds_y = sigmoid_deriv(sys, np.abs(nu_u)) * np.sign(nu_u) * nu_du
        ds_x = sigmoid_deriv(sys, np.abs(x)) * np.sign(x)
        j11 = t + (1.0 - t) * (s_y + (1.0 - s_y) * nu_deriv(sys, x))
        j12 = (1.0 - t) * ds_y * (x - nu(sys, x))
        j21 = t * ds_x * (nu_u - u)
        j22 = t * (s_x * nu_du + 1.0 - s_x) + (1.0 - t) * nu_du
        det = j11 * j22 - j12 * j21
        det = np.where(np.abs(det) < 1e-14, 1e-14, det)
        dx = (j22 * F[..., 0] - j12 * F[..., 1]) / det
        du = (-j21 * F[..., 0] + j11 * F[..., 1]) / det
        alpha = np.ones_like(res)
        for _ in range(40):
            cx = np.clip(x - alpha * dx, -2.0, 2.0)
            cu = np.clip(u - alpha * du, -2.0, 2.0)
            F_cand = _blend_residual_xu(sys, t, cx, cu, target)
            worse = np.linalg.norm(F_cand, axis=-1) > (1.0 - 1e-4 * alpha) * res
            if not np.any(worse & (res >= tol)):
                break
            alpha = np.where(worse, 0.5 * alpha, alpha)
        x, u, F = cx, cu, F_cand
    return np.stack([x, nu(sys, u)], axis=-1)


def da_apply(sys, kind, w, inverse=False):
    """Surgered automorphism: the blend acts in the chart after the linear map.

    kind 'A' / 'R' / numeric t selects the disk modification.  Outside the
    chart image of the disk the map agrees with the automorphism exactly.
    With composition_order == 'linear_after_blend' the factors swap.
    """
    w = np.asarray(w, dtype=float)
    blend_first = sys.composition_order == "linear_after_blend"
    if not inverse:
        if blend_first:
            return anosov_apply(sys, _chart_blend(sys, kind, w, inv=False))
        return _chart_blend(sys, kind, anosov_apply(sys, w), inv=False)
    if blend_first:
        return _chart_blend(sys, kind, anosov_apply(sys, w, inverse=True), inv=True)
    return anosov_apply(sys, _chart_blend(sys, kind, w, inv=True), inverse=True)


def _chart_blend(sys, kind, w, inv):
    xi = chart_coords(sys, w)
    r = np.linalg.norm(xi, axis=-1)
    mask = r <= _DISK_RADIUS
    if not np.any(mask):
        return w
    out = np.array(w, dtype=float)
    sub_kind = kind
    if not isinstance(kind, str):
        karr = np.broadcast_to(np.asarray(kind, dtype=float), r.shape)
        sub_kind = karr[mask]
    fn = blend_disk_inv if inv else blend_disk
    out[mask] = chart_point(sys, fn(sys, sub_kind, xi[mask], check=False))
    return out


def da_power(sys, kind, w, n):
    """n-fold composition of da_apply (negative n uses the inverse)."""
    out = np.asarray(w, dtype=float)
    for _ in range(abs(int(n))):
        out = da_apply(sys, kind, out, inverse=n < 0)
    return out
