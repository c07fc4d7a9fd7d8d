"""Shared scalar/vector numerics: bracketed root finding, adaptive Simpson
quadrature, and central-difference Jacobians.

All routines are pure and reentrant; nothing here holds mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MaxDepth, NoSignChange


@dataclass(frozen=True)
class Tolerances:
    """Tolerance policy shared by every module.

    eq_tol   identity / equality checks
    fix_tol  fixed points and roots
    quad_tol adaptive quadrature target
    fd_step  central finite-difference step
    """

    eq_tol: float = 1e-9
    fix_tol: float = 1e-12
    quad_tol: float = 1e-8
    fd_step: float = 1e-6

    def __post_init__(self):
        for name in ("eq_tol", "fix_tol", "quad_tol", "fd_step"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.fd_step ** 2 <= np.finfo(float).eps:
            raise ValueError("fd_step^2 must exceed machine epsilon")


def bisect(f, lo, hi, tol=1e-12, max_iter=200):
    """Root of a continuous scalar f on [lo, hi] by bisection.

    Requires f(lo) * f(hi) < 0; returns the midpoint of the final bracket
    once its width is <= tol.
    """
    lo, hi = float(lo), float(hi)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NoSignChange(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid == lo or mid == hi:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def bisect_vec(f, lo, hi, iters=56):
    """Vectorized bisection: f maps arrays to arrays elementwise.

    lo/hi are bracketing arrays (sign change assumed per element); runs a
    fixed number of halvings, enough to reach ~1e-16 from O(1) brackets.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = flo * fm > 0.0
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def integrate(f, a, b, tol=1e-8, max_depth=40):
    """Adaptive Simpson quadrature of f over [a, b] with error target tol."""
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, fa, m, fm, b, fb, whole, tol, max_depth)


def _simpson_rec(f, a, fa, m, fm, b, fb, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0:
        raise MaxDepth(f"adaptive Simpson exceeded depth cap on [{a}, {b}]")
    half = 0.5 * tol
    return _simpson_rec(f, a, fa, lm, flm, m, fm, left, half, depth - 1) + _simpson_rec(
        f, m, fm, rm, frm, b, fb, right, half, depth - 1
    )


def jacobian_fd(fn, p, h=1e-6, wrap=None):
    """Central-difference Jacobian of fn at p, O(h^2).

    fn maps length-n vectors to length-m vectors.  `wrap` optionally lists
    output components living on the unit circle; their differences are
    reduced to the centered representative in [-0.5, 0.5).
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        d = np.asarray(fn(p + e), dtype=float) - np.asarray(fn(p - e), dtype=float)
        if wrap:
            for j in wrap:
                d[j] = (d[j] + 0.5) % 1.0 - 0.5
        cols.append(d / (2.0 * h))
    return np.stack(cols, axis=-1)
