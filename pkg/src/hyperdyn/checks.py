"""Named system checks shared by the service, the CLI, and the test suite.

Each check returns a CheckResult with the worst residual and the offending
sample so a failure names what actually broke.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gluing as gl
from . import product as pr
from .energy import partition_sum


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    worst_sample: tuple
    detail: str

    def summary(self):
        state = "ok" if self.passed else "FAILED"
        return (
            f"check {self.name}: {state} (max residual {self.max_residual:.3e}"
            f" vs tol {self.tolerance:.1e}); {self.detail}"
        )


def _wrapped_residual(a, b):
    d = np.abs(a - b)
    d[:, :2] = np.minimum(d[:, :2], 1.0 - d[:, :2])
    return np.linalg.norm(d, axis=-1)


def check_profile(sys, n_z=100):
    """Profile identities: mu/tau endpoints, fixed points, height identity."""
    prof = gl.profile(sys)
    lam = sys.lam
    res = {
        "mu(lam^-4)": abs(prof.mu(lam ** -4) - 0.0),
        "mu(lam^-3)": abs(prof.mu(lam ** -3) - 1.0),
        "tau(0)-1": abs(prof.tau(0.0) - 1.0),
        "tau(1)": abs(prof.tau(1.0) - 0.0),
        "kappa(r*)-r*": abs(prof.kappa(prof.r_star) - prof.r_star),
        "tau(t*)-t*": abs(prof.tau(prof.t_star) - prof.t_star),
    }
    zs = np.linspace(-2.0, 2.0, n_z)
    res["zeta(t*)-id"] = float(np.max(np.abs(prof.zeta(prof.t_star, zs) - zs)))
    worst = max(res, key=res.get)
    tol = sys.tol.fix_tol
    return CheckResult(
        name="profile",
        passed=all(v < tol for v in res.values()),
        max_residual=float(res[worst]),
        tolerance=tol,
        worst_sample=(worst,),
        detail=f"r_star={prof.r_star:.12g}, t_star={prof.t_star:.12g}",
    )


def check_commutation(sys, samples=10000, rng=None):
    """Gluing commutation on the inner shell boundary leaf."""
    rng = np.random.default_rng(0) if rng is None else rng
    pts = pr.sample_leaf(sys, 1.0, samples, rng)
    lhs = pr.phi_apply(sys, "A", gl.h_map(sys, pts))
    rhs = gl.h_map(sys, pr.phi_apply(sys, "R", pts))
    res = _wrapped_residual(lhs, rhs)
    i = int(np.argmax(res))
    tol = 1e-9
    return CheckResult(
        name="commutation",
        passed=bool(res[i] < tol),
        max_residual=float(res[i]),
        tolerance=tol,
        worst_sample=tuple(pts[i]),
        detail=f"{samples} samples of the inner boundary leaf",
    )


def check_trapping(sys, samples=10000, rng=None):
    """Forward image of the trapping boundary must have positive margin."""
    rng = np.random.default_rng(0) if rng is None else rng
    pts = pr.sample_trapping_boundary(sys, samples, rng)
    margins = pr.trapping_margin(sys, pr.phi_apply(sys, "A", pts))
    i = int(np.argmin(margins))
    return CheckResult(
        name="trapping",
        passed=bool(margins[i] > 0.0),
        max_residual=float(-margins[i]),
        tolerance=0.0,
        worst_sample=tuple(pts[i]),
        detail=f"min image margin {margins[i]:.6f} over {samples} boundary samples",
    )


def check_theta(sys, samples=10000, rng=None):
    """Equivariance of the straightening map on the outer boundary leaf."""
    rng = np.random.default_rng(0) if rng is None else rng
    pts = pr.sample_leaf(sys, 0.0, samples, rng, cylinder_frac=0.34)
    lhs = gl.theta_map(sys, pr.phi_apply(sys, "A", pts))
    rhs = pr.phi_apply(sys, "A", gl.theta_map(sys, pts))
    res = _wrapped_residual(lhs, rhs)
    i = int(np.argmax(res))
    tol = 1e-9
    return CheckResult(
        name="theta",
        passed=bool(res[i] < tol),
        max_residual=float(res[i]),
        tolerance=tol,
        worst_sample=tuple(pts[i]),
        detail=f"{samples} samples across all three leaf parts",
    )


def check_partition(samples=1000, rng=None):
    """Partition of unity sums to one on the truncation-covered range."""
    rng = np.random.default_rng(0) if rng is None else rng
    xs = np.exp(rng.uniform(np.log(2.0 ** -39), 0.0, samples))
    err = np.abs(partition_sum(xs) - 1.0)
    i = int(np.argmax(err))
    tol = 1e-12
    return CheckResult(
        name="partition",
        passed=bool(err[i] < tol),
        max_residual=float(err[i]),
        tolerance=tol,
        worst_sample=(float(xs[i]),),
        detail=f"{samples} log-uniform samples of [2^-39, 1]",
    )


CHECKS = {
    "profile": check_profile,
    "commutation": check_commutation,
    "trapping": check_trapping,
    "theta": check_theta,
    "partition": check_partition,
}


def run_check(sys, name, samples=10000, rng=None):
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}; available: {sorted(CHECKS)}")
    if name == "profile":
        return check_profile(sys)
    if name == "partition":
        return check_partition(samples=min(samples, 10000), rng=rng)
    return CHECKS[name](sys, samples=samples, rng=rng)
