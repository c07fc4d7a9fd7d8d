"""Immutable parameter bundle for one surgered system and its constructor."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartOverlap
from .numerics import Tolerances
from .torus import eigen_data, nu_profile

GLUING_KINDS = ("plain_H", "generic_Htilde")
COMPOSITION_ORDERS = ("blend_after_linear", "linear_after_blend")
PHI_ORIENTATIONS = ("decreasing", "paper")


@dataclass(frozen=True)
class SurgerySystem:
    """Everything the maps need: matrix, eigendata, chart, region radii, flags.

    hole_radius = lam^-4 and z_halfwidth = lam^-3 describe the trapping
    region: the solid torus complement (torus minus the chart disk of
    hole_radius) times [-z_halfwidth, z_halfwidth].
    """

    C: np.ndarray
    C_inv: np.ndarray
    lam: float
    v_u: np.ndarray
    v_s: np.ndarray
    rho0: float
    E: np.ndarray
    E_inv: np.ndarray
    hole_radius: float
    z_halfwidth: float
    gluing_kind: str = "plain_H"
    n_exponent: int = 1
    composition_order: str = "blend_after_linear"
    phi_orientation: str = "decreasing"
    tol: Tolerances = field(default_factory=Tolerances)
    nu_a: float = 0.0
    nu_b: float = 0.0
    nu_floor: float = 0.0
    sig_mid: float = 0.0


def build_system(
    C,
    rho0=0.2,
    gluing_kind="plain_H",
    n_exponent=1,
    composition_order="blend_after_linear",
    phi_orientation="decreasing",
    tol=None,
):
    """Validate inputs and assemble an immutable SurgerySystem."""
    if gluing_kind not in GLUING_KINDS:
        raise ValueError(f"gluing_kind must be one of {GLUING_KINDS}")
    if composition_order not in COMPOSITION_ORDERS:
        raise ValueError(f"composition_order must be one of {COMPOSITION_ORDERS}")
    if phi_orientation not in PHI_ORIENTATIONS:
        raise ValueError(f"phi_orientation must be one of {PHI_ORIENTATIONS}")
    if not (isinstance(n_exponent, (int, np.integer)) and n_exponent >= 1):
        raise ValueError("n_exponent must be a positive integer")
    tol = tol or Tolerances()

    data = eigen_data(C)
    C = np.asarray(C, dtype=np.int64)
    C_inv = np.array(
        [[C[1, 1], -C[0, 1]], [-C[1, 0], C[0, 0]]], dtype=np.int64
    )
    E = rho0 * np.column_stack([data.v_s, data.v_u])
    E_inv = np.linalg.inv(E)
    _check_chart_injective(E, E_inv)

    lam = data.lam
    hole_radius = lam ** -4
    z_halfwidth = lam ** -3
    if not 0.0 < hole_radius < z_halfwidth < 2.0 * rho0:
        raise ValueError("trapping radii must satisfy 0 < lam^-4 < lam^-3 < 2*rho0")
    nu_a, nu_b, nu_floor = nu_profile(lam)

    return SurgerySystem(
        C=C,
        C_inv=C_inv,
        lam=lam,
        v_u=data.v_u,
        v_s=data.v_s,
        rho0=float(rho0),
        E=E,
        E_inv=E_inv,
        hole_radius=hole_radius,
        z_halfwidth=z_halfwidth,
        gluing_kind=gluing_kind,
        n_exponent=int(n_exponent),
        composition_order=composition_order,
        phi_orientation=phi_orientation,
        tol=tol,
        nu_a=nu_a,
        nu_b=nu_b,
        nu_floor=nu_floor,
        sig_mid=(lam ** -3 + 1.0) / 2.0,
    )


def _check_chart_injective(E, E_inv):
    """Chart is injective on the radius-2 disk iff no nonzero lattice vector
    pulls back into the radius-4 difference disk."""
    smax = np.linalg.norm(E, 2)
    kmax = int(np.ceil(4.0 * smax)) + 1
    ks = [
        np.array([i, j], dtype=float)
        for i in range(-kmax, kmax + 1)
        for j in range(-kmax, kmax + 1)
        if (i, j) != (0, 0)
    ]
    pulled = np.linalg.norm(np.asarray(ks) @ E_inv.T, axis=1)
    if np.min(pulled) <= 4.0 * (1.0 + 1e-9):
        raise ChartOverlap(
            "chart scale rho0 too large: lattice translate meets the chart disk"
        )
