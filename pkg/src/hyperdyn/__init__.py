"""Numerical laboratory for 3-diffeomorphisms glued from a surface attractor
and repeller, with transversality scanning and energy-function certification."""

from .numerics import Tolerances, bisect, integrate, jacobian_fd
from .system import SurgerySystem, build_system

__all__ = [
    "Tolerances",
    "bisect",
    "integrate",
    "jacobian_fd",
    "SurgerySystem",
    "build_system",
]
