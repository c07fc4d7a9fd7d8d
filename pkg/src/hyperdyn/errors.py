"""Exception types raised by the numerical core."""


class HyperdynError(Exception):
    """Base class for all package-specific errors."""


class NoSignChange(HyperdynError):
    """Bisection bracket does not straddle a root."""


class MaxDepth(HyperdynError):
    """Adaptive quadrature exceeded its refinement depth cap."""


class NotHyperbolic(HyperdynError):
    """Matrix trace fails the hyperbolicity / positivity requirement."""


class NotUnimodular(HyperdynError):
    """Matrix determinant is not +1."""


class ChartOverlap(HyperdynError):
    """Local chart of the requested scale is not injective on the torus."""


class OutOfDomain(HyperdynError):
    """Scalar argument outside the function's domain."""


class OutOfDisk(HyperdynError):
    """Point outside the radius-2 surgery disk."""


class NotInDomain(HyperdynError):
    """Point outside the operation's geometric domain."""


class BadCoords(HyperdynError):
    """Surface coordinates invalid for the requested leaf part."""


class IterationBound(HyperdynError):
    """Equivariant chart transition exceeded its iteration cap."""


class NonWandering(HyperdynError):
    """Point failed to reach the fundamental shell within the cap."""


class InsufficientSamples(HyperdynError):
    """Not enough samples to estimate the requested profile."""


class NegativeEps3(HyperdynError):
    """Normalization coefficient of the smoothing derivative is non-positive."""


class DegenerateFrame(HyperdynError):
    """Pushed-forward tangent vectors are numerically collinear."""


class ConfigError(HyperdynError):
    """Run configuration failed to parse or validate."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__((f"[{', '.join(where)}] " if where else "") + message)
