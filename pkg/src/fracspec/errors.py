"""Exception types raised by the compute and I/O layers."""


class FracspecError(Exception):
    """Base class for all package errors."""


class GridMismatch(FracspecError):
    """Operands were built on different grids or orders."""


class SpectralCollision(FracspecError):
    """A resolvent parameter fell within tol_gap of an eigenvalue."""

    def __init__(self, lam, nearest, gap):
        self.lam = lam
        self.nearest = nearest
        self.gap = gap
        super().__init__(f"spectral parameter {lam} within {gap:.3e} of eigenvalue {nearest}")


class NoConvergence(FracspecError):
    """An extrapolated limit stalled above the requested tolerance."""

    def __init__(self, residual, tol):
        self.residual = residual
        self.tol = tol
        super().__init__(f"limit residual {residual:.3e} exceeds tolerance {tol:.3e}")


class EigensolverFailure(FracspecError):
    """Eigen-residuals exceeded the accepted bound."""

    def __init__(self, residuals):
        self.residuals = residuals
        super().__init__(f"eigen-residual too large: max {max(residuals):.3e}")


class DegenerateEigenvalue(FracspecError):
    """Perturbation formulas need a simple eigenvalue; the gap was too small."""


class LineSearchFailure(FracspecError):
    """No damping factor produced a decrease of the objective."""


class ObservabilityFailure(FracspecError):
    """No admissible constant achieved the observability bound; likely a trace bug."""


class CacheError(FracspecError):
    """Cache file unreadable, corrupted, or written by an incompatible version."""


class ConfigError(FracspecError):
    """Experiment configuration failed validation."""
