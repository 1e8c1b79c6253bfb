"""Exception types shared across the package.

Every error carries enough context to produce a single-line diagnostic;
the CLI maps the two families below onto distinct exit codes.
"""


class HopfLabError(Exception):
    """Base class for all package errors."""


class ConfigError(HopfLabError, ValueError):
    """Invalid input specification (bad profile, body, field, config key)."""


class NumericalError(HopfLabError, RuntimeError):
    """A computation could not produce a trustworthy result."""


class OutOfRange(ConfigError):
    pass


class NotDini(ConfigError):
    pass


class NoFitWithinRange(NumericalError):
    pass


class ResolutionTooCoarse(NumericalError):
    pass


class EmptyShrunkenSet(NumericalError):
    pass


class DisconnectedShrunkenSet(NumericalError):
    pass


class EllipticityViolation(ConfigError):
    def __init__(self, point, lam_min, lam_max, nu):
        self.point = tuple(float(v) for v in point)
        self.lam_min = float(lam_min)
        self.lam_max = float(lam_max)
        self.nu = float(nu)
        super().__init__(
            f"ellipticity nu={nu:g} violated at x={self.point}: "
            f"eigenvalues [{lam_min:.6g}, {lam_max:.6g}]"
        )


class NonMonotoneStencil(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"no convergence after {self.iterations} iterations "
            f"(relative residual {self.residual:.3e})"
        )


class OutOfDomain(ConfigError):
    pass


class SingularPoint(NumericalError):
    pass


class InsufficientResolution(NumericalError):
    pass


class DegenerateReference(NumericalError):
    pass
