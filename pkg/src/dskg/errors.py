"""Exception types raised across the package."""


class DskgError(Exception):
    """Base class for every error raised by dskg."""


class DomainError(DskgError, ValueError):
    """An argument lies outside the region where the operation is defined."""


class NonConvergence(DskgError, ArithmeticError):
    """A series or iteration did not reach the requested tolerance."""


class CFLViolation(DskgError):
    pass


class QuadratureUnderResolved(DskgError):
    """Doubling the quadrature changed an output by more than the allowed amount."""


class QuadratureFailure(DskgError):
    pass


class InsufficientSamples(DskgError, ValueError):
    pass


class NoContraction(DskgError):
    """Picard iteration stopped contracting (distance ratio >= 1 three times running)."""


class ForbiddenInterval(DskgError):
    """Mass lies in (sqrt(n^2-1)/2, n/2) and the Cauchy data has psi0 != 0."""


class LateWindowUnderflow(DskgError):
    pass


class ConfigError(DskgError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = [str(d) for d in self.diagnostics]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
