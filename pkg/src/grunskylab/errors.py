"""Exception hierarchy shared by all modules."""


class GrunskyLabError(Exception):
    """Base class for every error raised by this package."""


class NormalizationError(GrunskyLabError, ValueError):
    pass


class TruncationError(GrunskyLabError, ValueError):
    pass


class SymmetryError(GrunskyLabError, ValueError):
    pass


class DomainError(GrunskyLabError, ValueError):
    pass


class SingularityError(GrunskyLabError, ArithmeticError):
    pass


class UnboundedNormError(GrunskyLabError, ArithmeticError):
    pass


class IntegrationError(GrunskyLabError, ArithmeticError):
    """ODE integration failed; ``location`` holds the offending point if known."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class HypothesisViolation(GrunskyLabError):
    pass


class NotQuasiconformal(GrunskyLabError, ValueError):
    pass


class ConvergenceError(GrunskyLabError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotConformalThere(GrunskyLabError, ValueError):
    pass


class NoRootError(GrunskyLabError, ValueError):
    pass
