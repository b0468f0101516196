"""Exception types shared across the package."""


class InvalidParametersError(ValueError):
    """(n, p, N, alpha) outside the admissible range."""


class DegenerateParametersError(ValueError):
    """A closed form divides by zero at these parameters (alpha = 0 or n = 2p)."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical procedure did not reach its tolerance."""

    def __init__(self, message, attained=None):
        super().__init__(message)
        self.attained = attained


class CertificationError(ArithmeticError):
    """A candidate eigenvector failed its residual certificate."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
